import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bootviz.bootstrap import (
    BootstrapConfig,
    ErrorEstimate,
    bootstrap_errors,
    center_rows,
    corrected,
    expected_inclusion,
    load_estimate,
    resample_mask,
    save_estimate,
    substream,
    true_error,
)
from bootviz.phantom import shepp_logan
from bootviz.recon import ReconConfig, fft2
from bootviz.sampling import MaskSpec, apply_mask, make_mask

images = arrays(np.float64, (6, 5), elements=st.floats(-10, 10))


def test_true_error_examples():
    a = np.full((4, 4), 0.3)
    assert not true_error(a, a).any()
    np.testing.assert_array_equal(true_error(np.ones((3, 3)), np.full((3, 3), 0.25)),
                                  np.full((3, 3), 0.75))
    with pytest.raises(ValueError, match="mismatch"):
        true_error(np.ones((3, 3)), np.ones((3, 4)))


@given(images, images)
def test_error_algebra(a, b):
    np.testing.assert_array_equal(true_error(a, b), -true_error(b, a))
    np.testing.assert_array_equal(corrected(a, np.zeros_like(a)), a)
    np.testing.assert_allclose(corrected(a, a - b), b, atol=1e-12)
    np.testing.assert_allclose(corrected(a, b) + b, a, atol=1e-12)


def test_resample_all_rows_subset():
    spec = MaskSpec(retained_fraction=1.0, center_fraction=0.1)
    base = make_mask(spec, 64, 64)
    m = resample_mask(spec, substream(3, 0), 64, 64)
    assert m.retained.sum() < base.retained.sum()
    assert not (m.retained & ~base.retained).any()
    assert m.retained[center_rows(64, 0.1)].all()


def test_resample_deterministic():
    for spec in (MaskSpec(seed=5), MaskSpec(kind="radial", num_spokes=12)):
        a = resample_mask(spec, substream(9, 4), 48, 48)
        b = resample_mask(spec, substream(9, 4), 48, 48)
        assert a == b
        assert not (a.retained & ~make_mask(spec, 48, 48).retained).any()


def test_resample_full_is_full():
    spec = MaskSpec(kind="full")
    assert resample_mask(spec, substream(0, 0), 16, 16).retained.all()


def test_row_inclusion_frequency():
    spec = MaskSpec(retained_fraction=0.25, center_fraction=0.0, seed=11)
    base = make_mask(spec, 128, 128)
    rows = np.array(base.rows)
    assert rows.size == 32
    hits = np.zeros(128)
    for b in range(1000):
        hits += resample_mask(spec, substream(2024, b), 128, 128, base_mask=base).retained[:, 0]
    freq = hits[rows] / 1000
    analytic = 1 - (31 / 32) ** 32
    assert expected_inclusion(32) == pytest.approx(analytic)
    assert np.all(np.abs(freq - analytic) <= 0.05)
    assert not hits[np.setdiff1d(np.arange(128), rows)].any()


def test_radial_spoke_inclusion():
    spec = MaskSpec(kind="radial", num_spokes=20)
    base = make_mask(spec, 64, 64)
    counts = [len(resample_mask(spec, substream(1, b), 64, 64, base_mask=base).angles)
              for b in range(400)]
    assert np.mean(counts) / 20 == pytest.approx(expected_inclusion(20), abs=0.03)


@pytest.fixture(scope="module")
def small_problem():
    x = shepp_logan(32)
    spec = MaskSpec(retained_fraction=0.4, center_fraction=0.1, seed=1)
    m = make_mask(spec, 32, 32)
    return spec, m, apply_mask(fft2(x), m), ReconConfig(iterations=15)


def test_full_sampling_zero_estimate(rng):
    x = rng.random((32, 32))
    spec = MaskSpec(kind="full")
    m = make_mask(spec, 32, 32)
    est = bootstrap_errors(fft2(x), m, spec, ReconConfig(lam=0.0, iterations=10),
                           BootstrapConfig(iterations=5, seed=2))
    assert np.max(np.abs(est.image)) < 1e-9


def test_averaging_structure(small_problem):
    spec, m, y, rcfg = small_problem
    one_a = bootstrap_errors(y, m, spec, rcfg, BootstrapConfig(iterations=1, seed=4))
    one_b = bootstrap_errors(y, m, spec, rcfg, BootstrapConfig(iterations=1, seed=4), start=1)
    two = bootstrap_errors(y, m, spec, rcfg, BootstrapConfig(iterations=2, seed=4))
    np.testing.assert_allclose(two.image, (one_a.image + one_b.image) / 2, atol=1e-14)
    assert np.abs(two.image).max() > 0


def test_linearity_of_averaging(small_problem):
    spec, m, y, rcfg = small_problem
    k = 3
    full = bootstrap_errors(y, m, spec, rcfg, BootstrapConfig(iterations=2 * k, seed=8))
    first = bootstrap_errors(y, m, spec, rcfg, BootstrapConfig(iterations=k, seed=8))
    second = bootstrap_errors(y, m, spec, rcfg, BootstrapConfig(iterations=k, seed=8), start=k)
    np.testing.assert_allclose(full.image, (first.image + second.image) / 2, atol=1e-13)


@pytest.mark.parametrize("kind", ["mask_resample", "residual_resample"])
def test_thread_count_invariance(small_problem, kind):
    spec, m, y, rcfg = small_problem
    bcfg = BootstrapConfig(iterations=6, seed=13, resample_kind=kind)
    ref = bootstrap_errors(y, m, spec, rcfg, bcfg, workers=1).image
    for workers in (3, 8):
        np.testing.assert_array_equal(bootstrap_errors(y, m, spec, rcfg, bcfg, workers=workers).image, ref)


def test_residual_variant_differs(small_problem):
    spec, m, y, rcfg = small_problem
    a = bootstrap_errors(y, m, spec, rcfg, BootstrapConfig(iterations=2, seed=1)).image
    b = bootstrap_errors(y, m, spec, rcfg,
                         BootstrapConfig(iterations=2, seed=1, resample_kind="residual_resample")).image
    assert not np.array_equal(a, b)


def test_radial_bootstrap_runs():
    x = shepp_logan(32)
    spec = MaskSpec(kind="radial", num_spokes=10)
    m = make_mask(spec, 32, 32)
    est = bootstrap_errors(apply_mask(fft2(x), m), m, spec, ReconConfig(iterations=10),
                           BootstrapConfig(iterations=3, seed=0))
    assert est.image.shape == (32, 32) and np.all(np.isfinite(est.image))
    assert est.iterations == 3 and est.fingerprint


def test_config_validation():
    with pytest.raises(ValueError):
        BootstrapConfig(iterations=0)
    with pytest.raises(ValueError):
        BootstrapConfig(resample_kind="jackknife")


def test_estimate_file_round_trip(tmp_path, rng):
    d = rng.normal(scale=0.01, size=(20, 24))
    est = ErrorEstimate(image=d, iterations=7, seed=3, wall_clock=1.5, fingerprint="abc")
    sidecar = save_estimate(est, tmp_path / "boot.png")
    meta = json.loads(sidecar.read_text())
    assert meta["scale"] == np.abs(d).max() and meta["iterations"] == 7
    assert "wall_clock_seconds" not in meta
    back = load_estimate(tmp_path / "boot.png")
    assert np.max(np.abs(back.image - d)) <= meta["scale"] / 32767 / 2 + 1e-15
    zero = ErrorEstimate(image=np.zeros((8, 8)), iterations=1, seed=0)
    save_estimate(zero, tmp_path / "zero.png")
    assert not load_estimate(tmp_path / "zero.png").image.any()
