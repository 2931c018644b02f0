import colorsys
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bootviz.bootstrap import corrected
from bootviz.core_image import gray_to_rgb
from bootviz.viz import (
    ErrorScale,
    OverlayConfig,
    grayscale_error,
    interpolate_colorize,
    overlay_threshold,
    render_panel,
    saturate_colorize,
    signed_colormap,
)

unit = st.floats(0, 1)
signed = st.floats(-1, 1)
recons = arrays(np.float64, (9, 11), elements=unit)
errors = arrays(np.float64, (9, 11), elements=signed)


def hsv_of(rgb):
    return np.array([colorsys.rgb_to_hsv(*px) for px in rgb.reshape(-1, 3)])


def test_grayscale_error():
    s = ErrorScale(2.0)
    assert not (grayscale_error(np.zeros((3, 3)), s) - 0.5).any()
    np.testing.assert_array_equal(grayscale_error(np.array([[2.0, -2.0, 1.0, 9.0]]), s),
                                  [[1.0, 0.0, 0.75, 1.0]])


def test_error_scale():
    assert ErrorScale.of(np.array([[0.1, -0.4]])).max_abs == 0.4
    assert ErrorScale.of(np.zeros((2, 2))).max_abs == 1.0
    with pytest.raises(ValueError):
        ErrorScale(0.0)


def test_overlay_zero_error_is_gray(rng):
    r = rng.random((16, 16))
    np.testing.assert_array_equal(overlay_threshold(r, np.zeros((16, 16))), gray_to_rgb(r))


def test_overlay_magenta_and_cyan_endpoints():
    r = np.full((10, 10), 0.3)
    d = np.zeros((10, 10))
    d[2, 3] = 0.8
    d[7, 7] = -0.8
    out = overlay_threshold(r, d, OverlayConfig(percentile=2.0))
    assert out[2, 3] == pytest.approx((1.0, 0.0, 1.0))
    assert out[7, 7] == pytest.approx((0.0, 1.0, 1.0))
    assert out[0, 0] == pytest.approx((0.3, 0.3, 0.3))


@given(recons, errors, st.sampled_from([1.0, 2.0, 5.0, 30.0]))
def test_overlay_count_bound(r, d, pct):
    out = overlay_threshold(r, d, OverlayConfig(percentile=pct))
    colored = np.any(out != gray_to_rgb(r), axis=-1)
    assert colored.sum() <= math.ceil(pct / 100 * d.size)
    a = np.abs(d)
    if a.max() > 0 and np.sum(a == a.max()) <= pct / 100 * (d.size - 1):
        assert colored.sum() >= 1


@given(errors)
def test_overlay_hue_monotone(d):
    a = np.abs(d)
    assume(a.max() > 0)
    r = np.zeros_like(d)
    out = overlay_threshold(r, d, OverlayConfig(percentile=30.0))
    hit = np.abs(d) > np.percentile(a, 70.0)
    assume(hit.any())
    hues = hsv_of(out[hit])[:, 0] * 360
    hues = np.where(hues < 90, hues + 360, hues)  # keep hues on the 180..300 arc
    expected = 240 + 60 * d[hit] / a.max()
    np.testing.assert_allclose(hues, expected, atol=1e-6)


def test_blurred_overlay_differs():
    r = np.full((32, 32), 0.5)
    d = np.random.default_rng(1).normal(size=(32, 32))
    plain = overlay_threshold(r, d, OverlayConfig(2.0, 0.0))
    blurred = overlay_threshold(r, d, OverlayConfig(2.0, 1.0))
    assert not np.array_equal(plain, blurred)


def test_saturate_examples():
    s = ErrorScale(1.0)
    out = saturate_colorize(np.array([[0.6, 1.0, 0.5]]), np.array([[0.0, 1.0, -1.0]]), s)
    np.testing.assert_allclose(out[0], [[0.6, 0.6, 0.6], [1, 0, 0], [0, 0.5, 0]], atol=1e-12)


def test_interpolate_examples():
    s = ErrorScale(1.0)
    out = interpolate_colorize(np.array([[0.4, 0.8, 0.8]]), np.array([[0.0, 1.0, -1.0]]), s)
    np.testing.assert_allclose(out[0], [[0.4, 0.4, 0.4], [0.8, 0, 0.8], [0, 0.8, 0]], atol=1e-12)


def test_signed_examples():
    out = signed_colormap(np.array([[0.0, 1.0, -1.0, 0.5]]), ErrorScale(1.0))
    np.testing.assert_allclose(out[0], [[1, 1, 1], [1, 0, 0], [0, 0, 1], [1, 0.5, 0.5]])


@given(errors)
def test_signed_swap_symmetry(d):
    s = ErrorScale.of(d)
    pos, neg = signed_colormap(d, s), signed_colormap(-d, s)
    np.testing.assert_array_equal(neg, pos[..., ::-1])


def test_value_preserved_on_random_pixels(rng):
    r = rng.random((1000, 1))
    d = rng.uniform(-1, 1, size=(1000, 1))
    for fn in (saturate_colorize, interpolate_colorize):
        v = hsv_of(fn(r, d))[:, 2]
        np.testing.assert_allclose(v, r.ravel(), atol=1e-6)


@given(recons, errors)
def test_gray_fidelity_where_error_is_zero(r, d):
    d = np.where(np.abs(d) < 0.3, 0.0, d)
    zero = d == 0
    neutral = gray_to_rgb(r)
    outs = [gray_to_rgb(corrected(r, d)), overlay_threshold(r, d),
            saturate_colorize(r, d), interpolate_colorize(r, d)]
    for out in outs:
        np.testing.assert_array_equal(out[zero], neutral[zero])


@given(recons, errors)
def test_saturation_tracks_error(r, d):
    s = ErrorScale.of(d)
    hsv = hsv_of(saturate_colorize(r, d, s))
    lit = r.ravel() > 1e-3
    np.testing.assert_allclose(hsv[lit, 1], (np.abs(d) / s.max_abs).ravel()[lit], atol=1e-6)


@pytest.mark.parametrize("count, shape", [(1, (64, 64, 3)), (2, (64, 136, 3)),
                                          (3, (136, 136, 3)), (4, (136, 136, 3))])
def test_panel_layout(count, shape):
    imgs = [(f"p{i}", np.full((64, 64), i / 4)) for i in range(count)]
    comp, labels = render_panel(imgs)
    assert comp.shape == shape
    assert labels == [f"p{i}" for i in range(count)]
    if count == 4:
        np.testing.assert_array_equal(comp[72:, 72:], 0.75)
        np.testing.assert_array_equal(comp[64:72], 1.0)


def test_panel_errors():
    with pytest.raises(ValueError, match="expected 64x64"):
        render_panel([("a", np.zeros((64, 64))), ("b", np.zeros((32, 64)))])
    with pytest.raises(ValueError):
        render_panel([])


def test_mismatch_rejected():
    with pytest.raises(ValueError, match="mismatch"):
        saturate_colorize(np.zeros((4, 4)), np.zeros((4, 5)))
