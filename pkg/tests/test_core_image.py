import colorsys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bootviz.core_image import (
    ImageIOError,
    hsv_image_to_rgb,
    hsv_to_rgb,
    load_gray,
    normalize_unit,
    save_color,
    save_gray,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


@pytest.mark.parametrize(
    "hsv, rgb",
    [
        ((17.0, 0.0, 0.7), (0.7, 0.7, 0.7)),
        ((300.0, 0.0, 0.7), (0.7, 0.7, 0.7)),
        ((0.0, 1.0, 1.0), (1.0, 0.0, 0.0)),
        ((240.0, 1.0, 1.0), (0.0, 0.0, 1.0)),
        ((120.0, 1.0, 0.5), (0.0, 0.5, 0.0)),
        ((300.0, 1.0, 1.0), (1.0, 0.0, 1.0)),
    ],
)
def test_hsv_to_rgb_corners(hsv, rgb):
    assert hsv_to_rgb(*hsv) == pytest.approx(rgb, abs=1e-12)
    assert hsv_image_to_rgb(*hsv) == pytest.approx(rgb, abs=1e-12)


def test_hsv_inputs_clamped():
    assert hsv_to_rgb(360.0, 2.0, 1.5) == pytest.approx((1.0, 0.0, 0.0))
    assert hsv_image_to_rgb(-120.0, -1.0, 0.25) == pytest.approx((0.25, 0.25, 0.25))


@given(st.floats(0, 359.999), st.floats(1e-6, 1), st.floats(1e-6, 1))
def test_hsv_round_trip(h, s, v):
    r, g, b = hsv_to_rgb(h, s, v)
    h2, s2, v2 = colorsys.rgb_to_hsv(r, g, b)
    assert v2 == pytest.approx(v, abs=1e-6)
    assert s2 == pytest.approx(s, abs=1e-6)
    # hue is circular
    dh = abs(h2 * 360.0 - h) % 360.0
    assert min(dh, 360.0 - dh) < 1e-6 / min(s, v) + 1e-6


@given(arrays(np.float64, (5, 7, 3), elements=st.floats(0, 1)))
def test_vectorized_matches_scalar(hsv):
    hue = hsv[..., 0] * 360.0
    out = hsv_image_to_rgb(hue, hsv[..., 1], hsv[..., 2])
    ref = np.array([[hsv_to_rgb(hue[i, j], hsv[i, j, 1], hsv[i, j, 2]) for j in range(7)]
                    for i in range(5)])
    np.testing.assert_allclose(out, ref, atol=1e-12)
    assert out.min() >= 0 and out.max() <= 1


def test_normalize_examples():
    np.testing.assert_array_equal(normalize_unit([[0.0, 2.0, 4.0]]), [[0.0, 0.5, 1.0]])
    np.testing.assert_array_equal(normalize_unit(np.full((3, 3), 3.7)), np.full((3, 3), 0.5))
    np.testing.assert_array_equal(normalize_unit([[-1.0, 1.0]]), [[0.0, 1.0]])


@given(arrays(np.float64, (4, 6), elements=finite))
def test_normalize_idempotent(img):
    once = normalize_unit(img)
    assert once.min() >= 0 and once.max() <= 1
    np.testing.assert_allclose(normalize_unit(once), once, atol=1e-12)


def test_rejects_nonfinite():
    with pytest.raises(ValueError):
        normalize_unit([[0.0, np.nan]])


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_16bit_round_trip(tmp_path, suffix):
    grad = (np.arange(64 * 64).reshape(64, 64) % 65536) / 65535.0
    grad = np.rint(grad * 65535) / 65535
    path = tmp_path / f"grad{suffix}"
    save_gray(grad, path, bits=16)
    back = load_gray(path)
    assert back.shape == (64, 64)
    np.testing.assert_array_equal(np.rint(back * 65535), np.rint(grad * 65535))


def test_8bit_linear_mapping(tmp_path):
    img = np.zeros((8, 8))
    img[0, 0] = 1.0
    img[1, 1] = 128 / 255
    save_gray(img, tmp_path / "a.png")
    back = load_gray(tmp_path / "a.png")
    assert back[0, 0] == 1.0
    assert back[1, 1] == 128 / 255
    assert back[2, 2] == 0.0


@given(arrays(np.uint8, (6, 9)), st.sampled_from([".png", ".pgm"]))
def test_8bit_files_byte_stable(tmp_path_factory, data, suffix):
    d = tmp_path_factory.mktemp("rt")
    save_gray(data / 255.0, d / f"a{suffix}")
    save_gray(load_gray(d / f"a{suffix}"), d / f"b{suffix}")
    assert (d / f"a{suffix}").read_bytes() == (d / f"b{suffix}").read_bytes()


def test_missing_file_names_path(tmp_path):
    missing = tmp_path / "nope.png"
    with pytest.raises(ImageIOError, match="nope.png"):
        load_gray(missing)


def test_color_input_rejected(tmp_path):
    path = tmp_path / "c.png"
    save_color(np.zeros((4, 4, 3)), path)
    with pytest.raises(ImageIOError, match="c.png"):
        load_gray(path)


def test_unsupported_extension(tmp_path):
    with pytest.raises(ImageIOError, match="img.tif"):
        save_gray(np.zeros((4, 4)), tmp_path / "img.tif")
