"""Image containers, HSV conversion, normalization and PNG/PGM file I/O.

Images are plain numpy arrays, stored row-major with the top row first:

* a gray image is a finite ``float64`` array of shape ``(height, width)``;
* a color image is a ``float64`` array of shape ``(height, width, 3)`` holding
  RGB channels in ``[0, 1]``.

Stored integers map linearly onto ``[0, 1]`` (``v / 255`` or ``v / 65535``);
there is no gamma handling.
"""

from __future__ import annotations

import colorsys
import os
from pathlib import Path

import numpy as np
from matplotlib.colors import hsv_to_rgb as _mpl_hsv_to_rgb
from PIL import Image

MAX_DIM = 1 << 15

_GRAY_MODES = {
    "L": 255,
    "I;16": 65535,
    "I;16B": 65535,
    "I;16L": 65535,
    "I": 65535,
}


class ImageIOError(OSError):
    """Raised when an image file cannot be read or written."""


def as_gray(img, name="image") -> np.ndarray:
    """Validate ``img`` as a gray image and return it as a float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a nonempty 2D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite pixels")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, names=("a", "b")) -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ValueError(
            f"dimension mismatch: {names[0]} is {a.shape[0]}x{a.shape[1]}, "
            f"{names[1]} is {b.shape[0]}x{b.shape[1]}"
        )


def hsv_to_rgb(hue: float, saturation: float, value: float) -> tuple[float, float, float]:
    """Convert one HSV pixel (hue in degrees) to RGB, clamping inputs first."""
    h = (float(hue) % 360.0) / 360.0
    s = min(max(float(saturation), 0.0), 1.0)
    v = min(max(float(value), 0.0), 1.0)
    return colorsys.hsv_to_rgb(h, s, v)


def hsv_image_to_rgb(hue, saturation, value) -> np.ndarray:
    """Vectorized HSV to RGB; ``hue`` in degrees, arrays broadcast together."""
    h, s, v = np.broadcast_arrays(
        np.asarray(hue, dtype=np.float64),
        np.asarray(saturation, dtype=np.float64),
        np.asarray(value, dtype=np.float64),
    )
    hsv = np.stack(
        [np.mod(h, 360.0) / 360.0, np.clip(s, 0.0, 1.0), np.clip(v, 0.0, 1.0)], axis=-1
    )
    # mod can round 359.9999... up to exactly 1.0
    hsv[..., 0] = np.where(hsv[..., 0] >= 1.0, 0.0, hsv[..., 0])
    return np.clip(_mpl_hsv_to_rgb(hsv), 0.0, 1.0)


def gray_to_rgb(img) -> np.ndarray:
    """Neutral RGB rendering of a gray image (clamped to [0, 1])."""
    g = np.clip(as_gray(img), 0.0, 1.0)
    return np.repeat(g[..., None], 3, axis=-1)


def normalize_unit(img) -> np.ndarray:
    """Affinely map the pixel range onto [0, 1]; constant images become 0.5."""
    arr = as_gray(img)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.full_like(arr, 0.5)
    out = (arr - lo) / (hi - lo)
    return np.clip(out, 0.0, 1.0)


def _check_path_dims(path, height, width):
    if height > MAX_DIM or width > MAX_DIM:
        raise ImageIOError(f"{path}: dimensions {height}x{width} exceed {MAX_DIM}")


def load_gray(path) -> np.ndarray:
    """Load an 8- or 16-bit grayscale PNG or binary PGM as a [0, 1] image."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            width, height = im.size
            _check_path_dims(path, height, width)
            if mode not in _GRAY_MODES:
                raise ImageIOError(
                    f"{path}: unsupported image mode {mode!r} "
                    "(expected 8- or 16-bit grayscale)"
                )
            data = np.array(im)
    except ImageIOError:
        raise
    except (OSError, Image.DecompressionBombError, ValueError) as exc:
        raise ImageIOError(f"{path}: cannot read image ({exc})") from exc
    scale = _GRAY_MODES[mode]
    if data.min() < 0 or data.max() > scale:
        raise ImageIOError(f"{path}: pixel values outside 0..{scale}")
    return data.astype(np.float64) / scale


def quantize(img, bits: int) -> np.ndarray:
    if bits not in (8, 16):
        raise ValueError(f"unsupported bit depth {bits}")
    maxval = (1 << bits) - 1
    q = np.rint(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * maxval)
    return q.astype(np.uint8 if bits == 8 else np.uint16)


def _save(im: Image.Image, path: Path) -> None:
    fmt = {".png": "PNG", ".pgm": "PPM"}.get(path.suffix.lower())
    if fmt is None:
        raise ImageIOError(f"{path}: unsupported file extension (use .png or .pgm)")
    try:
        im.save(path, format=fmt)
    except OSError as exc:
        raise ImageIOError(f"{path}: cannot write image ({exc})") from exc


def save_gray(img, path, bits: int = 8) -> None:
    """Save a gray image, clamped to [0, 1], as an 8- or 16-bit PNG or PGM."""
    path = Path(path)
    arr = as_gray(img)
    _check_path_dims(path, *arr.shape)
    q = quantize(arr, bits)
    _save(Image.fromarray(q), path)


def save_color(img, path) -> None:
    """Save an RGB image with channels in [0, 1] as an 8-bit PNG."""
    path = Path(path)
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"color image must have shape (h, w, 3), got {arr.shape}")
    if path.suffix.lower() != ".png":
        raise ImageIOError(f"{path}: color images are written as .png only")
    _check_path_dims(path, *arr.shape[:2])
    _save(Image.fromarray(quantize(arr, 8)), path)


def load_color(path) -> np.ndarray:
    """Read an 8-bit RGB PNG back into [0, 1] floats (used for inspection)."""
    path = Path(path)
    if not os.path.exists(path):
        raise ImageIOError(f"{path}: no such file")
    with Image.open(path) as im:
        if im.mode != "RGB":
            raise ImageIOError(f"{path}: expected RGB image, got {im.mode!r}")
        return np.array(im).astype(np.float64) / 255.0
