"""Grayscale and color renderings of error estimates.

Sign conventions (fixed here, recorded in every sidecar):

* threshold overlay: positive errors toward magenta (300 deg), negative
  toward cyan (180 deg), zero at blue (240 deg);
* saturated colorization: positive red, negative green;
* interpolated colorization: positive magenta, negative green;
* signed map: positive red, negative blue, zero white.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core_image import as_gray, check_same_shape, gray_to_rgb, hsv_image_to_rgb

SIGN_CONVENTIONS = {
    "overlay": "hue = 240 + 60 * d / max_abs: +max -> magenta, -max -> cyan",
    "saturate": "d > 0 -> red (0 deg), d < 0 -> green (120 deg)",
    "interpolate": "d > 0 -> magenta (300 deg), d < 0 -> green (120 deg)",
    "signed": "d > 0 -> red, d < 0 -> blue, d = 0 -> white",
    "grayscale": "0.5 + d / (2 * max_abs): +max -> white, -max -> black",
}


@dataclass(frozen=True)
class OverlayConfig:
    percentile: float = 2.0
    pre_blur_sigma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.percentile < 100.0:
            raise ValueError("percentile must lie in (0, 100)")
        if self.pre_blur_sigma < 0:
            raise ValueError("pre_blur_sigma must be nonnegative")

    @classmethod
    def for_mask(cls, kind: str, pre_blur_sigma: float = 0.0) -> "OverlayConfig":
        """Upper 2% for horizontal sampling, upper 1% for radial."""
        return cls(percentile=1.0 if kind == "radial" else 2.0, pre_blur_sigma=pre_blur_sigma)


@dataclass(frozen=True)
class ErrorScale:
    max_abs: float = 1.0

    def __post_init__(self):
        if not self.max_abs > 0:
            raise ValueError("max_abs must be positive")

    @classmethod
    def of(cls, d) -> "ErrorScale":
        """Scale by the largest |d|; an all-zero estimate gets scale 1."""
        peak = float(np.max(np.abs(as_gray(d))))
        return cls(peak if peak > 0 else 1.0)


def _pair(recon, d):
    r, e = as_gray(recon, "recon"), as_gray(d, "error estimate")
    check_same_shape(r, e, ("recon", "error estimate"))
    return r, e


def grayscale_error(d, s: ErrorScale | None = None) -> np.ndarray:
    """Mid-gray for zero error, white/black at +/- max_abs."""
    d = as_gray(d)
    s = s or ErrorScale.of(d)
    return np.clip(0.5 + d / (2.0 * s.max_abs), 0.0, 1.0)


def overlay_mask(d, percentile: float) -> np.ndarray:
    """Pixels whose |d| lies strictly above the (100 - percentile)th percentile."""
    a = np.abs(as_gray(d))
    t = np.percentile(a, 100.0 - percentile)
    return a > t


def overlay_threshold(recon, d, cfg: OverlayConfig = OverlayConfig()) -> np.ndarray:
    """Reconstruction in gray with the largest errors painted cyan..magenta."""
    r, e = _pair(recon, d)
    if cfg.pre_blur_sigma > 0:
        from .summary import BlurConfig, blur

        e = blur(e, BlurConfig(sigma=cfg.pre_blur_sigma))
    out = gray_to_rgb(r)
    hit = overlay_mask(e, cfg.percentile)
    if hit.any():
        s = ErrorScale.of(e)
        hue = 240.0 + 60.0 * np.clip(e[hit] / s.max_abs, -1.0, 1.0)
        out[hit] = hsv_image_to_rgb(hue, 1.0, 1.0)
    return out


def saturate_colorize(recon, d, s: ErrorScale | None = None) -> np.ndarray:
    """Saturation from |d|, red or green hue by sign, value from the recon."""
    r, e = _pair(recon, d)
    s = s or ErrorScale.of(e)
    sat = np.clip(np.abs(e) / s.max_abs, 0.0, 1.0)
    hue = np.where(e > 0, 0.0, 120.0)
    sat = np.where(e == 0, 0.0, sat)
    return hsv_image_to_rgb(hue, sat, r)


def interpolate_colorize(recon, d, s: ErrorScale | None = None) -> np.ndarray:
    """Walk the green-gray-magenta diameter of the hue/saturation disk."""
    r, e = _pair(recon, d)
    s = s or ErrorScale.of(e)
    t = np.clip(e / s.max_abs, -1.0, 1.0)
    hue = np.where(t > 0, 300.0, 120.0)
    return hsv_image_to_rgb(hue, np.abs(t), r)


def signed_colormap(d, s: ErrorScale | None = None) -> np.ndarray:
    """Blue for negative, white for zero, red for positive."""
    d = as_gray(d)
    s = s or ErrorScale.of(d)
    t = np.clip(d / s.max_abs, -1.0, 1.0)
    pos = np.clip(t, 0.0, 1.0)
    neg = np.clip(-t, 0.0, 1.0)
    return np.stack([1.0 - neg, 1.0 - pos - neg, 1.0 - pos], axis=-1)


def render_panel(images, gutter: int = 8, fill: float = 1.0):
    """Tile 1-4 labeled images into one RGB composite.

    ``images`` is a sequence of ``(label, image)``; gray images are shown
    neutrally.  One image fills the frame, two sit side by side, three or
    four go row-major into a 2x2 grid.  Returns ``(composite, labels)``.
    """
    images = list(images)
    if not 1 <= len(images) <= 4:
        raise ValueError(f"render_panel takes 1-4 images, got {len(images)}")
    tiles = []
    for label, img in images:
        arr = np.asarray(img, dtype=np.float64)
        tiles.append(gray_to_rgb(arr) if arr.ndim == 2 else np.clip(arr, 0.0, 1.0))
    h, w = tiles[0].shape[:2]
    for (label, _), tile in zip(images, tiles):
        if tile.shape[:2] != (h, w):
            raise ValueError(f"panel {label!r} is {tile.shape[0]}x{tile.shape[1]}, expected {h}x{w}")
    ncols = 1 if len(tiles) == 1 else 2
    nrows = 1 if len(tiles) <= 2 else 2
    out = np.full((nrows * h + (nrows - 1) * gutter, ncols * w + (ncols - 1) * gutter, 3), fill)
    for i, tile in enumerate(tiles):
        row, col = divmod(i, ncols)
        y0, x0 = row * (h + gutter), col * (w + gutter)
        out[y0:y0 + h, x0:x0 + w] = tile
    return out, [label for label, _ in images]


def write_sidecar(path, kind: str, **config) -> Path:
    """JSON next to an image recording how it was rendered."""
    path = Path(path).with_suffix(".json")
    payload = {"rendering": kind, "convention": SIGN_CONVENTIONS.get(kind, ""), **config}
    for key, value in list(payload.items()):
        if hasattr(value, "__dataclass_fields__"):
            payload[key] = asdict(value)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path
