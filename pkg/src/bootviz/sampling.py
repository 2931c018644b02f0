"""k-space retention masks: random horizontal lines and radial spokes.

k-space is stored in the centered layout: the zero-frequency bin sits at
``(height // 2, width // 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("horizontal", "radial", "full", "custom")


@dataclass(frozen=True)
class MaskSpec:
    kind: str = "horizontal"
    retained_fraction: float = 0.25
    center_fraction: float = 0.08
    num_spokes: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("horizontal", "radial", "full"):
            raise ValueError(f"unknown mask kind {self.kind!r}")
        if not 0.0 < self.retained_fraction <= 1.0:
            raise ValueError("retained_fraction must lie in (0, 1]")
        if not 0.0 <= self.center_fraction < 1.0:
            raise ValueError("center_fraction must lie in [0, 1)")
        if self.kind == "horizontal" and self.retained_fraction < self.center_fraction:
            raise ValueError("retained_fraction must be >= center_fraction")
        if self.kind == "radial" and self.num_spokes < 1:
            raise ValueError("num_spokes must be positive")


@dataclass(frozen=True, eq=False)
class SamplingMask:
    """Boolean retention grid plus the geometry it was built from.

    ``rows`` lists retained k-space rows for horizontal masks and ``angles``
    lists spoke angles (radians) for radial ones; both are empty otherwise.
    """

    retained: np.ndarray
    kind: str = "custom"
    rows: tuple = field(default=())
    angles: tuple = field(default=())

    def __post_init__(self):
        arr = np.asarray(self.retained, dtype=bool)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"mask must be a nonempty 2D array, got shape {arr.shape}")
        if not arr.any():
            raise ValueError("mask must retain at least one bin")
        if self.kind not in KINDS:
            raise ValueError(f"unknown mask kind {self.kind!r}")
        if self.kind == "horizontal":
            per_row = arr.any(axis=1)
            if not np.array_equal(per_row, arr.all(axis=1)):
                raise ValueError("horizontal mask rows must be fully retained or fully dropped")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "retained", arr)

    @property
    def shape(self):
        return self.retained.shape

    def __eq__(self, other):
        if not isinstance(other, SamplingMask):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.retained, other.retained)


def center_index(height: int, width: int) -> tuple[int, int]:
    return height // 2, width // 2


def center_rows(height: int, center_fraction: float) -> np.ndarray:
    """Indices of the rows nearest the zero-frequency row."""
    if center_fraction <= 0:
        return np.zeros(0, dtype=int)
    n = max(1, int(round(center_fraction * height)))
    start = height // 2 - n // 2
    return np.arange(start, start + n)


def horizontal_counts(spec: MaskSpec, height: int) -> tuple[int, np.ndarray]:
    n_total = int(round(spec.retained_fraction * height))
    center = center_rows(height, spec.center_fraction)
    if n_total < 1:
        raise ValueError(
            f"retained_fraction {spec.retained_fraction} keeps zero of {height} rows"
        )
    return max(n_total, center.size), center


def rasterize_spokes(height: int, width: int, angles) -> np.ndarray:
    """Bins within half a bin (perpendicular distance) of any spoke line."""
    cy, cx = center_index(height, width)
    dy = (np.arange(height) - cy)[:, None].astype(np.float64)
    dx = (np.arange(width) - cx)[None, :].astype(np.float64)
    out = np.zeros((height, width), dtype=bool)
    for theta in angles:
        dist = np.abs(-math.sin(theta) * dx + math.cos(theta) * dy)
        out |= dist <= 0.5
    return out


def spoke_angles(num_spokes: int) -> tuple:
    return tuple(math.pi * k / num_spokes for k in range(num_spokes))


def make_mask(spec: MaskSpec, height: int, width: int) -> SamplingMask:
    """Build the retention mask described by ``spec`` on a height x width grid."""
    if height < 8 or width < 8:
        raise ValueError(f"mask dimensions must be >= 8, got {height}x{width}")
    if spec.kind == "full":
        return SamplingMask(np.ones((height, width), dtype=bool), kind="full")
    if spec.kind == "radial":
        angles = spoke_angles(spec.num_spokes)
        return SamplingMask(rasterize_spokes(height, width, angles), kind="radial", angles=angles)

    n_total, center = horizontal_counts(spec, height)
    rest = np.setdiff1d(np.arange(height), center)
    rng = np.random.default_rng(spec.seed)
    extra = rng.choice(rest, size=n_total - center.size, replace=False)
    rows = np.sort(np.concatenate([center, extra]))
    grid = np.zeros((height, width), dtype=bool)
    grid[rows, :] = True
    return SamplingMask(grid, kind="horizontal", rows=tuple(int(r) for r in rows))


def apply_mask(k: np.ndarray, m: SamplingMask) -> np.ndarray:
    """Zero every k-space bin that ``m`` does not retain."""
    k = np.asarray(k)
    if k.shape != m.shape:
        raise ValueError(f"dimension mismatch: k-space {k.shape} vs mask {m.shape}")
    return np.where(m.retained, k, 0).astype(np.complex128)


def retained_fraction_of(m: SamplingMask) -> float:
    return float(np.count_nonzero(m.retained)) / m.retained.size


# -- serialization -----------------------------------------------------------

def mask_to_rle(m: SamplingMask) -> str:
    """Encode a mask as text.

    Line 1 is ``bootviz-mask <height> <width> <kind>``; line 2 holds the
    row-major run lengths, alternating dropped/retained and starting with a
    (possibly zero) dropped run.
    """
    flat = m.retained.ravel()
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    h, w = m.shape
    return f"bootviz-mask {h} {w} {m.kind}\n{' '.join(map(str, runs))}\n"


def mask_from_rle(text: str) -> SamplingMask:
    lines = text.strip().splitlines()
    head = lines[0].split()
    if len(head) != 4 or head[0] != "bootviz-mask":
        raise ValueError("not a bootviz mask file")
    h, w, kind = int(head[1]), int(head[2]), head[3]
    runs = [int(r) for r in lines[1].split()] if len(lines) > 1 else []
    if sum(runs) != h * w:
        raise ValueError(f"run lengths sum to {sum(runs)}, expected {h * w}")
    values = np.arange(len(runs)) % 2 == 1
    flat = np.repeat(values, runs)
    grid = flat.reshape(h, w)
    if kind == "horizontal":
        rows = tuple(int(r) for r in np.flatnonzero(grid.any(axis=1)))
        return SamplingMask(grid, kind=kind, rows=rows)
    # spoke angles are not stored; a reloaded radial mask is exact but custom
    return SamplingMask(grid, kind="custom" if kind == "radial" else kind)


def save_mask_pgm(m: SamplingMask, path) -> None:
    from .core_image import save_gray

    save_gray(m.retained.astype(np.float64), path, bits=8)
