"""Bootstrap estimate of reconstruction error.

The reconstruction's own k-space is re-measured under masks resampled with
replacement from the acquisition mask, each re-measurement is
reconstructed, and the average shift ``recon - recon_b`` is the error
estimate.  Iteration ``b`` draws its randomness from the substream
``SeedSequence(seed, spawn_key=(b,))``, so results do not depend on how the
iterations are scheduled across threads.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .core_image import ImageIOError, as_gray, check_same_shape
from .recon import ReconConfig, ReconError, fft2, reconstruct
from .sampling import (
    MaskSpec,
    SamplingMask,
    apply_mask,
    center_rows,
    make_mask,
    rasterize_spokes,
)

RESAMPLE_KINDS = ("mask_resample", "residual_resample")


@dataclass(frozen=True)
class BootstrapConfig:
    iterations: int = 1000
    seed: int = 0
    resample_kind: str = "mask_resample"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.resample_kind not in RESAMPLE_KINDS:
            raise ValueError(f"unknown resample_kind {self.resample_kind!r}")


@dataclass
class ErrorEstimate:
    image: np.ndarray
    iterations: int
    seed: int
    wall_clock: float = 0.0
    fingerprint: str = ""
    extra: dict = field(default_factory=dict)

    def meta(self, include_timing: bool = True) -> dict:
        out = {
            "iterations": self.iterations,
            "seed": self.seed,
            "fingerprint": self.fingerprint,
            **self.extra,
        }
        if include_timing:
            out["wall_clock_seconds"] = self.wall_clock
        return out


def fingerprint(*configs) -> str:
    payload = json.dumps([asdict(c) for c in configs], sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def true_error(original, recon) -> np.ndarray:
    """Pixelwise original - recon."""
    a, b = as_gray(original, "original"), as_gray(recon, "recon")
    check_same_shape(a, b, ("original", "recon"))
    return a - b


def corrected(recon, d) -> np.ndarray:
    """Reconstruction with the error estimate subtracted off."""
    r, e = as_gray(recon, "recon"), as_gray(d, "error estimate")
    check_same_shape(r, e, ("recon", "error estimate"))
    return r - e


def substream(seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))


def resample_mask(base: MaskSpec, rng: np.random.Generator, height: int, width: int,
                  base_mask: SamplingMask | None = None) -> SamplingMask:
    """Draw a bootstrap replicate of the mask built from ``base``.

    Horizontal masks keep their center band and redraw the other retained
    rows with replacement; radial masks redraw spoke angles with
    replacement.  Duplicates collapse, so the result retains a subset of the
    base mask.  A full mask has nothing to resample and is returned as is.
    """
    if base_mask is None:
        base_mask = make_mask(base, height, width)
    if base.kind == "full":
        return base_mask
    if base.kind == "radial":
        angles = np.asarray(base_mask.angles)
        picks = np.unique(rng.integers(0, angles.size, size=angles.size))
        drawn = tuple(float(a) for a in angles[picks])
        return SamplingMask(rasterize_spokes(height, width, drawn), kind="radial", angles=drawn)
    if base.kind != "horizontal":
        raise ValueError(f"cannot resample a {base.kind!r} mask")

    center = center_rows(height, base.center_fraction)
    others = np.setdiff1d(np.asarray(base_mask.rows, dtype=int), center)
    picks = others[rng.integers(0, others.size, size=others.size)] if others.size else others
    rows = np.union1d(center, picks)
    grid = np.zeros((height, width), dtype=bool)
    grid[rows, :] = True
    return SamplingMask(grid, kind="horizontal", rows=tuple(int(r) for r in rows))


def _one_shift(b, *, khat, rhat, residual, base, base_mask, rcfg, bcfg):
    h, w = rhat.shape
    rng = substream(bcfg.seed, b)
    mb = resample_mask(base, rng, h, w, base_mask=base_mask)
    kb = khat
    if bcfg.resample_kind == "residual_resample":
        signs = rng.choice(np.array([-1.0, 1.0]), size=khat.shape)
        kb = khat + signs * residual
    try:
        rb = reconstruct(apply_mask(kb, mb), mb, rcfg)
    except ReconError as exc:
        raise ReconError(f"bootstrap iteration {b}: {exc}") from exc
    return rhat - rb


def bootstrap_shifts(y, m: SamplingMask, base: MaskSpec, rcfg: ReconConfig,
                     bcfg: BootstrapConfig, indices, workers: int = 1, recon=None):
    """Yield ``recon - recon_b`` for each bootstrap index, in index order."""
    y = apply_mask(y, m)
    rhat = reconstruct(y, m, rcfg) if recon is None else np.asarray(recon, dtype=np.float64)
    khat = fft2(rhat)
    residual = np.where(m.retained, y - khat, 0)
    base_mask = m if m.kind == base.kind and m.kind != "custom" else make_mask(base, *m.shape)
    job = dict(khat=khat, rhat=rhat, residual=residual, base=base,
               base_mask=base_mask, rcfg=rcfg, bcfg=bcfg)
    if workers <= 1:
        for b in indices:
            yield _one_shift(b, **job)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map yields in submission order, which fixes the reduction order
        yield from pool.map(lambda b: _one_shift(b, **job), indices)


def bootstrap_errors(y, m: SamplingMask, base: MaskSpec, rcfg: ReconConfig = ReconConfig(),
                     bcfg: BootstrapConfig = BootstrapConfig(), workers: int = 1,
                     start: int = 0, recon=None) -> ErrorEstimate:
    """Average shift of the reconstruction under bootstrap re-measurement.

    Substreams ``start .. start + iterations - 1`` are used; ``recon`` may
    pass in an already computed ``reconstruct(y, m, rcfg)``.
    """
    t0 = time.perf_counter()
    total = None
    n = bcfg.iterations
    for shift in bootstrap_shifts(y, m, base, rcfg, bcfg, range(start, start + n),
                                  workers=workers, recon=recon):
        total = shift.copy() if total is None else total + shift
    return ErrorEstimate(
        image=total / n,
        iterations=n,
        seed=bcfg.seed,
        wall_clock=time.perf_counter() - t0,
        fingerprint=fingerprint(base, rcfg, bcfg),
        extra={"resample_kind": bcfg.resample_kind, "start": start},
    )


# -- serialization -----------------------------------------------------------

OFFSET = 32768
STEP = 32767


def save_estimate(est: ErrorEstimate, path, include_timing: bool = False) -> Path:
    """Write a 16-bit signed-offset PNG plus a ``.json`` sidecar.

    Stored value ``u`` decodes as ``(u - 32768) / 32767 * scale``, where
    ``scale`` is the largest absolute pixel (1 for an all-zero estimate).
    """
    path = Path(path)
    d = as_gray(est.image)
    peak = float(np.max(np.abs(d)))
    scale = peak if peak > 0 else 1.0
    u = np.rint(d / scale * STEP) + OFFSET
    Image.fromarray(u.astype(np.uint16)).save(path, format="PNG")
    sidecar = path.with_suffix(".json")
    meta = {"encoding": "signed-offset-16", "offset": OFFSET, "step": STEP,
            "scale": scale, **est.meta(include_timing)}
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return sidecar


def load_estimate(path) -> ErrorEstimate:
    path = Path(path)
    sidecar = path.with_suffix(".json")
    try:
        meta = json.loads(sidecar.read_text())
        with Image.open(path) as im:
            u = np.array(im).astype(np.float64)
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"{path}: cannot read error estimate ({exc})") from exc
    img = (u - meta["offset"]) / meta["step"] * meta["scale"]
    return ErrorEstimate(image=img, iterations=int(meta.get("iterations", 0)),
                         seed=int(meta.get("seed", 0)), fingerprint=meta.get("fingerprint", ""))


def expected_inclusion(n: int) -> float:
    """Probability a given item appears in a size-n draw with replacement."""
    return 1.0 - math.pow(1.0 - 1.0 / n, n)
