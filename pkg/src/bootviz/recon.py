"""Compressed-sensing reconstruction from masked k-space.

The solver is ISTA (proximal gradient) on

    ||mask * fft2(x) - y||^2 + 2 * lam * ||haar2(x)||_1

over real images ``x``, with unitary FFTs in the centered layout and an
orthonormal multilevel Haar transform as the sparsifying basis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core_image import as_gray
from .sampling import SamplingMask, apply_mask

log = logging.getLogger(__name__)


class ReconError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReconConfig:
    lam: float = 0.005
    iterations: int = 200
    step: float = 1.0
    transform: str = "haar"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 < self.step <= 1.0:
            # mask * unitary FFT has operator norm 1, so step <= 1 is the safe range
            raise ValueError("step must lie in (0, 1]")
        if self.transform not in ("haar", "identity"):
            raise ValueError(f"unknown transform {self.transform!r}")


# -- Fourier transforms ------------------------------------------------------

def fft2(img) -> np.ndarray:
    """Unitary 2D DFT with the zero-frequency bin at (h // 2, w // 2)."""
    x = np.asarray(img)
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(x), norm="ortho"))


def ifft2(k) -> np.ndarray:
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(np.asarray(k)), norm="ortho"))


def ifft2_real(k, return_imag: bool = False):
    """Inverse of :func:`fft2`, keeping the real part.

    With ``return_imag`` the largest discarded imaginary magnitude is
    returned alongside the image.
    """
    z = ifft2(k)
    if return_imag:
        return z.real.copy(), float(np.max(np.abs(z.imag), initial=0.0))
    return z.real.copy()


# -- Haar wavelets -----------------------------------------------------------

def haar_levels(shape) -> int:
    """Number of levels for which every dimension halves evenly."""
    levels = 0
    h, w = shape
    while h % 2 == 0 and w % 2 == 0 and h >= 2 and w >= 2:
        h //= 2
        w //= 2
        levels += 1
    return levels


def haar2(img, levels: int | None = None) -> np.ndarray:
    """Orthonormal multilevel 2D Haar transform in the usual nested layout.

    Each level splits the current approximation block into quadrants:
    approximation top-left, row-direction detail top-right, column-direction
    detail bottom-left, diagonal detail bottom-right.
    """
    x = np.array(img, dtype=np.float64)
    if levels is None:
        levels = haar_levels(x.shape)
    h, w = x.shape
    for _ in range(levels):
        blk = x[:h, :w]
        a, b = blk[0::2, 0::2], blk[0::2, 1::2]
        c, d = blk[1::2, 0::2], blk[1::2, 1::2]
        s0, s1, d0, d1 = a + c, b + d, a - c, b - d
        h2, w2 = h // 2, w // 2
        out = np.empty_like(blk)
        out[:h2, :w2] = 0.5 * (s0 + s1)
        out[:h2, w2:] = 0.5 * (s0 - s1)
        out[h2:, :w2] = 0.5 * (d0 + d1)
        out[h2:, w2:] = 0.5 * (d0 - d1)
        x[:h, :w] = out
        h, w = h2, w2
    return x


def ihaar2(coeffs, levels: int | None = None) -> np.ndarray:
    c = np.array(coeffs, dtype=np.float64)
    if levels is None:
        levels = haar_levels(c.shape)
    h, w = c.shape[0] >> levels, c.shape[1] >> levels
    for _ in range(levels):
        s, p = c[:h, :w], c[:h, w:2 * w]
        q, r = c[h:2 * h, :w], c[h:2 * h, w:2 * w]
        sp, sm, qp, qm = s + p, s - p, q + r, q - r
        out = np.empty((2 * h, 2 * w))
        out[0::2, 0::2] = 0.5 * (sp + qp)
        out[0::2, 1::2] = 0.5 * (sm + qm)
        out[1::2, 0::2] = 0.5 * (sp - qp)
        out[1::2, 1::2] = 0.5 * (sm - qm)
        c[:2 * h, :2 * w] = out
        h, w = 2 * h, 2 * w
    return c


def soft_threshold(x, t):
    """sign(x) * max(|x| - t, 0)."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be nonnegative")
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


# -- solver ------------------------------------------------------------------

def _transforms(name):
    if name == "haar":
        return haar2, ihaar2
    return (lambda a: np.array(a, dtype=np.float64)), (lambda a: np.array(a, dtype=np.float64))


def objective(x, y, m: SamplingMask, lam: float, transform: str = "haar") -> float:
    fwd, _ = _transforms(transform)
    resid = np.where(m.retained, fft2(x), 0) - y
    return float(np.sum(np.abs(resid) ** 2) + 2.0 * lam * np.sum(np.abs(fwd(x))))


def reconstruct(y, m: SamplingMask, cfg: ReconConfig = ReconConfig(), callback=None) -> np.ndarray:
    """Reconstruct a real image from masked k-space ``y`` by ISTA.

    Starts from the zero-filled inverse and runs ``cfg.iterations`` steps.
    ``callback(i, x)`` is called with the start (``i = 0``) and after every
    iteration.
    """
    y = np.asarray(y)
    if y.shape != m.shape:
        raise ValueError(f"dimension mismatch: k-space {y.shape} vs mask {m.shape}")
    y = apply_mask(y, m)
    fwd, inv = _transforms(cfg.transform)
    retained = m.retained
    x, imag = ifft2_real(y, return_imag=True)
    log.debug("zero-filled start discarded imaginary part up to %.3g", imag)
    if callback is not None:
        callback(0, x)
    thresh = cfg.step * cfg.lam
    for i in range(1, cfg.iterations + 1):
        resid = np.where(retained, fft2(x), 0) - y
        z = x - cfg.step * ifft2_real(resid)
        x = inv(soft_threshold(fwd(z), thresh)) if thresh > 0 else z
        if not np.all(np.isfinite(x)):
            raise ReconError(f"non-finite iterate at iteration {i}")
        if callback is not None:
            callback(i, x)
    return x


def zero_filled(y, m: SamplingMask) -> np.ndarray:
    return ifft2_real(apply_mask(y, m))


def relative_l2(estimate, truth) -> float:
    truth = as_gray(truth)
    return float(np.linalg.norm(np.asarray(estimate) - truth) / np.linalg.norm(truth))
