"""Scalar summaries of an error estimate: light Gaussian blur, then rss.

Pixel values are on the [0, 1] intensity scale of the images.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core_image import as_gray

DEFAULT_SIGMAS = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)

# numpy.pad names: "symmetric" repeats the edge pixel (half-sample
# reflection), "reflect" does not (reflection about the edge pixel).
_PAD_MODES = {"symmetric": "symmetric", "mirror": "reflect"}


@dataclass(frozen=True)
class BlurConfig:
    sigma: float = 1.0
    truncate: float = 4.0
    boundary: str = "symmetric"

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not self.truncate > 0:
            raise ValueError("truncate must be positive")
        if self.boundary not in _PAD_MODES:
            raise ValueError(f"boundary must be one of {sorted(_PAD_MODES)}")


@dataclass(frozen=True)
class SummaryRow:
    sigma: float
    rss: float
    rms: float


def gaussian_kernel(sigma: float, truncate: float = 4.0) -> np.ndarray:
    """Unit-sum samples of exp(-x^2 / (2 sigma^2)) for |x| <= ceil(truncate*sigma)."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return np.ones(1)
    radius = int(math.ceil(truncate * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _convolve_axis(x, kernel, axis, mode):
    radius = kernel.size // 2
    n = x.shape[axis]
    pad = [(0, 0)] * x.ndim
    pad[axis] = (radius, radius)
    if n < 2:
        # a single sample reflects onto itself under either convention
        mode = "symmetric"
    p = np.pad(x, pad, mode=mode)
    # accumulate neighbour differences so constant input passes through exactly
    out = x.copy()
    for j, wgt in enumerate(kernel):
        if j == radius:
            continue
        shifted = np.take(p, np.arange(j, j + n), axis=axis)
        out += wgt * (shifted - x)
    return out


def blur(img, cfg: BlurConfig = BlurConfig()) -> np.ndarray:
    """Separable Gaussian blur, rows then columns, reflected boundaries."""
    x = as_gray(img)
    if cfg.sigma == 0:
        return x.copy()
    k = gaussian_kernel(cfg.sigma, cfg.truncate)
    mode = _PAD_MODES[cfg.boundary]
    return _convolve_axis(_convolve_axis(x, k, 1, mode), k, 0, mode)


def rss(img) -> float:
    """Square root of the sum of squared pixels."""
    return float(np.sqrt(np.sum(np.square(as_gray(img)))))


def rms(img) -> float:
    x = as_gray(img)
    return rss(x) / math.sqrt(x.size)


def sweep(d, sigmas=DEFAULT_SIGMAS, template: BlurConfig = BlurConfig()) -> list[SummaryRow]:
    """rss and rms of ``d`` blurred at each sigma."""
    sigmas = list(sigmas)
    if not sigmas:
        raise ValueError("sigmas must be nonempty")
    d = as_gray(d)
    n = math.sqrt(d.size)
    rows = []
    for sigma in sigmas:
        blurred = blur(d, BlurConfig(sigma=float(sigma), truncate=template.truncate,
                                     boundary=template.boundary))
        value = rss(blurred)
        rows.append(SummaryRow(sigma=float(sigma), rss=value, rms=value / n))
    return rows


def flag(row: SummaryRow, threshold: float) -> tuple[bool, str]:
    """Flag when the blurred rss strictly exceeds ``threshold``."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    flagged = row.rss > threshold
    verdict = "FLAGGED" if flagged else "ok"
    rel = ">" if flagged else "<="
    msg = (f"{verdict}: rss of error estimate blurred at sigma={row.sigma:g} is "
           f"{sig3(row.rss)} {rel} threshold {threshold:g}")
    return flagged, msg


def sig3(value: float) -> str:
    """Three significant figures without a leading zero: 12.9, 6.25, .535."""
    if value == 0:
        return "0"
    rounded = float(f"{value:.3g}")
    decimals = max(0, 2 - math.floor(math.log10(abs(rounded))))
    text = f"{rounded:.{decimals}f}"
    if text.startswith("0."):
        return text[1:]
    if text.startswith("-0."):
        return "-" + text[2:]
    return text


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sigma", "rss", "rms"])
    for r in rows:
        writer.writerow([repr(r.sigma), repr(r.rss), repr(r.rms)])
    return buf.getvalue()


def rows_to_json(rows) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2) + "\n"


def format_table(rows) -> str:
    lines = [f"{'Std. Dev.':>9}  {'rss':>8}  {'rms':>8}"]
    for r in rows:
        lines.append(f"{r.sigma:>9.1f}  {sig3(r.rss):>8}  {sig3(r.rms):>8}")
    return "\n".join(lines)
