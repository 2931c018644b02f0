"""End-to-end runs: measurement, reconstruction, bootstrap, renderings, report.

A run writes into a staging directory next to ``output_dir`` and only moves
the files into place once every stage has succeeded, so a failed run leaves
nothing behind.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import shutil
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, bootstrap_errors, corrected, save_estimate, true_error
from .core_image import ImageIOError, as_gray, gray_to_rgb, load_gray, save_color, save_gray
from .phantom import shepp_logan
from .recon import ReconConfig, fft2, reconstruct
from .sampling import MaskSpec, apply_mask, make_mask, mask_to_rle, save_mask_pgm
from .summary import DEFAULT_SIGMAS, BlurConfig, blur, flag, rows_to_csv, rows_to_json, sweep
from .viz import (
    ErrorScale,
    OverlayConfig,
    grayscale_error,
    interpolate_colorize,
    overlay_threshold,
    render_panel,
    saturate_colorize,
    signed_colormap,
    write_sidecar,
)

log = logging.getLogger(__name__)

FLAGGED_EXIT = 3


class PipelineError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


@dataclass
class PipelineConfig:
    input: str = "phantom:128"
    mask: MaskSpec = field(default_factory=MaskSpec)
    recon: ReconConfig = field(default_factory=ReconConfig)
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    # None picks the upper 2% (horizontal) or 1% (radial) with a sigma-1 blurred variant
    overlay: OverlayConfig | None = None
    blur: BlurConfig = field(default_factory=BlurConfig)
    sigma_grid: tuple = DEFAULT_SIGMAS
    output_dir: str = "bootviz-out"
    flag_threshold: float | None = None

    def __post_init__(self):
        if not self.sigma_grid or any(s < 0 for s in self.sigma_grid):
            raise ValueError("sigma_grid must be nonempty with nonnegative entries")
        self.sigma_grid = tuple(float(s) for s in self.sigma_grid)
        if self.flag_threshold is not None and not self.flag_threshold > 0:
            raise ValueError("flag_threshold must be positive")

    def overlay_config(self) -> OverlayConfig:
        return self.overlay or OverlayConfig.for_mask(self.mask.kind, pre_blur_sigma=1.0)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sigma_grid"] = list(self.sigma_grid)
        return out

    def fingerprint(self) -> str:
        """Content hash of everything except where the output goes."""
        payload = self.to_dict()
        payload.pop("output_dir")
        text = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        nested = {"mask": MaskSpec, "recon": ReconConfig, "bootstrap": BootstrapConfig,
                  "overlay": OverlayConfig, "blur": BlurConfig}
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if key in nested and isinstance(value, dict):
                value = nested[key](**value)
            elif key == "sigma_grid":
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs)


def load_config(path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise PipelineError(f"config: cannot read {path} ({exc})") from exc
    return PipelineConfig.from_dict(data)


@dataclass
class Measurement:
    kspace: np.ndarray
    truth: np.ndarray | None


def load_input(spec: str):
    """Resolve ``phantom[:N]``, a gray PNG/PGM, or a complex ``.npy`` k-space."""
    if spec == "phantom" or spec.startswith("phantom:"):
        n = int(spec.split(":", 1)[1]) if ":" in spec else 128
        truth = shepp_logan(n)
        return Measurement(fft2(truth), truth)
    path = Path(spec)
    if path.suffix.lower() == ".npy":
        try:
            k = np.load(path)
        except (OSError, ValueError) as exc:
            raise ImageIOError(f"{path}: cannot read k-space ({exc})") from exc
        if k.ndim != 2 or not np.all(np.isfinite(k)):
            raise ValueError(f"{path}: k-space must be a finite 2D array")
        return Measurement(k.astype(np.complex128), None)
    truth = load_gray(path)
    return Measurement(fft2(truth), truth)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Writer:
    """Collects outputs in a staging directory, in emission order."""

    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.root / name

    def color(self, name, img, kind, **config):
        save_color(img, self.path(name))
        write_sidecar(self.path(Path(name).with_suffix(".json").name), kind, **config)

    def panel(self, name, images):
        comp, labels = render_panel(images)
        save_color(comp, self.path(name))
        self.path(Path(name).with_suffix(".txt").name).write_text("\n".join(labels) + "\n")

    def text(self, name, content):
        self.path(name).write_text(content)


def _stage(name):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except PipelineError:
                raise
            except Exception as exc:
                raise PipelineError(f"stage '{name}' failed: {exc}") from exc
        return run
    return wrap


@_stage("input")
def _measure(cfg: PipelineConfig):
    meas = load_input(cfg.input)
    h, w = meas.kspace.shape
    m = make_mask(cfg.mask, h, w)
    return meas, m, apply_mask(meas.kspace, m)


@_stage("reconstruction")
def _reconstruct(y, m, cfg):
    return reconstruct(y, m, cfg.recon)


@_stage("bootstrap")
def _bootstrap(y, m, recon, cfg, workers):
    return bootstrap_errors(y, m, cfg.mask, cfg.recon, cfg.bootstrap, workers=workers, recon=recon)


def compute(cfg: PipelineConfig, workers: int = 1):
    """Run measurement, reconstruction and bootstrap; no files are written."""
    meas, m, y = _measure(cfg)
    recon = _reconstruct(y, m, cfg)
    est = _bootstrap(y, m, recon, cfg, workers)
    return meas, m, recon, est


def _flag_row(rows, d, cfg):
    for row in rows:
        if row.sigma == cfg.blur.sigma:
            return row
    return sweep(d, [cfg.blur.sigma], cfg.blur)[0]


@_stage("render")
def _render(out: _Writer, cfg, meas, m, recon, est):
    d = est.image
    truth = meas.truth
    ov = cfg.overlay_config()
    scale = ErrorScale.of(d)
    shown = np.clip(recon, 0.0, 1.0)
    omitted = []

    save_mask_pgm(m, out.path("mask.pgm"))
    out.text("mask.txt", mask_to_rle(m))
    if truth is not None:
        save_gray(truth, out.path("original.png"), bits=16)
    else:
        omitted.append("original.png")
    save_gray(shown, out.path("reconstruction.png"), bits=16)
    save_estimate(est, out.path("bootstrap_estimate.png"))
    out.files.append("bootstrap_estimate.json")

    boot_gray = grayscale_error(d, scale)
    out.color("bootstrap_gray.png", gray_to_rgb(boot_gray), "grayscale", max_abs=scale.max_abs)
    blurred = blur(d, cfg.blur)
    blurred_gray = grayscale_error(blurred, scale)
    out.color("bootstrap_blurred_gray.png", gray_to_rgb(blurred_gray), "grayscale",
              max_abs=scale.max_abs, blur=cfg.blur)
    fixed = corrected(recon, d)
    out.color("corrected.png", gray_to_rgb(fixed), "corrected")
    plain = OverlayConfig(percentile=ov.percentile, pre_blur_sigma=0.0)
    overlay = overlay_threshold(shown, d, plain)
    out.color("overlay.png", overlay, "overlay", config=plain)
    blurred_ov = OverlayConfig(percentile=ov.percentile, pre_blur_sigma=ov.pre_blur_sigma or 1.0)
    overlay_b = overlay_threshold(shown, d, blurred_ov)
    out.color("overlay_blurred.png", overlay_b, "overlay", config=blurred_ov)
    sat = saturate_colorize(shown, d, scale)
    out.color("saturated.png", sat, "saturate", max_abs=scale.max_abs)
    interp = interpolate_colorize(shown, d, scale)
    out.color("interpolated.png", interp, "interpolate", max_abs=scale.max_abs)
    boot_signed = signed_colormap(d, scale)
    out.color("bootstrap_signed.png", boot_signed, "signed", max_abs=scale.max_abs)

    if truth is not None:
        err = true_error(truth, recon)
        err_scale = ErrorScale.of(err)
        err_gray = grayscale_error(err, err_scale)
        out.color("true_error_gray.png", gray_to_rgb(err_gray), "grayscale", max_abs=err_scale.max_abs)
        err_signed = signed_colormap(err, err_scale)
        out.color("true_error_signed.png", err_signed, "signed", max_abs=err_scale.max_abs)
        out.panel("panel_a.png", [("Original", truth), ("Reconstruction", shown),
                                  ("Error of Reconstruction", err_gray), ("Bootstrap", boot_gray)])
        out.panel("panel_c.png", [("Original", truth), ("Reconstruction", shown),
                                  ("Error of Reconstruction", err_signed), ("Bootstrap", boot_signed)])
    else:
        omitted += ["true_error_gray.png", "true_error_signed.png"]
        out.panel("panel_a.png", [("Reconstruction", shown), ("Bootstrap", boot_gray)])
        out.panel("panel_c.png", [("Reconstruction", shown), ("Bootstrap", boot_signed)])
    out.panel("panel_b.png", [("Reconstruction - Bootstrap", fixed),
                              ("Errors Over a Threshold Overlaid", overlay),
                              ("Bootstrap-Saturated Reconstruction", sat),
                              ("Bootstrap-Interpolated Reconstruction", interp)])
    out.panel("panel_blur.png", [("Bootstrap", boot_gray), ("Blurred Bootstrap", blurred_gray)])
    out.panel("panel_overlay.png", [("Errors Over a Threshold Overlaid", overlay),
                                    ("Blurred Errors Over a Threshold Overlaid", overlay_b)])
    return omitted


def _report(out: _Writer, cfg, d):
    rows = sweep(d, cfg.sigma_grid, cfg.blur)
    out.text("sweep.csv", rows_to_csv(rows))
    out.text("sweep.json", rows_to_json(rows))
    decision = None
    if cfg.flag_threshold is not None:
        flagged, message = flag(_flag_row(rows, d, cfg), cfg.flag_threshold)
        decision = {"threshold": cfg.flag_threshold, "flagged": flagged, "message": message}
    return rows, decision


def _install(staging: Path, dest: Path, files) -> None:
    dest.mkdir(parents=True, exist_ok=True)
    old_manifest = dest / "manifest.json"
    previous = []
    if old_manifest.exists():
        previous = [e["path"] for e in json.loads(old_manifest.read_text()).get("files", [])]
        previous.append("manifest.json")
    leftovers = sorted(p.name for p in dest.iterdir() if p.name not in previous)
    if leftovers:
        raise PipelineError(f"stage 'output' failed: {dest} holds unrelated files {leftovers[:5]}")
    for name in previous:
        (dest / name).unlink(missing_ok=True)
    for name in files + ["manifest.json"]:
        shutil.move(str(staging / name), str(dest / name))


def run_pipeline(cfg: PipelineConfig, workers: int = 1) -> dict:
    """Run everything and return the manifest written to ``output_dir``."""
    dest = Path(cfg.output_dir).resolve()
    meas, m, recon, est = compute(cfg, workers)
    log.info("bootstrap: %d iterations in %.1fs", est.iterations, est.wall_clock)
    dest.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".bootviz-", dir=dest.parent))
    try:
        out = _Writer(staging)
        omitted = _render(out, cfg, meas, m, recon, est)
        rows, decision = _report(out, cfg, est.image)
        manifest = {
            "tool": "bootviz",
            "version": __version__,
            "config_fingerprint": cfg.fingerprint(),
            "config": {k: v for k, v in cfg.to_dict().items() if k != "output_dir"},
            "seeds": {"mask": cfg.mask.seed, "bootstrap": cfg.bootstrap.seed},
            "files": [{"path": name, "sha256": _sha256(staging / name)} for name in out.files],
            "omitted": omitted,
            "summary": [asdict(r) for r in rows],
            "flag": decision,
        }
        (staging / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        _install(staging, dest, out.files)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"stage 'output' failed: {exc}") from exc
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return manifest


def run_sweep(cfg: PipelineConfig, workers: int = 1):
    """Bootstrap once, then the sigma sweep of the estimate."""
    _, _, _, est = compute(cfg, workers)
    return sweep(est.image, cfg.sigma_grid, cfg.blur)


VIZ_KINDS = ("gray", "signed", "corrected", "overlay", "overlay_blurred", "saturate", "interpolate")


def render_viz(recon, d, outdir, kinds=VIZ_KINDS, percentile: float = 2.0,
               blur_sigma: float = 1.0) -> list[Path]:
    """Render selected displays of an existing reconstruction and estimate."""
    recon = as_gray(recon, "reconstruction")
    d = as_gray(d, "bootstrap")
    if recon.shape != d.shape:
        raise ValueError(f"dimension mismatch: reconstruction {recon.shape} vs bootstrap {d.shape}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    scale = ErrorScale.of(d)
    shown = np.clip(recon, 0.0, 1.0)
    makers = {
        "gray": lambda: (gray_to_rgb(grayscale_error(d, scale)), "grayscale", {"max_abs": scale.max_abs}),
        "signed": lambda: (signed_colormap(d, scale), "signed", {"max_abs": scale.max_abs}),
        "corrected": lambda: (gray_to_rgb(corrected(recon, d)), "corrected", {}),
        "overlay": lambda: (overlay_threshold(shown, d, OverlayConfig(percentile)), "overlay",
                            {"config": OverlayConfig(percentile)}),
        "overlay_blurred": lambda: (overlay_threshold(shown, d, OverlayConfig(percentile, blur_sigma)),
                                    "overlay", {"config": OverlayConfig(percentile, blur_sigma)}),
        "saturate": lambda: (saturate_colorize(shown, d, scale), "saturate", {"max_abs": scale.max_abs}),
        "interpolate": lambda: (interpolate_colorize(shown, d, scale), "interpolate",
                                {"max_abs": scale.max_abs}),
    }
    written = []
    for kind in kinds:
        img, rendering, config = makers[kind]()
        path = outdir / f"{kind}.png"
        save_color(img, path)
        write_sidecar(path, rendering, **config)
        written.append(path)
    return written
