"""Command-line interface.

Exit status: 0 on success, 1 on a failed stage, 2 on bad usage, and 3 when
``--flag-threshold`` is set and the blurred rss exceeds it.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import __version__
from .bootstrap import load_estimate
from .core_image import ImageIOError, load_gray, save_gray
from .phantom import shepp_logan
from .pipeline import (
    FLAGGED_EXIT,
    VIZ_KINDS,
    PipelineConfig,
    PipelineError,
    load_config,
    render_viz,
    run_pipeline,
    run_sweep,
)
from .sampling import MaskSpec, make_mask, mask_to_rle, retained_fraction_of, save_mask_pgm
from .summary import SummaryRow, flag, format_table, rows_to_csv
from .viz import OverlayConfig

log = logging.getLogger("bootviz")

# flag dest -> (config section, field)
_OVERRIDES = {
    "mask_kind": ("mask", "kind"),
    "retained_fraction": ("mask", "retained_fraction"),
    "center_fraction": ("mask", "center_fraction"),
    "num_spokes": ("mask", "num_spokes"),
    "mask_seed": ("mask", "seed"),
    "lam": ("recon", "lam"),
    "recon_iterations": ("recon", "iterations"),
    "step": ("recon", "step"),
    "transform": ("recon", "transform"),
    "bootstrap_iterations": ("bootstrap", "iterations"),
    "seed": ("bootstrap", "seed"),
    "resample_kind": ("bootstrap", "resample_kind"),
    "blur_sigma": ("blur", "sigma"),
    "truncate": ("blur", "truncate"),
    "boundary": ("blur", "boundary"),
}


def _sigmas(text):
    try:
        return tuple(float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sigma list {text!r}")


def _add_config_args(p):
    p.add_argument("-c", "--config", help="JSON config file (see README for the schema)")
    p.add_argument("-i", "--input", help="phantom[:N], a gray PNG/PGM, or complex k-space .npy")
    p.add_argument("-o", "--output-dir")
    g = p.add_argument_group("sampling")
    g.add_argument("--mask-kind", choices=["horizontal", "radial", "full"])
    g.add_argument("--retained-fraction", type=float)
    g.add_argument("--center-fraction", type=float)
    g.add_argument("--num-spokes", type=int)
    g.add_argument("--mask-seed", type=int)
    g = p.add_argument_group("reconstruction")
    g.add_argument("--lam", type=float, help="sparsity weight")
    g.add_argument("--recon-iterations", type=int)
    g.add_argument("--step", type=float)
    g.add_argument("--transform", choices=["haar", "identity"])
    g = p.add_argument_group("bootstrap")
    g.add_argument("-n", "--bootstrap-iterations", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--resample-kind", choices=["mask_resample", "residual_resample"])
    g.add_argument("-j", "--workers", type=int, default=1, help="bootstrap threads")
    g = p.add_argument_group("display and summary")
    g.add_argument("--percentile", type=float, help="overlay the upper PERCENTILE of |d|")
    g.add_argument("--overlay-blur", type=float, help="sigma of the blurred overlay variant")
    g.add_argument("--blur-sigma", type=float)
    g.add_argument("--truncate", type=float)
    g.add_argument("--boundary", choices=["symmetric", "mirror"])
    g.add_argument("--sigmas", type=_sigmas, help="comma-separated sweep grid")
    g.add_argument("--flag-threshold", type=float)


def build_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    sections = {}
    for dest, (section, name) in _OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            sections.setdefault(section, {})[name] = value
    changes = {s: dataclasses.replace(getattr(cfg, s), **kw) for s, kw in sections.items()}
    if args.input is not None:
        changes["input"] = args.input
    if args.output_dir is not None:
        changes["output_dir"] = args.output_dir
    if args.sigmas is not None:
        changes["sigma_grid"] = args.sigmas
    if args.flag_threshold is not None:
        changes["flag_threshold"] = args.flag_threshold
    cfg = dataclasses.replace(cfg, **changes)
    if args.percentile is not None or args.overlay_blur is not None:
        base = cfg.overlay_config()
        cfg.overlay = OverlayConfig(
            percentile=base.percentile if args.percentile is None else args.percentile,
            pre_blur_sigma=base.pre_blur_sigma if args.overlay_blur is None else args.overlay_blur,
        )
    return cfg


def cmd_pipeline(args) -> int:
    cfg = build_config(args)
    manifest = run_pipeline(cfg, workers=args.workers)
    print(f"wrote {len(manifest['files']) + 1} files to {cfg.output_dir}")
    print(format_table([SummaryRow(**r) for r in manifest["summary"]]))
    decision = manifest["flag"]
    if decision is not None:
        print(decision["message"])
        if decision["flagged"]:
            return FLAGGED_EXIT
    return 0


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    rows = run_sweep(cfg, workers=args.workers)
    text = rows_to_csv(rows)
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        Path(args.csv).write_text(text)
        print(format_table(rows))
    else:
        sys.stdout.write(text)
    if cfg.flag_threshold is not None:
        row = next((r for r in rows if r.sigma == cfg.blur.sigma), None)
        if row is not None:
            flagged, message = flag(row, cfg.flag_threshold)
            print(message, file=sys.stderr)
            if flagged:
                return FLAGGED_EXIT
    return 0


def _load_bootstrap(path):
    path = Path(path)
    if path.with_suffix(".json").exists():
        return load_estimate(path).image
    # plain grayscale display: mid-gray is zero error
    return 2.0 * load_gray(path) - 1.0


def cmd_viz(args) -> int:
    recon = load_gray(args.recon)
    d = _load_bootstrap(args.bootstrap)
    if recon.shape != d.shape:
        raise PipelineError(
            f"viz: reconstruction {args.recon} is {recon.shape[0]}x{recon.shape[1]} but "
            f"bootstrap {args.bootstrap} is {d.shape[0]}x{d.shape[1]}"
        )
    kinds = [k for k in VIZ_KINDS if getattr(args, k)] or list(VIZ_KINDS)
    written = render_viz(recon, d, args.output_dir, kinds, percentile=args.percentile,
                         blur_sigma=args.overlay_blur)
    for path in written:
        print(path)
    return 0


def cmd_phantom(args) -> int:
    save_gray(shepp_logan(args.size), args.output, bits=args.bits)
    print(args.output)
    return 0


def cmd_mask(args) -> int:
    spec = MaskSpec(kind=args.kind, retained_fraction=args.retained_fraction,
                    center_fraction=args.center_fraction, num_spokes=args.num_spokes, seed=args.seed)
    m = make_mask(spec, args.height, args.width or args.height)
    save_mask_pgm(m, args.output)
    if args.rle:
        Path(args.rle).write_text(mask_to_rle(m))
    print(f"{args.output}: retained fraction {retained_fraction_of(m):.4f}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bootviz", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bootviz {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="reconstruct, bootstrap, render and report")
    _add_config_args(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("sweep", help="rss of the blurred bootstrap over a sigma grid (CSV)")
    _add_config_args(p)
    p.add_argument("--csv", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("viz", help="render displays from saved reconstruction and bootstrap")
    p.add_argument("recon")
    p.add_argument("bootstrap", help="estimate PNG with .json sidecar, or a grayscale display")
    p.add_argument("-o", "--output-dir", default="bootviz-viz")
    for kind in VIZ_KINDS:
        p.add_argument(f"--{kind.replace('_', '-')}", dest=kind, action="store_true")
    p.add_argument("--percentile", type=float, default=2.0)
    p.add_argument("--overlay-blur", type=float, default=1.0)
    p.set_defaults(func=cmd_viz)

    p = sub.add_parser("phantom", help="write a Shepp-Logan phantom")
    p.add_argument("-n", "--size", type=int, default=128)
    p.add_argument("--bits", type=int, choices=[8, 16], default=16)
    p.add_argument("-o", "--output", default="phantom.png")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("mask", help="write a sampling mask as PGM")
    p.add_argument("--kind", choices=["horizontal", "radial", "full"], default="horizontal")
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--width", type=int)
    p.add_argument("--retained-fraction", type=float, default=0.25)
    p.add_argument("--center-fraction", type=float, default=0.08)
    p.add_argument("--num-spokes", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="mask.pgm")
    p.add_argument("--rle", help="also write the run-length text encoding here")
    p.set_defaults(func=cmd_mask)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PipelineError, ImageIOError, ValueError) as exc:
        print(f"bootviz: error: {exc}", file=sys.stderr)
        return 1
