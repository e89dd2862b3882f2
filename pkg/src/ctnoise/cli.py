"""Command-line entry point.

Subcommands: ``phantom`` (generate a synthetic scan pair with ground
truth), ``estimate`` (one pair, one filter configuration, JSON to
stdout), ``sweep`` (full parameter grid over a pair manifest, CSV/JSON
artifacts) and ``report`` (plot data plus rendered figures from a sweep).

Exit codes: 0 success, 1 usage error, 2 input/format error,
3 degenerate computation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import report as report_mod
from .errors import AllDegenerate, CtNoiseError, DegenerateHighVariance, InvalidParams
from .image_core import Image, Roi, load_image, save_image
from .noise_metrics import DEFAULT_BETAS, estimate
from .phantom import PhantomParams, ScanPair, generate_pair
from .sweep import (
    FilterGrid,
    aggregate_summary,
    optimal_to_csv,
    parse_params,
    records_to_csv,
    run_sweep,
    select_optimal,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_DEGENERATE = 3

_TEXTURE_KERNELS = {
    "k3": np.ones((3, 3)),
    "k5": np.ones((5, 5)),
}


class UsageError(Exception):
    """Bad flags or flag values; maps to exit code 1."""


class InputError(Exception):
    """Unreadable or malformed input files; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w_str, _, h_str = text.lower().partition("x")
        width, height = int(w_str), int(h_str)
    except ValueError:
        raise UsageError(f"bad --size {text!r}, expected WxH") from None
    return width, height


def _parse_roi(text: str) -> Roi:
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError(f"bad --roi {text!r}, expected x,y,w,h")
    try:
        x, y, w, h = (int(p) for p in parts)
        return Roi(x, y, w, h)
    except (ValueError, CtNoiseError) as exc:
        raise UsageError(f"bad --roi {text!r}: {exc}") from None


def _parse_betas(text: str) -> tuple:
    try:
        betas = tuple(float(b) for b in text.split(","))
    except ValueError:
        raise UsageError(f"bad --betas {text!r}") from None
    if not betas:
        raise UsageError("--betas must be non-empty")
    return betas


def _round9(value):
    """9-significant-digit float rendering, applied recursively."""
    if isinstance(value, float):
        return float(f"{value:.9g}")
    if isinstance(value, dict):
        return {k: _round9(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round9(v) for v in value]
    return value


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _default_roi(width: int, height: int) -> Roi:
    w = min(128, width)
    h = min(128, height)
    return Roi((width - w) // 2, (height - h) // 2, w, h)


def cmd_phantom(args) -> int:
    try:
        width, height = _parse_size(args.size)
        roi = _parse_roi(args.roi) if args.roi else _default_roi(width, height)
        kernel = None
        if args.texture:
            if args.texture not in _TEXTURE_KERNELS:
                raise UsageError(f"unknown --texture {args.texture!r}")
            kernel = _TEXTURE_KERNELS[args.texture]
        params = PhantomParams(
            width=width,
            height=height,
            sigma_high=args.sigma_high,
            ratio=args.ratio,
            roi=roi,
            signal=args.signal,
            texture_kernel=kernel,
            seed=args.seed,
        )
    except InvalidParams as exc:
        raise UsageError(str(exc)) from None

    pair, gt = generate_pair(params)
    try:
        gt_dir = os.path.join(args.out, "groundtruth")
        os.makedirs(gt_dir, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory: {exc}") from None

    save_image(pair.high, os.path.join(args.out, "high"))
    save_image(pair.low, os.path.join(args.out, "low"))
    # One noise-free counterpart per study, carrying that study's metadata.
    save_image(Image(gt.clean.pixels, pair.high.meta), os.path.join(gt_dir, "clean_high"))
    save_image(Image(gt.clean.pixels, pair.low.meta), os.path.join(gt_dir, "clean_low"))
    save_image(gt.noise_high, os.path.join(gt_dir, "noise_high"))
    save_image(gt.noise_low, os.path.join(gt_dir, "noise_low"))

    manifest = [
        {
            "id": f"phantom-{args.seed}",
            "high": "high",
            "low": "low",
            "roi": [roi.x, roi.y, roi.w, roi.h],
            "rthe_override": None,
        }
    ]
    _write_text(
        os.path.join(args.out, "manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )
    return EXIT_OK


def cmd_estimate(args) -> int:
    try:
        spec = parse_params(args.filter, args.params)
    except InvalidParams as exc:
        raise UsageError(str(exc)) from None
    roi = _parse_roi(args.roi)
    betas = _parse_betas(args.betas) if args.betas else DEFAULT_BETAS
    if args.rthe is not None and args.rthe <= 0:
        raise UsageError("--rthe must be positive")

    high = load_image(args.high)
    low = load_image(args.low)
    try:
        pair = ScanPair(high=high, low=low, roi=roi, rthe_override=args.rthe)
    except InvalidParams as exc:
        raise InputError(str(exc)) from None

    est = estimate(pair, spec, betas)
    payload = _round9(est.as_dict())
    payload["filter"] = spec.serialize()
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _load_manifest(path: str) -> list[tuple[str, ScanPair]]:
    if not os.path.exists(path):
        raise InputError(f"missing manifest {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            entries = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed manifest {path}: {exc}") from None
    if not isinstance(entries, list) or not entries:
        raise InputError(f"manifest {path} must be a non-empty JSON list")
    base = os.path.dirname(os.path.abspath(path))
    pairs = []
    for entry in entries:
        try:
            pair_id = str(entry["id"])
            roi = Roi(*(int(v) for v in entry["roi"]))
            high = load_image(os.path.join(base, entry["high"]))
            low = load_image(os.path.join(base, entry["low"]))
            override = entry.get("rthe_override")
            pair = ScanPair(
                high=high,
                low=low,
                roi=roi,
                rthe_override=float(override) if override is not None else None,
            )
        except (KeyError, TypeError, ValueError, CtNoiseError) as exc:
            raise InputError(f"bad manifest entry in {path}: {exc}") from None
        pairs.append((pair_id, pair))
    return pairs


def _load_grid(path: str | None) -> FilterGrid:
    if path is None:
        return FilterGrid.default()
    if not os.path.exists(path):
        raise InputError(f"missing config {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            config = json.load(f)
        return FilterGrid.from_config(config)
    except (OSError, json.JSONDecodeError, TypeError, CtNoiseError) as exc:
        raise InputError(f"malformed config {path}: {exc}") from None


def cmd_sweep(args) -> int:
    pairs = _load_manifest(args.pairs)
    grid = _load_grid(args.config)
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory: {exc}") from None

    records = run_sweep(pairs, grid)
    _write_text(
        os.path.join(args.out, "records.csv"), records_to_csv(records, grid.betas)
    )

    optimal = []
    per_beta_summary = {}
    for beta in grid.betas:
        entries = [e for e in select_optimal(records, beta) if e.kind != "none"]
        optimal.extend(entries)
        per_beta_summary[f"{beta:.9g}"] = aggregate_summary(records, beta)
    _write_text(os.path.join(args.out, "optimal.csv"), optimal_to_csv(optimal))
    summary = {
        "betas": list(grid.betas),
        "per_beta": per_beta_summary,
    }
    _write_text(
        os.path.join(args.out, "summary.json"),
        json.dumps(_round9(summary), indent=2, sort_keys=True) + "\n",
    )
    return EXIT_OK


def cmd_report(args) -> int:
    records_csv = os.path.join(args.indir, "records.csv")
    report_mod.emit_report(records_csv, args.beta, args.out)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="ctnoise", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a synthetic scan pair")
    p.add_argument("--out", required=True)
    p.add_argument("--size", required=True, help="WxH in pixels")
    p.add_argument("--sigma-high", dest="sigma_high", type=float, required=True)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--signal", default="uniform", help="uniform | ramp:A | chest")
    p.add_argument("--roi", default=None, help="x,y,w,h (default: centered 128x128)")
    p.add_argument("--texture", default=None, help="noise texture kernel (k3 | k5)")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("estimate", help="blind estimate for one pair")
    p.add_argument("--high", required=True, help="image container base path")
    p.add_argument("--low", required=True)
    p.add_argument("--roi", required=True, help="x,y,w,h")
    p.add_argument("--filter", required=True)
    p.add_argument("--params", default="", help="key=value,...")
    p.add_argument("--rthe", type=float, default=None)
    p.add_argument("--betas", default=None, help="comma-separated beta values")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="grid sweep over a pair manifest")
    p.add_argument("--pairs", required=True, help="pair manifest JSON")
    p.add_argument("--config", default=None, help="grid config JSON (default grid if omitted)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="plot data and figures from a sweep")
    p.add_argument("--in", dest="indir", required=True, help="sweep output directory")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"ctnoise: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateHighVariance, AllDegenerate) as exc:
        print(f"ctnoise: degenerate computation: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except InputError as exc:
        print(f"ctnoise: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CtNoiseError as exc:
        print(f"ctnoise: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
