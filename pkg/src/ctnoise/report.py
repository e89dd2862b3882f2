"""Report emission from sweep records.

Turns a sweep's records.csv into per-filter curve data (cost and ratio
versus parameter configuration), a pre-filter baseline table and an
optimal-filter comparison table, each as a delimited file with a rendered
PNG figure next to it.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import MissingFile
from .noise_metrics import FILTER_KINDS


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def load_records_csv(path: str) -> list[dict]:
    """Rows of a sweep records.csv as dicts with floats parsed."""
    if not os.path.exists(path):
        raise MissingFile(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            parsed = dict(row)
            if row["status"] == "ok":
                for key in (
                    "sigma2_high",
                    "sigma2_low",
                    "r_blind",
                    "r_the",
                    "ratio_of_ratios",
                    "m",
                    "beta",
                    "theta",
                ):
                    parsed[key] = float(row[key])
            else:
                parsed["beta"] = float(row["beta"])
            rows.append(parsed)
    return rows


def _beta_slice(rows: list[dict], beta: float) -> list[dict]:
    return [r for r in rows if r["status"] == "ok" and r["beta"] == beta]


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def _per_filter_curves(rows: list[dict]) -> dict:
    """Mean theta/ratio over pairs per spec, in first-seen (canonical) order."""
    curves: dict[str, dict[str, list]] = {}
    for row in rows:
        kind = row["filter"]
        if kind == "none":
            continue
        per_kind = curves.setdefault(kind, {})
        per_kind.setdefault(row["params"], []).append(row)
    out = {}
    for kind, by_params in curves.items():
        out[kind] = [
            {
                "params": params,
                "mean_theta": _mean(r["theta"] for r in recs),
                "mean_ratio": _mean(r["ratio_of_ratios"] for r in recs),
            }
            for params, recs in by_params.items()
        ]
    return out


def _write_csv(path: str, header: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for line in lines:
            f.write(line + "\n")


def _render_curve(path: str, points: list[dict], kind: str, key: str, beta: float):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ys = [p[key] for p in points]
    ax.plot(range(len(ys)), ys, marker="o", lw=1.2)
    ax.set_xlabel("parameter configuration (canonical order)")
    label = "mean theta" if key == "mean_theta" else "mean R_blind / R_the"
    ax.set_ylabel(label)
    ax.set_title(f"{kind}: {label} across the parameter grid (beta={beta:g})")
    if key == "mean_ratio":
        ax.axhline(1.0, color="gray", ls="--", lw=0.8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def emit_report(records_csv: str, beta: float, out_dir: str) -> list[str]:
    """Write all report artifacts; returns the list of files written."""
    rows = load_records_csv(records_csv)
    sliced = _beta_slice(rows, beta)
    if not sliced:
        raise MissingFile(
            f"{records_csv} holds no usable records at beta={beta:g}"
        )
    os.makedirs(out_dir, exist_ok=True)
    written = []

    curves = _per_filter_curves(sliced)
    for kind in FILTER_KINDS:
        if kind not in curves:
            continue
        points = curves[kind]
        theta_csv = os.path.join(out_dir, f"{kind}_theta_vs_param.csv")
        _write_csv(
            theta_csv,
            "params,mean_theta",
            [f'"{p["params"]}",{_fmt(p["mean_theta"])}' for p in points],
        )
        ratio_csv = os.path.join(out_dir, f"{kind}_ratio_vs_param.csv")
        _write_csv(
            ratio_csv,
            "params,mean_ratio",
            [f'"{p["params"]}",{_fmt(p["mean_ratio"])}' for p in points],
        )
        theta_png = os.path.join(out_dir, f"{kind}_theta_vs_param.png")
        ratio_png = os.path.join(out_dir, f"{kind}_ratio_vs_param.png")
        _render_curve(theta_png, points, kind, "mean_theta", beta)
        _render_curve(ratio_png, points, kind, "mean_ratio", beta)
        written += [theta_csv, ratio_csv, theta_png, ratio_png]

    # Pre-filter baseline per pair (the before-filtering scatter).
    baseline = [r for r in sliced if r["filter"] == "none"]
    if baseline:
        base_csv = os.path.join(out_dir, "fig4_baseline.csv")
        _write_csv(
            base_csv,
            "pair_id,ratio_of_ratios,theta",
            [
                f'{r["pair_id"]},{_fmt(r["ratio_of_ratios"])},{_fmt(r["theta"])}'
                for r in baseline
            ],
        )
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        ids = [r["pair_id"] for r in baseline]
        axes[0].bar(ids, [r["ratio_of_ratios"] for r in baseline])
        axes[0].axhline(1.0, color="gray", ls="--", lw=0.8)
        axes[0].set_ylabel("R_blind / R_the")
        axes[1].bar(ids, [r["theta"] for r in baseline])
        axes[1].set_ylabel("theta")
        for ax in axes:
            ax.tick_params(axis="x", rotation=45)
        fig.suptitle(f"Pre-filter baseline (beta={beta:g})")
        fig.tight_layout()
        base_png = os.path.join(out_dir, "fig4_baseline.png")
        fig.savefig(base_png, dpi=120)
        plt.close(fig)
        written += [base_csv, base_png]

    # Optimal configuration per filter kind.
    if curves:
        optimal = []
        for kind in FILTER_KINDS:
            if kind not in curves:
                continue
            best = min(
                enumerate(curves[kind]), key=lambda item: (item[1]["mean_theta"], item[0])
            )[1]
            optimal.append((kind, best))
        opt_csv = os.path.join(out_dir, "fig6_optimal.csv")
        _write_csv(
            opt_csv,
            "filter,params,beta,mean_theta,mean_ratio",
            [
                f'{kind},"{best["params"]}",{_fmt(beta)},'
                f'{_fmt(best["mean_theta"])},{_fmt(best["mean_ratio"])}'
                for kind, best in optimal
            ],
        )
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        kinds = [k for k, _ in optimal]
        axes[0].bar(kinds, [b["mean_theta"] for _, b in optimal])
        axes[0].set_ylabel("mean theta at optimum")
        axes[1].bar(kinds, [b["mean_ratio"] for _, b in optimal])
        axes[1].axhline(1.0, color="gray", ls="--", lw=0.8)
        axes[1].set_ylabel("mean R_blind / R_the at optimum")
        fig.suptitle(f"Optimal filter comparison (beta={beta:g})")
        fig.tight_layout()
        opt_png = os.path.join(out_dir, "fig6_optimal.png")
        fig.savefig(opt_png, dpi=120)
        plt.close(fig)
        written += [opt_csv, opt_png]

    return written
