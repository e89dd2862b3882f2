"""Filter-parameter grid sweeps and Table-style optimal selection.

A sweep evaluates every (scan pair, filter configuration) point of a
Cartesian parameter grid, records the blind-estimation metrics for each,
and selects per filter kind the configuration minimizing the mean cost
over pairs. Evaluation points are independent, so they may run in a
worker pool; results are always assembled in the canonical ordering, so
output is byte-identical regardless of worker count.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import spatial_filters as sf
from . import spectral_filters as xf
from .errors import (
    AllDegenerate,
    DegenerateHighVariance,
    EmptyAxis,
    InvalidParams,
    MissingBaseline,
)
from .noise_metrics import (
    DEFAULT_BETAS,
    FILTER_KINDS,
    FilterSpec,
    NoiseEstimate,
    estimate,
)
from .phantom import ScanPair

# Axis order per filter kind; grid enumeration and tie-breaking follow it.
GRID_AXES = {
    "mf": ("half_width", "sigma_t"),
    "bf": ("half_width", "sigma_sx", "sigma_sy", "sigma_r"),
    "ad": ("iterations", "delta", "kappa", "conduction"),
    "cdwt": ("threshold",),
    "fde": ("noise_variance",),
    "pwnlm": (),
    "none": (),
}

_PARAM_CLASSES = {
    "mf": sf.MatchedFilterParams,
    "bf": sf.BilateralParams,
    "ad": sf.AdParams,
    "cdwt": xf.CdwtParams,
    "fde": xf.FdeParams,
}

_CONDUCTION_ALIASES = {
    "exp": "exponential",
    "exponential": "exponential",
    "rec": "reciprocal",
    "reciprocal": "reciprocal",
}

# Brackets the interesting region for each filter; override via config.
DEFAULT_GRID = {
    "none": {},
    "mf": {"half_width": [1, 2, 3], "sigma_t": [0.5, 1.0, 2.0]},
    "bf": {
        "half_width": [1, 2, 3, 4],
        "sigma_sx": [0.3, 1.0, 2.0, 3.0],
        "sigma_sy": [0.3, 1.0, 2.0, 3.0],
        "sigma_r": [25.0, 50.0, 100.0],
    },
    "ad": {
        "iterations": [5, 10, 20, 40],
        "delta": [0.05, 0.1, 0.2, 0.25],
        "kappa": [10.0, 30.0, 54.0, 80.0],
        "conduction": ["exp"],
    },
    "cdwt": {"threshold": [50.0, 100.0, 150.0, 200.0, 300.0]},
    "fde": {"noise_variance": [1e-10, 1e-9, 1e-8, 1e-7, 1e-6]},
    "pwnlm": {},
}

_INT_FIELDS = {"half_width", "iterations"}


def _coerce(name: str, value):
    if name == "conduction":
        key = str(value).lower()
        if key not in _CONDUCTION_ALIASES:
            raise InvalidParams(f"unknown conduction {value!r}")
        return _CONDUCTION_ALIASES[key]
    if name in _INT_FIELDS:
        return int(value)
    return float(value)


def make_spec(kind: str, values: dict) -> FilterSpec:
    """Build a FilterSpec from a plain key/value mapping."""
    if kind not in GRID_AXES:
        raise InvalidParams(f"unknown filter kind {kind!r}")
    axes = GRID_AXES[kind]
    unknown = set(values) - set(axes)
    if unknown:
        raise InvalidParams(f"{kind} does not take parameters {sorted(unknown)}")
    if kind in ("pwnlm", "none"):
        return FilterSpec(kind)
    cls = _PARAM_CLASSES[kind]
    kwargs = {name: _coerce(name, value) for name, value in values.items()}
    return FilterSpec(kind, cls(**kwargs))


def parse_params(kind: str, text: str) -> FilterSpec:
    """Parse the flat ``key=value,...`` wire form into a FilterSpec."""
    values = {}
    if text:
        for item in text.split(","):
            if "=" not in item:
                raise InvalidParams(f"malformed parameter item {item!r}")
            name, _, raw = item.partition("=")
            values[name.strip()] = raw.strip()
    return make_spec(kind, values)


@dataclass(frozen=True)
class FilterGrid:
    """Candidate values per parameter, per filter kind, plus the beta list."""

    filters: dict  # kind -> {param -> [values]}
    betas: tuple = DEFAULT_BETAS

    def __post_init__(self):
        if not self.betas:
            raise EmptyAxis("betas must be non-empty")
        for kind, axes in self.filters.items():
            if kind not in GRID_AXES:
                raise InvalidParams(f"unknown filter kind {kind!r}")
            for name, values in axes.items():
                if not values:
                    raise EmptyAxis(f"{kind}.{name} axis is empty")

    @classmethod
    def default(cls) -> "FilterGrid":
        return cls(filters=DEFAULT_GRID)

    @classmethod
    def from_config(cls, config: dict) -> "FilterGrid":
        filters = config.get("filters", DEFAULT_GRID)
        betas = tuple(float(b) for b in config.get("betas", DEFAULT_BETAS))
        return cls(filters=filters, betas=betas)


def enumerate_grid(grid: FilterGrid) -> list[FilterSpec]:
    """Cartesian product per filter, in the canonical deterministic order.

    Kinds follow the FILTER_KINDS order; within a kind, the product runs
    lexicographically with the last declared axis varying fastest.
    """
    specs = []
    for kind in FILTER_KINDS:
        if kind not in grid.filters:
            continue
        axes = GRID_AXES[kind]
        config = grid.filters[kind]
        # Axes absent from the config fall back to the parameter defaults.
        names = [a for a in axes if a in config]
        for combo in itertools.product(*(config[a] for a in names)):
            specs.append(make_spec(kind, dict(zip(names, combo))))
    return specs


@dataclass(frozen=True)
class SweepRecord:
    pair_id: str
    spec: FilterSpec
    estimate: NoiseEstimate | None
    status: str = "ok"  # "ok" | "degenerate"


@dataclass(frozen=True)
class OptimalEntry:
    kind: str
    best_spec: FilterSpec
    beta: float
    mean_theta: float
    mean_ratio: float


def _evaluate_point(args):
    pair_id, pair, spec, betas = args
    try:
        est = estimate(pair, spec, betas)
        return SweepRecord(pair_id, spec, est, "ok")
    except DegenerateHighVariance:
        return SweepRecord(pair_id, spec, None, "degenerate")


def worker_count() -> int:
    """Bounded sweep parallelism; CTNOISE_THREADS overrides the default."""
    env = os.environ.get("CTNOISE_THREADS")
    if env:
        count = int(env)
        if count < 1:
            raise InvalidParams("CTNOISE_THREADS must be a positive integer")
        return count
    return min(os.cpu_count() or 1, 8)


def run_sweep(
    pairs: list[tuple[str, ScanPair]], grid: FilterGrid, workers: int | None = None
) -> list[SweepRecord]:
    """Evaluate every (pair, spec) grid point.

    Degenerate points (zero residual variance) are kept as flagged
    records instead of aborting the sweep. Output order is canonical:
    by pair id, then by grid enumeration order.
    """
    if not pairs:
        raise InvalidParams("run_sweep needs at least one pair")
    specs = enumerate_grid(grid)
    ordered_pairs = sorted(pairs, key=lambda item: item[0])
    tasks = [
        (pair_id, pair, spec, grid.betas)
        for pair_id, pair in ordered_pairs
        for spec in specs
    ]
    if workers is None:
        workers = worker_count()
    if workers <= 1 or len(tasks) <= 1:
        return [_evaluate_point(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map() preserves task order, so assembly is completion-order
        # independent and the records come back already canonical.
        return list(pool.map(_evaluate_point, tasks, chunksize=4))


def _spec_order_index(specs: list[FilterSpec]) -> dict:
    return {spec.serialize(): i for i, spec in enumerate(specs)}


def select_optimal(records: list[SweepRecord], beta: float) -> list[OptimalEntry]:
    """Per filter kind, the spec minimizing mean theta over pairs.

    Specs with any degenerate record are ineligible; ties break toward
    the earlier spec in the canonical ordering.
    """
    if not records:
        raise InvalidParams("select_optimal needs records")
    by_spec: dict[str, list[SweepRecord]] = {}
    first_seen: dict[str, int] = {}
    for i, rec in enumerate(records):
        key = rec.spec.serialize()
        by_spec.setdefault(key, []).append(rec)
        first_seen.setdefault(key, i)

    candidates: dict[str, list] = {}
    for key, recs in by_spec.items():
        if any(r.status != "ok" for r in recs):
            continue
        kind = recs[0].spec.kind
        thetas = [r.estimate.theta_by_beta[beta] for r in recs]
        ratios = [r.estimate.ratio_of_ratios for r in recs]
        entry = (
            sum(thetas) / len(thetas),
            first_seen[key],
            recs[0].spec,
            sum(ratios) / len(ratios),
        )
        candidates.setdefault(kind, []).append(entry)

    if not candidates:
        raise AllDegenerate("every spec produced a degenerate record")

    out = []
    for kind in FILTER_KINDS:
        if kind not in candidates:
            continue
        mean_theta, _, spec, mean_ratio = min(
            candidates[kind], key=lambda e: (e[0], e[1])
        )
        out.append(
            OptimalEntry(
                kind=kind,
                best_spec=spec,
                beta=beta,
                mean_theta=mean_theta,
                mean_ratio=mean_ratio,
            )
        )
    return out


def aggregate_summary(records: list[SweepRecord], beta: float) -> dict:
    """Pre- vs post-filter means over pairs, at one beta.

    Requires baseline (kind "none") records; the post-filter side uses
    each kind's optimal spec. The comparison block is present only when
    filtered records exist.
    """
    baseline = [r for r in records if r.spec.kind == "none" and r.status == "ok"]
    if not baseline:
        raise MissingBaseline("summary needs baseline (filter 'none') records")
    filtered = [r for r in records if r.spec.kind != "none"]

    def _means(recs):
        thetas = [r.estimate.theta_by_beta[beta] for r in recs]
        ratios = [r.estimate.ratio_of_ratios for r in recs]
        return sum(thetas) / len(thetas), sum(ratios) / len(ratios)

    pre_theta, pre_ratio = _means(baseline)
    summary = {
        "beta": beta,
        "pairs": sorted({r.pair_id for r in records}),
        "baseline": {"mean_theta": pre_theta, "mean_ratio": pre_ratio},
    }
    if filtered:
        optima = select_optimal(records, beta)
        per_filter = {}
        best = None
        for entry in optima:
            if entry.kind == "none":
                continue
            per_filter[entry.kind] = {
                "best_params": entry.best_spec.serialize(),
                "mean_theta": entry.mean_theta,
                "mean_ratio": entry.mean_ratio,
            }
            if best is None or entry.mean_theta < best.mean_theta:
                best = entry
        summary["filters"] = per_filter
        if best is not None:
            summary["comparison"] = {
                "best_filter": best.kind,
                "pre_mean_theta": pre_theta,
                "post_mean_theta": best.mean_theta,
                "pre_mean_ratio": pre_ratio,
                "post_mean_ratio": best.mean_ratio,
            }
    return summary


# -- CSV emission -------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.9g}"


RECORD_COLUMNS = (
    "pair_id,filter,params,sigma2_high,sigma2_low,r_blind,r_the,"
    "ratio_of_ratios,m,beta,theta,status"
)


def records_to_csv(records: list[SweepRecord], betas) -> str:
    """One row per record and beta; floats at 9 significant digits.

    The params field carries commas, so it is always double-quoted.
    """
    lines = [RECORD_COLUMNS]
    for rec in records:
        kind = rec.spec.kind
        _, _, params = rec.spec.serialize().partition(":")
        for beta in betas:
            if rec.status == "ok":
                est = rec.estimate
                fields = [
                    rec.pair_id,
                    kind,
                    f'"{params}"',
                    _fmt(est.sigma2_high),
                    _fmt(est.sigma2_low),
                    _fmt(est.r_blind),
                    _fmt(est.r_the),
                    _fmt(est.ratio_of_ratios),
                    _fmt(est.m),
                    _fmt(beta),
                    _fmt(est.theta_by_beta[float(beta)]),
                    "ok",
                ]
            else:
                fields = [
                    rec.pair_id, kind, f'"{params}"',
                    "", "", "", "", "", "", _fmt(beta), "", "degenerate",
                ]
            lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


OPTIMAL_COLUMNS = "filter,params,beta,mean_theta,mean_ratio"


def optimal_to_csv(entries: list[OptimalEntry]) -> str:
    lines = [OPTIMAL_COLUMNS]
    for e in entries:
        _, _, params = e.best_spec.serialize().partition(":")
        lines.append(
            ",".join(
                [
                    e.kind,
                    f'"{params}"',
                    _fmt(e.beta),
                    _fmt(e.mean_theta),
                    _fmt(e.mean_ratio),
                ]
            )
        )
    return "\n".join(lines) + "\n"
