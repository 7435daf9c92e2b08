"""Batch trial execution, sweeps, summary statistics and scaling fits.

Reproducibility contract: trial t of cell c under master seed s runs with
seed ``mix_seed(s, c, t)``, so results are independent of worker count
and scheduling order.  Aggregates are exact where possible: means and
quantiles of evaluation counts are rationals, and only standard
deviations pass through floats.  Runs that exhaust their budget are
censored; their counts are lower bounds, so means over cells with
censoring are labelled lower-bound estimates and are rejected by
``fit_scaling`` unless explicitly allowed.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import problems
from .bitvec import mix_seed
from .ea import RunConfig, run, run_accept_all
from .oracle import lumped_chain_efht
from .problems import Instance

CSV_COLUMNS = (
    "family",
    "n",
    "k",
    "d",
    "r",
    "m",
    "trials",
    "censored",
    "mean",
    "median",
    "stddev",
    "stderr",
    "q05",
    "q95",
    "max_evals",
)


def format_value(value) -> str:
    """Canonical text form: exact rationals as p/q (integers plain), floats via repr."""
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class TrialStats:
    """Summary of one batch of independent runs on one instance."""

    cell: str
    family: str
    n: int
    k: int | None
    d: int | None
    r: int | None
    m: int | None
    trials: int
    censored: int
    mean: Fraction
    median: Fraction
    stddev: float
    stderr: float
    q05: Fraction
    q95: Fraction
    max_evaluations: int

    @property
    def is_lower_bound(self) -> bool:
        """True when censored runs make the mean a lower-bound estimate."""
        return self.censored > 0

    @property
    def ci95(self) -> tuple[float, float]:
        """mean +- 1.96 stderr (normal approximation)."""
        center = float(self.mean)
        return (center - 1.96 * self.stderr, center + 1.96 * self.stderr)

    def csv_row(self) -> str:
        values = (
            self.family,
            self.n,
            self.k,
            self.d,
            self.r,
            self.m,
            self.trials,
            self.censored,
            self.mean,
            self.median,
            self.stddev,
            self.stderr,
            self.q05,
            self.q95,
            self.max_evaluations,
        )
        return ",".join(format_value(v) for v in values)

    def record(self) -> str:
        """One-line structured text mirroring the CSV fields."""
        pairs = zip(CSV_COLUMNS, self.csv_row().split(","))
        extras = f" lower_bound={int(self.is_lower_bound)} ci95={self.ci95[0]!r}..{self.ci95[1]!r}"
        return " ".join(f"{name}={value}" for name, value in pairs) + extras


def write_csv(stats: Sequence[TrialStats]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(s.csv_row() for s in stats)
    return "\n".join(lines) + "\n"


def _quantile(sorted_values: Sequence[int], q: Fraction) -> Fraction:
    """Linearly interpolated quantile at exact position q (len - 1)."""
    position = q * (len(sorted_values) - 1)
    low = math.floor(position)
    frac = position - low
    if frac == 0:
        return Fraction(sorted_values[low])
    return Fraction(sorted_values[low]) + frac * (sorted_values[low + 1] - sorted_values[low])


class CellTimeoutError(RuntimeError):
    """Raised when a cell exceeds its wall-clock guard before finishing."""


def _trial_task(args) -> tuple[int, bool]:
    inst, seed, max_evaluations, stop = args
    result = run(inst, RunConfig(seed=seed, max_evaluations=max_evaluations, stop_on_optimum=stop))
    return result.evaluations, result.hit_optimum


def _default_cell(inst: Instance) -> str:
    parts = [inst.family] + [f"{key}={val}" for key, val in sorted(inst.params().items())]
    return "/".join(parts)


def run_trials(
    inst: Instance,
    trials: int,
    master_seed: int,
    max_evaluations: int,
    stop_on_optimum: bool = True,
    workers: int = 1,
    cell: str | None = None,
    r: int | None = None,
    max_seconds: float | None = None,
) -> TrialStats:
    """Execute independent runs with per-trial derived seeds and aggregate.

    ``max_seconds`` is an opt-in wall-clock guard: a cell that cannot
    finish in time raises CellTimeoutError instead of aggregating a
    timing-dependent subset (which would break reproducibility).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cell_id = cell if cell is not None else _default_cell(inst)
    tasks = [
        (inst, mix_seed(master_seed, cell_id, t), max_evaluations, stop_on_optimum)
        for t in range(trials)
    ]
    if max_seconds is not None:
        # the guard checks between trials, so it runs the cell sequentially
        deadline = time.monotonic() + max_seconds
        outcomes = []
        for task in tasks:
            if time.monotonic() > deadline:
                raise CellTimeoutError(
                    f"cell {cell_id} exceeded {max_seconds}s after {len(outcomes)}/{trials} trials"
                )
            outcomes.append(_trial_task(task))
    elif workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=min(workers, trials)) as pool:
            outcomes = list(pool.map(_trial_task, tasks, chunksize=max(1, trials // (8 * workers))))
    else:
        outcomes = [_trial_task(task) for task in tasks]

    evaluations = sorted(e for e, _ in outcomes)
    censored = sum(1 for _, hit in outcomes if not hit)
    mean = Fraction(sum(evaluations), trials)
    if trials > 1:
        variance = sum((Fraction(e) - mean) ** 2 for e in evaluations) / (trials - 1)
        stddev = math.sqrt(float(variance))
    else:
        stddev = 0.0
    stderr = stddev / math.sqrt(trials)
    params = inst.params()
    return TrialStats(
        cell=cell_id,
        family=inst.family,
        n=inst.n,
        k=params.get("k"),
        d=params.get("d"),
        r=r,
        m=params.get("m"),
        trials=trials,
        censored=censored,
        mean=mean,
        median=_quantile(evaluations, Fraction(1, 2)),
        stddev=stddev,
        stderr=stderr,
        q05=_quantile(evaluations, Fraction(1, 20)),
        q95=_quantile(evaluations, Fraction(19, 20)),
        max_evaluations=max_evaluations,
    )


# ---------------------------------------------------------------------------
# sweeps

_SWEEP_BUILDERS = {
    "onemax": ("n", "k", "d"),
    "binval": ("n", "k", "d"),
    "plateau": ("n", "d"),
    "worst_k1": ("n", "m"),
    "worst_midk": ("n", "k", "m"),
    "worst_highk": ("n", "k"),
}


@dataclass(frozen=True)
class SweepSpec:
    """Grid or explicit cells over builder parameters for one family.

    ``grid`` takes the cartesian product of value lists keyed by parameter
    name; ``cells`` lists parameter dicts verbatim.  A cell may give ``r``
    instead of ``d``, meaning d = n/2 + r.
    """

    family: str
    grid: dict | None = None
    cells: tuple | None = None
    trials: int = 100
    master_seed: int = 0
    max_evaluations: int = 10**9
    max_seconds_per_cell: float | None = None  # wall-clock guard; guarded cells run sequentially

    def __post_init__(self):
        if self.family not in _SWEEP_BUILDERS:
            raise ValueError(
                f"sweepable families are {sorted(_SWEEP_BUILDERS)}, got {self.family!r}"
            )
        if (self.grid is None) == (self.cells is None):
            raise ValueError("give exactly one of grid or cells")
        if self.trials < 1 or self.max_evaluations < 1:
            raise ValueError("trials and max_evaluations must be at least 1")
        if self.grid is not None and not all(self.grid.values()):
            raise ValueError("grid value lists must be non-empty")
        if self.max_seconds_per_cell is not None and self.max_seconds_per_cell <= 0:
            raise ValueError("max_seconds_per_cell must be positive")

    def cell_dicts(self) -> list[dict]:
        if self.cells is not None:
            return [dict(c) for c in self.cells]
        keys = list(self.grid)
        out: list[dict] = [{}]
        for key in keys:
            out = [dict(cell, **{key: value}) for cell in out for value in self.grid[key]]
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepSpec":
        known = {
            "family",
            "grid",
            "cells",
            "trials",
            "master_seed",
            "max_evaluations",
            "max_seconds_per_cell",
        }
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown sweep spec fields: {sorted(unknown)}")
        doc = dict(doc)
        if "cells" in doc and doc["cells"] is not None:
            doc["cells"] = tuple(dict(c) for c in doc["cells"])
        return cls(**doc)

    @classmethod
    def from_file(cls, path) -> "SweepSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _cell_instance(family: str, cell: dict) -> tuple[Instance, dict, int | None]:
    cell = dict(cell)
    r = cell.pop("r", None)
    if r is not None:
        if "d" in cell:
            raise ValueError("give d or r, not both")
        cell["d"] = cell["n"] // 2 + r
    wanted = _SWEEP_BUILDERS[family]
    unknown = set(cell) - set(wanted)
    if unknown:
        raise ValueError(f"family {family} does not use parameters {sorted(unknown)}")
    missing = set(wanted) - set(cell)
    if missing:
        raise ValueError(f"family {family} needs parameters {sorted(missing)}")
    builder = getattr(problems, f"build_{family}")
    return builder(**{key: cell[key] for key in wanted}), cell, r


def _cell_id(family: str, cell: dict, r: int | None) -> str:
    shown = dict(cell)
    if r is not None:
        shown["r"] = r
    parts = [family] + [f"{key}={shown[key]}" for key in sorted(shown)]
    return "/".join(parts)


@dataclass(frozen=True)
class SweepResult:
    stats: tuple[TrialStats, ...]
    skipped: tuple[tuple[str, str], ...]  # (cell id, reason)

    def to_csv(self) -> str:
        return write_csv(self.stats)


def sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Run every valid cell of the spec; invalid cells are recorded, not fatal."""
    stats = []
    skipped = []
    for raw_cell in spec.cell_dicts():
        try:
            inst, resolved, r = _cell_instance(spec.family, raw_cell)
        except (ValueError, KeyError) as exc:
            skipped.append((_cell_id(spec.family, raw_cell, None), str(exc)))
            continue
        cell_id = _cell_id(spec.family, resolved, r)
        try:
            stats.append(
                run_trials(
                    inst,
                    spec.trials,
                    spec.master_seed,
                    spec.max_evaluations,
                    workers=workers,
                    cell=cell_id,
                    r=r,
                    max_seconds=spec.max_seconds_per_cell,
                )
            )
        except CellTimeoutError as exc:
            skipped.append((cell_id, str(exc)))
    return SweepResult(tuple(stats), tuple(skipped))


# ---------------------------------------------------------------------------
# scaling fits

_EXP_GROWTH = {
    "n": lambda n: float(n),
    "sqrt_n": lambda n: math.sqrt(n),
    "nlogn": lambda n: n * math.log(n),
}


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit of a runtime model on the log scale."""

    model: str
    params: dict
    r_squared: float

    def predict(self, n: int, k: int | None = None) -> float:
        a = self.params["a"]
        if self.model == "nlogn":
            return a * n * math.log(n)
        if self.model == "power":
            return a * n ** self.params["b"]
        if self.model == "exp":
            return a * math.exp(self.params["c"] * _EXP_GROWTH[self.params["growth"]](n))
        if self.model == "binom":
            if k is None:
                raise ValueError("binom model prediction needs k")
            return a * math.comb(n, k)
        raise ValueError(f"unknown model {self.model!r}")


def _fit_points(points, allow_lower_bounds: bool):
    out = []
    for point in points:
        if isinstance(point, TrialStats):
            if point.is_lower_bound and not allow_lower_bounds:
                raise ValueError(
                    f"cell {point.cell} is censored; its mean is only a lower bound "
                    "(pass allow_lower_bounds=True to fit anyway)"
                )
            out.append((point.n, float(point.mean), point.k))
        else:
            n, y, *rest = point
            out.append((int(n), float(y), rest[0] if rest else None))
    if len(out) < 3:
        raise ValueError("scaling fits need at least 3 cells")
    if any(y <= 0 for _, y, _ in out):
        raise ValueError("scaling fits need positive means")
    if len({n for n, _, _ in out}) < 2:
        raise ValueError("degenerate input: all cells share one n")
    return out


def _line_fit(xs, ys) -> tuple[float, float]:
    count = len(xs)
    x_mean = sum(xs) / count
    y_mean = sum(ys) / count
    sxx = sum((x - x_mean) ** 2 for x in xs)
    sxy = sum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, y_mean - slope * x_mean


def _r_squared(ys, fitted) -> float:
    y_mean = sum(ys) / len(ys)
    ss_tot = sum((y - y_mean) ** 2 for y in ys)
    ss_res = sum((y - f) ** 2 for y, f in zip(ys, fitted))
    if ss_tot == 0:
        return 1.0 if ss_res == 0 else 0.0
    return 1.0 - ss_res / ss_tot


def fit_scaling(points, model: str, growth: str = "n", allow_lower_bounds: bool = False) -> ScalingFit:
    """Fit one of the runtime models to (n, mean) cells on the log scale.

    Models: ``nlogn`` (a n ln n), ``power`` (a n^b), ``exp``
    (a e^(c g(n)) with g named by ``growth``), ``binom`` (a C(n, k),
    cells must carry k).
    """
    data = _fit_points(points, allow_lower_bounds)
    logs = [math.log(y) for _, y, _ in data]
    if model == "nlogn":
        shifted = [ly - math.log(n * math.log(n)) for (n, _, _), ly in zip(data, logs)]
        a = math.exp(sum(shifted) / len(shifted))
        fit = ScalingFit("nlogn", {"a": a}, 0.0)
    elif model == "power":
        slope, intercept = _line_fit([math.log(n) for n, _, _ in data], logs)
        fit = ScalingFit("power", {"a": math.exp(intercept), "b": slope}, 0.0)
    elif model == "exp":
        if growth not in _EXP_GROWTH:
            raise ValueError(f"growth must be one of {sorted(_EXP_GROWTH)}")
        slope, intercept = _line_fit([_EXP_GROWTH[growth](n) for n, _, _ in data], logs)
        fit = ScalingFit("exp", {"a": math.exp(intercept), "c": slope, "growth": growth}, 0.0)
    elif model == "binom":
        if any(k is None for _, _, k in data):
            raise ValueError("binom model needs k for every cell")
        shifted = [ly - math.log(math.comb(n, k)) for (n, _, k), ly in zip(data, logs)]
        a = math.exp(sum(shifted) / len(shifted))
        fit = ScalingFit("binom", {"a": a}, 0.0)
    else:
        raise ValueError(f"unknown model {model!r}")
    fitted_logs = [math.log(fit.predict(n, k)) for n, _, k in data]
    return replace(fit, r_squared=_r_squared(logs, fitted_logs))


# ---------------------------------------------------------------------------
# plateau-regime comparison

def plateau_threshold(n: int, r: int) -> int:
    """d = n/2 + r, clamped into the walk's domain (d <= n - 1)."""
    return min(n // 2 + r, n - 1)


def default_regime_rs(n: int) -> tuple[int, int]:
    """The swept r values: floor(sqrt(n)) and floor(3 sqrt(n ln n))."""
    return math.isqrt(n), math.floor(3.0 * math.sqrt(n * math.log(n)))


@dataclass(frozen=True)
class RegimeSpec:
    """One plateau regime: walk kind, size, r (d = n/2 + r) and the method."""

    n: int
    r: int
    kind: str = "accept_all"  # or deletion_onemax
    method: str = "chain"  # or simulate
    k: int | None = None  # deletion_onemax only; defaults to d + 1
    trials: int = 1000
    master_seed: int = 0
    max_evaluations: int = 10**9

    def __post_init__(self):
        if self.kind not in ("accept_all", "deletion_onemax"):
            raise ValueError("kind must be accept_all or deletion_onemax")
        if self.method not in ("chain", "simulate"):
            raise ValueError("method must be chain or simulate")
        if self.r < 0:
            raise ValueError("r must be non-negative")


def regime_mean_evaluations(spec: RegimeSpec) -> float:
    d = plateau_threshold(spec.n, spec.r)
    if spec.kind == "accept_all":
        if spec.method == "chain":
            return float(lumped_chain_efht("accept_all_walk", spec.n, d=d).mean_evaluations)
        total = 0
        for t in range(spec.trials):
            cfg = RunConfig(
                seed=mix_seed(spec.master_seed, "accept_all", t),
                max_evaluations=spec.max_evaluations,
            )
            total += run_accept_all(spec.n, d, cfg).evaluations
        return total / spec.trials
    k = spec.k if spec.k is not None else d + 1
    if spec.method == "chain":
        return float(lumped_chain_efht("deletion_onemax", spec.n, k=k, d=d).mean_evaluations)
    stats = run_trials(
        problems.build_onemax(spec.n, k, d),
        spec.trials,
        spec.master_seed,
        spec.max_evaluations,
    )
    return float(stats.mean)


@dataclass(frozen=True)
class RegimeComparison:
    small: RegimeSpec
    large: RegimeSpec
    small_mean: float
    large_mean: float

    @property
    def ratio(self) -> float:
        return self.large_mean / self.small_mean


def compare_regimes(spec_small_r: RegimeSpec, spec_large_r: RegimeSpec) -> RegimeComparison:
    """Mean evaluations in the large-r regime relative to the small-r regime."""
    if spec_small_r.kind != spec_large_r.kind:
        raise ValueError("both regimes must use the same walk kind")
    return RegimeComparison(
        small=spec_small_r,
        large=spec_large_r,
        small_mean=regime_mean_evaluations(spec_small_r),
        large_mean=regime_mean_evaluations(spec_large_r),
    )
