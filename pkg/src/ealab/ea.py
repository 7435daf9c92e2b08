"""The (1+1)-EA engine and its accept-all random-walk variant.

One run keeps a single solution, mutates every bit independently with
probability 1/n each iteration and keeps the offspring iff its fitness is
at least the parent's (ties accepted; plateau behaviour depends on it).
Running time is counted in fitness evaluations: one for the initial
solution plus one per iteration, whether or not the offspring differs
from its parent.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bitvec import BitString, RandomSource, flip_count_cdf, sample_flip_mask
from .problems import Instance, UnknownOptimumError


@dataclass(frozen=True)
class RunConfig:
    """Per-run settings; ``seed`` fully determines the run on an instance."""

    seed: int
    max_evaluations: int = 10**9
    stop_on_optimum: bool = True
    record_trajectory: bool = False
    trajectory_stride: int | None = None  # None: log-spaced checkpoints

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be at least 1")
        if self.trajectory_stride is not None and self.trajectory_stride < 1:
            raise ValueError("trajectory_stride must be at least 1")


@dataclass(frozen=True)
class RunResult:
    """Outcome of one run.

    ``evaluations`` counts fitness evaluations (>= 1); ``hit_optimum``
    False with exhausted budget means the run was censored and its count
    is a lower bound on the true hitting time.  The trajectory, when
    recorded, holds (evaluation index, ones count, fitness) checkpoints.
    """

    evaluations: int
    hit_optimum: bool
    final_solution: BitString
    trajectory: tuple[tuple[int, int, Fraction], ...] | None = None


class _Trajectory:
    """Sparse checkpoint recorder; log-spaced unless a stride is forced."""

    __slots__ = ("points", "next_eval", "stride")

    def __init__(self, stride: int | None):
        self.points: list[tuple[int, int, int]] = []
        self.next_eval = 1
        self.stride = stride

    def record(self, evaluations: int, ones: int, fitness_int: int) -> None:
        if evaluations < self.next_eval:
            return
        self.points.append((evaluations, ones, fitness_int))
        if self.stride is not None:
            self.next_eval = evaluations + self.stride
        else:
            self.next_eval = max(evaluations + 1, (evaluations * 5) // 4)

    def finish(self, evaluations: int, ones: int, fitness_int: int, scale: int):
        if not self.points or self.points[-1][0] != evaluations:
            self.points.append((evaluations, ones, fitness_int))
        return tuple((e, o, Fraction(f, scale)) for e, o, f in self.points)


def run(inst: Instance, cfg: RunConfig) -> RunResult:
    """Run the (1+1)-EA on an instance until the optimum or the budget.

    Stopping on the optimum requires the instance to carry its optimum
    value; exhausting the budget is censoring, not an error.
    """
    n = inst.n
    k = inst.k
    opt_int = inst._opt_int
    if cfg.stop_on_optimum and opt_int is None:
        raise UnknownOptimumError(
            "stop_on_optimum requires an instance with a known optimum value"
        )
    rng = RandomSource(cfg.seed)
    fitness_int = inst.fitness_int
    cdf = flip_count_cdf(n)
    budget = cfg.max_evaluations
    stop = cfg.stop_on_optimum

    mask = rng.bits(n)
    ones = mask.bit_count()
    fx = fitness_int(mask, ones)
    evaluations = 1
    trajectory = _Trajectory(cfg.trajectory_stride) if cfg.record_trajectory else None
    if trajectory:
        trajectory.record(1, ones, fx)
    hit = stop and ones <= k and fx == opt_int

    while not hit and evaluations < budget:
        flips = sample_flip_mask(n, rng, cdf)
        if flips:
            y = mask ^ flips
            ones_y = y.bit_count()
        else:
            y = mask
            ones_y = ones
        fy = fitness_int(y, ones_y)
        evaluations += 1
        if fy >= fx:
            mask, ones, fx = y, ones_y, fy
            if stop and ones_y <= k and fy == opt_int:
                hit = True
        if trajectory:
            trajectory.record(evaluations, ones, fx)

    final = BitString(n, mask)
    hit_optimum = opt_int is not None and ones <= k and fx == opt_int
    points = trajectory.finish(evaluations, ones, fx, inst._scale) if trajectory else None
    return RunResult(evaluations, hit_optimum, final, points)


def run_accept_all(n: int, d: int, cfg: RunConfig) -> RunResult:
    """Random walk of the (1+1)-EA that accepts every offspring.

    Models the search on a fitness plateau: the walk stops once the
    current solution has more than d one-bits (when ``stop_on_optimum``)
    or when the budget runs out.  Trajectory fitness entries are 0.
    """
    if not 0 <= d < n:
        raise ValueError(f"need 0 <= d < n, got n={n}, d={d}")
    rng = RandomSource(cfg.seed)
    cdf = flip_count_cdf(n)
    budget = cfg.max_evaluations
    stop = cfg.stop_on_optimum

    mask = rng.bits(n)
    ones = mask.bit_count()
    evaluations = 1
    trajectory = _Trajectory(cfg.trajectory_stride) if cfg.record_trajectory else None
    if trajectory:
        trajectory.record(1, ones, 0)
    hit = stop and ones > d

    while not hit and evaluations < budget:
        mask ^= sample_flip_mask(n, rng, cdf)
        ones = mask.bit_count()
        evaluations += 1
        if stop and ones > d:
            hit = True
        if trajectory:
            trajectory.record(evaluations, ones, 0)

    points = trajectory.finish(evaluations, ones, 0, 1) if trajectory else None
    return RunResult(evaluations, ones > d, BitString(n, mask), points)
