"""Distance functions and empirical checks of one-step drift lower bounds.

Each distance family maps solutions to exact non-negative rationals that
vanish exactly on its target set.  ``estimate_drift`` measures the
expected one-step decrease E[V(x) - V(x')] where x' is the post-selection
successor of x (one elitist step, or one accept-all step for the
random-walk families), and ``check_bound`` compares the estimates per
state against an additive or multiplicative lower bound.

Sampling tallies successors by a small integer key, so means and
variances are computed exactly from the tally before the final float
conversion.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .bitvec import BitString, RandomSource, flip_count_cdf, sample_flip_mask
from .problems import DeletionRobustInstance, Instance


class DomainError(ValueError):
    """Raised when a solution is outside a distance family's domain."""


def _leading_ones(mask: int, n: int) -> int:
    count = 0
    while count < n and (mask >> count) & 1:
        count += 1
    return count


class PiecewiseWalkDistance:
    """Exponentially laddered distance for the accept-all walk, d = n/2 + r.

    Below n/2 ones the distance falls linearly per one-bit gained; between
    n/2 and d it falls along the geometric ladder D(j+1)/D(j) = 1 + 20r/n,
    which outweighs the inward pull of mutation near the plateau edge.
    Exact rationals throughout; requires even n and integer r >= 1.
    """

    step_kind = "accept_all"

    def __init__(self, n: int, r: int, d: int | None = None):
        if n < 2 or n % 2:
            raise ValueError(f"need even n >= 2, got n={n}")
        if r < 1 or r != int(r):
            raise ValueError(f"need integer r >= 1, got r={r}")
        derived = n // 2 + r
        if d is not None and d != derived:
            raise ValueError(f"d must equal n/2 + r = {derived}, got d={d}")
        if derived >= n:
            raise ValueError(f"d = n/2 + r = {derived} must stay below n = {n}")
        self.n = n
        self.r = int(r)
        self.d = derived
        growth = 1 + Fraction(20 * r, n)
        head = (1 + 20 * r) * growth**r
        per_bit = Fraction(20 * r, n + 20 * r)
        half = n // 2
        values = []
        for j in range(n + 1):
            if j < half:
                values.append(head + (half - j) * per_bit)
            elif j <= derived:
                values.append(head - growth ** (j - half) + 1)
            else:
                values.append(Fraction(0))
        self._values = tuple(values)
        ladder = [Fraction(0)]  # 1-indexed
        for j in range(1, derived + 2):
            if j <= half:
                ladder.append(per_bit)
            else:
                ladder.append(growth ** (j - 1 - half) * Fraction(20 * r, n))
        self._ladder = tuple(ladder)

    def value(self, x: BitString) -> Fraction:
        if x.n != self.n:
            raise DomainError(f"length mismatch: {x.n} != {self.n}")
        return self._values[x.ones]

    def value_by_ones(self, j: int) -> Fraction:
        return self._values[j]

    def step_sizes(self) -> tuple[Fraction, ...]:
        """The ladder D(1..d+1); D(j) equals V(j-1) - V(j) for j <= d."""
        return self._ladder[1:]

    def v_min(self) -> Fraction:
        return self._values[self.d]

    def key(self, mask: int, ones: int, fitness_int: int | None) -> int:
        return ones

    def value_of_key(self, key: int) -> Fraction:
        return self._values[key]

    def describe(self) -> str:
        return f"walk-piecewise(n={self.n}, r={self.r}, d={self.d})"


class LinearWalkDistance:
    """Accept-all walk distance d + 1 - |x|_1, for small plateaus (d = o(n))."""

    step_kind = "accept_all"

    def __init__(self, n: int, d: int):
        if not 0 <= d < n:
            raise ValueError(f"need 0 <= d < n, got n={n}, d={d}")
        self.n = n
        self.d = d

    def value(self, x: BitString) -> Fraction:
        if x.n != self.n:
            raise DomainError(f"length mismatch: {x.n} != {self.n}")
        return self.value_of_key(x.ones)

    def v_min(self) -> Fraction:
        return Fraction(1)

    def key(self, mask: int, ones: int, fitness_int: int | None) -> int:
        return ones

    def value_of_key(self, key: int) -> Fraction:
        return Fraction(self.d + 1 - key) if key <= self.d else Fraction(0)

    def describe(self) -> str:
        return f"walk-linear(n={self.n}, d={self.d})"


class OnesGapDistance:
    """Distance k - |x|_1 on the feasible region (climb phase to k ones)."""

    step_kind = "ea"

    def __init__(self, n: int, k: int):
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
        self.n = n
        self.k = k

    def value(self, x: BitString) -> Fraction:
        if x.n != self.n:
            raise DomainError(f"length mismatch: {x.n} != {self.n}")
        if x.ones > self.k:
            raise DomainError(f"{x.ones} ones is outside the feasible domain (k={self.k})")
        return Fraction(self.k - x.ones)

    def v_min(self) -> Fraction:
        return Fraction(1)

    def key(self, mask: int, ones: int, fitness_int: int | None) -> int:
        return ones

    def value_of_key(self, key: int) -> Fraction:
        return Fraction(self.k - key)

    def describe(self) -> str:
        return f"ones-gap(n={self.n}, k={self.k})"


class LeadingBlockDistance:
    """Zeros in front of the (d+1)-th one-bit; 0 iff the first d+1 bits are ones.

    Defined for solutions with at least d+1 one-bits.  Under a linear
    objective whose every weight beats the sum of all smaller ones, this
    never increases along accepted steps.
    """

    step_kind = "ea"

    def __init__(self, n: int, d: int):
        if not 0 <= d < n:
            raise ValueError(f"need 0 <= d < n, got n={n}, d={d}")
        self.n = n
        self.d = d

    def _key_from_mask(self, mask: int, ones: int) -> int:
        if ones <= self.d:
            raise DomainError(f"need more than d={self.d} ones, got {ones}")
        m = mask
        for _ in range(self.d):
            m &= m - 1  # clear lowest set bit
        position = (m & -m).bit_length()  # 1-indexed position of the (d+1)-th one
        return position - (self.d + 1)

    def value(self, x: BitString) -> Fraction:
        if x.n != self.n:
            raise DomainError(f"length mismatch: {x.n} != {self.n}")
        return Fraction(self._key_from_mask(x.mask, x.ones))

    def v_min(self) -> Fraction:
        return Fraction(1)

    def key(self, mask: int, ones: int, fitness_int: int | None) -> int:
        return self._key_from_mask(mask, ones)

    def value_of_key(self, key: int) -> Fraction:
        return Fraction(key)

    def describe(self) -> str:
        return f"leading-block(n={self.n}, d={self.d})"


class LeadingOnesGapDistance:
    """Distance k - leading_ones(x) on the feasible region; 0 iff 1^k 0^(n-k).

    Its never-increase guarantee under binary-dominant weights applies in
    the phase where the leading d+1 positions are already ones; elsewhere
    accepted tie steps may shuffle the deletable prefix.
    """

    step_kind = "ea"

    def __init__(self, n: int, k: int):
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
        self.n = n
        self.k = k

    def value(self, x: BitString) -> Fraction:
        if x.n != self.n:
            raise DomainError(f"length mismatch: {x.n} != {self.n}")
        if x.ones > self.k:
            raise DomainError(f"{x.ones} ones is outside the feasible domain (k={self.k})")
        return self.value_of_key(self.key(x.mask, x.ones, None))

    def v_min(self) -> Fraction:
        return Fraction(1)

    def key(self, mask: int, ones: int, fitness_int: int | None) -> int:
        return min(_leading_ones(mask, self.n), self.k)

    def value_of_key(self, key: int) -> Fraction:
        return Fraction(self.k - key)

    def describe(self) -> str:
        return f"leading-ones-gap(n={self.n}, k={self.k})"


class ObjectiveGapDistance:
    """Distance optimum - F(x) for a deletion-robust instance, exact.

    Zero exactly on the optimal solutions; defined on the feasible region.
    """

    step_kind = "ea"

    def __init__(self, inst: DeletionRobustInstance):
        self.inst = inst
        self.n = inst.n

    def value(self, x: BitString) -> Fraction:
        inst = self.inst
        inst._check_length(x)
        if x.ones > inst.k:
            raise DomainError(f"{x.ones} ones is outside the feasible domain (k={inst.k})")
        return Fraction(inst._opt_int - inst._objective_int(x.mask, x.ones), inst._scale)

    def v_min(self) -> Fraction:
        inst = self.inst
        if inst.n <= 12:
            best = None
            for mask in range(1 << inst.n):
                ones = mask.bit_count()
                if ones > inst.k:
                    continue
                gap = inst._opt_int - inst._objective_int(mask, ones)
                if gap > 0 and (best is None or gap < best):
                    best = gap
            if best is None:
                raise ValueError("distance is identically zero on the feasible region")
            return Fraction(best, inst._scale)
        # guaranteed lower bound: 1/v_min <= 1/w_n + 1/gap
        w_n = inst.objective.weights[-1]
        gap = inst.objective.min_gap()
        return 1 / (1 / w_n + 1 / gap)

    def key(self, mask: int, ones: int, fitness_int: int | None) -> int:
        if fitness_int is not None:
            return fitness_int
        return self.inst._objective_int(mask, ones)

    def value_of_key(self, key: int) -> Fraction:
        return Fraction(self.inst._opt_int - key, self.inst._scale)

    def describe(self) -> str:
        return f"objective-gap({self.inst.family}, n={self.n}, k={self.inst.k}, d={self.inst.d})"


DistanceFunction = (
    PiecewiseWalkDistance
    | LinearWalkDistance
    | OnesGapDistance
    | LeadingBlockDistance
    | LeadingOnesGapDistance
    | ObjectiveGapDistance
)


def make_distance(family: str, inst: Instance | None = None, **params) -> DistanceFunction:
    """Build a distance family from its CLI/service name and parameters."""
    if family == "walk-piecewise":
        return PiecewiseWalkDistance(params["n"], params["r"], params.get("d"))
    if family == "walk-linear":
        return LinearWalkDistance(params["n"], params["d"])
    if family == "ones-gap":
        return OnesGapDistance(params["n"], params["k"])
    if family == "leading-block":
        return LeadingBlockDistance(params["n"], params["d"])
    if family == "leading-ones-gap":
        return LeadingOnesGapDistance(params["n"], params["k"])
    if family == "objective-gap":
        if not isinstance(inst, DeletionRobustInstance):
            raise ValueError("objective-gap needs a deletion-robust instance")
        return ObjectiveGapDistance(inst)
    raise ValueError(f"unknown distance family {family!r}")


@dataclass(frozen=True)
class DriftEstimate:
    """Monte Carlo estimate of the one-step decrease of a distance."""

    mean: float
    stderr: float
    exact_mean: Fraction
    samples: int


def estimate_drift(
    inst: Instance | None,
    dist: DistanceFunction,
    x: BitString,
    samples: int,
    rng: RandomSource,
) -> DriftEstimate:
    """Estimate E[V(x) - V(x')] over one post-selection step from x.

    States with V(x) = 0 are absorbing by convention and report drift 0
    without sampling.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    v0 = dist.value(x)
    if v0 == 0:
        return DriftEstimate(0.0, 0.0, Fraction(0), 0)
    n = x.n
    cdf = flip_count_cdf(n)
    mask0 = x.mask
    tally: Counter = Counter()
    if dist.step_kind == "accept_all":
        for _ in range(samples):
            y = mask0 ^ sample_flip_mask(n, rng, cdf)
            tally[dist.key(y, y.bit_count(), None)] += 1
    else:
        if inst is None:
            raise ValueError(f"{dist.describe()} steps with the elitist rule and needs an instance")
        if inst.n != n:
            raise ValueError("instance and state lengths differ")
        fitness_int = inst.fitness_int
        ones0 = x.ones
        f0 = fitness_int(mask0, ones0)
        key0 = dist.key(mask0, ones0, f0)
        for _ in range(samples):
            flips = sample_flip_mask(n, rng, cdf)
            if flips:
                y = mask0 ^ flips
                ones_y = y.bit_count()
                fy = fitness_int(y, ones_y)
                if fy >= f0:
                    tally[dist.key(y, ones_y, fy)] += 1
                else:
                    tally[key0] += 1
            else:
                tally[key0] += 1

    deltas = {key: v0 - dist.value_of_key(key) for key in tally}
    total = sum((count * deltas[key] for key, count in tally.items()), Fraction(0))
    mean = total / samples
    if samples > 1:
        sq = sum(
            (count * (deltas[key] - mean) ** 2 for key, count in tally.items()),
            Fraction(0),
        )
        variance = sq / (samples - 1)
        stderr = math.sqrt(float(variance) / samples)
    else:
        stderr = 0.0
    return DriftEstimate(float(mean), stderr, mean, samples)


@dataclass(frozen=True)
class StateCheck:
    state: BitString
    distance: Fraction
    drift: float
    stderr: float
    required: float
    margin: float
    flagged: bool


@dataclass(frozen=True)
class BoundReport:
    """Per-state drift margins against an additive or multiplicative bound.

    A state is flagged when its margin falls below -3 standard errors.
    For multiplicative bounds the implied expected-evaluations bound
    (1 + ln(V0/Vmin))/c is reported for the largest supplied start.
    """

    kind: str
    c: float
    rows: tuple[StateCheck, ...]
    all_pass: bool
    v_min: Fraction | None = None
    implied_evaluations_bound: float | None = None

    def flagged(self) -> tuple[StateCheck, ...]:
        return tuple(row for row in self.rows if row.flagged)

    def to_csv(self) -> str:
        lines = ["state,ones,distance,drift,stderr,required,margin,flagged"]
        for row in self.rows:
            lines.append(
                f"{row.state.to01()},{row.state.ones},{row.distance},"
                f"{row.drift!r},{row.stderr!r},{row.required!r},{row.margin!r},"
                f"{int(row.flagged)}"
            )
        return "\n".join(lines) + "\n"


def check_bound(
    inst: Instance | None,
    dist: DistanceFunction,
    states,
    kind: str,
    c: float,
    samples: int,
    master_seed: int = 0,
) -> BoundReport:
    """Check drift >= c (additive) or drift >= c V(x) (multiplicative) per state."""
    if kind not in ("additive", "multiplicative"):
        raise ValueError(f"kind must be additive or multiplicative, got {kind!r}")
    states = list(states)
    if not states:
        raise ValueError("states must be non-empty")
    base = RandomSource(master_seed)
    rows = []
    for idx, state in enumerate(states):
        est = estimate_drift(inst, dist, state, samples, base.spawn("state", idx))
        v = dist.value(state)
        required = 0.0 if v == 0 else (c if kind == "additive" else c * float(v))
        margin = est.mean - required
        rows.append(
            StateCheck(
                state=state,
                distance=v,
                drift=est.mean,
                stderr=est.stderr,
                required=required,
                margin=margin,
                flagged=margin < -3.0 * est.stderr,
            )
        )
    v_min = None
    implied = None
    if kind == "multiplicative":
        v_min = dist.v_min()
        v0_max = max(row.distance for row in rows)
        if v0_max > 0:
            implied = (1.0 + math.log(float(v0_max / v_min))) / c
    return BoundReport(
        kind=kind,
        c=c,
        rows=tuple(rows),
        all_pass=not any(row.flagged for row in rows),
        v_min=v_min,
        implied_evaluations_bound=implied,
    )


def canonical_ones_states(n: int, ones_counts) -> list[BitString]:
    """One representative 1^j 0^(n-j) per requested ones count."""
    return [BitString.prefix_ones(n, j) for j in ones_counts]


def exhaustive_states(n: int, ones_min: int, ones_max: int) -> list[BitString]:
    """Every solution whose ones count lies in [ones_min, ones_max]; n <= 20."""
    if n > 20:
        raise ValueError("exhaustive state listing supports n <= 20")
    out = []
    for mask in range(1 << n):
        if ones_min <= mask.bit_count() <= ones_max:
            out.append(BitString(n, mask))
    return out


def parse_states_spec(spec: str, n: int) -> list[BitString]:
    """States from a compact text spec.

    ``ones:A..B`` and ``ones:j1,j2,...`` give one canonical 1^j 0^(n-j)
    state per ones count; ``exhaustive:A..B`` lists every solution in the
    ones range.
    """
    try:
        prefix, arg = spec.split(":", 1)
    except ValueError:
        raise ValueError(f"states spec {spec!r} needs the form kind:range") from None
    if ".." in arg:
        low_text, high_text = arg.split("..", 1)
        low, high = int(low_text), int(high_text)
        if low > high:
            raise ValueError(f"empty states range in {spec!r}")
        counts = range(low, high + 1)
    else:
        counts = [int(part) for part in arg.split(",") if part]
        if not counts:
            raise ValueError(f"no states in {spec!r}")
    if any(not 0 <= j <= n for j in counts):
        raise ValueError(f"states spec {spec!r} leaves 0..{n}")
    if prefix == "ones":
        return canonical_ones_states(n, counts)
    if prefix == "exhaustive":
        return exhaustive_states(n, min(counts), max(counts))
    raise ValueError(f"unknown states spec kind {prefix!r}")
