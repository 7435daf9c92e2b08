"""Robust linear objectives under a cardinality budget, with exact fitness.

Two robust objective families over bit strings x of length n:

* deletion-robust: the weighted sum that remains after an adversary
  removes up to d selected items; with weights sorted non-increasingly
  this equals the sum of the selected weights minus the d largest of them.
* worst-case: the minimum of m linear functions evaluated on x.

The constrained fitness is the objective for feasible strings (at most k
ones) and the negative violation k - |x|_1 otherwise, so every feasible
string beats every infeasible one.

Arithmetic policy: all weights and objective values are exact rationals.
Each instance additionally stores its weights scaled by the least common
denominator, so the selection hot path compares exact integers; scaling
by a positive rational preserves the acceptance order, and public values
are always reported as unscaled ``Fraction``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence, Union

from .bitvec import BitString, RandomSource

Weight = Fraction


class UnknownOptimumError(RuntimeError):
    """Raised when an operation needs an optimum value the instance lacks."""


def as_weight(value) -> Fraction:
    w = Fraction(value)
    if w < 1:
        raise ValueError(f"weights must be at least 1, got {w}")
    return w


def min_weight_gap(weights: Sequence[Fraction]) -> Fraction:
    """Minimum difference between two distinct weights; 1 if all are equal."""
    distinct = sorted(set(weights))
    if len(distinct) < 2:
        return Fraction(1)
    return min(b - a for a, b in zip(distinct, distinct[1:]))


def random_rational_weights(
    n: int,
    rng: RandomSource,
    max_numerator: int = 16,
    denominators: Sequence[int] = (1, 2, 3, 4),
) -> list[Fraction]:
    """n random rational weights in [1, 1 + max_numerator], for test instances."""
    out = []
    for _ in range(n):
        den = denominators[rng.below(len(denominators))]
        num = rng.below(max_numerator * den + 1)
        out.append(1 + Fraction(num, den))
    return out


class LinearObjective:
    """Weights sorted non-increasingly plus the permutation to user order.

    ``original_order[i]`` is the user-supplied position of sorted weight i
    (ties keep their user order), so serialized instances round-trip.
    Evaluation positions always refer to the sorted order.
    """

    __slots__ = ("weights", "original_order")

    def __init__(self, weights: Sequence):
        ws = [as_weight(w) for w in weights]
        if not ws:
            raise ValueError("objective needs at least one weight")
        order = sorted(range(len(ws)), key=lambda i: (-ws[i], i))
        self.weights = tuple(ws[i] for i in order)
        self.original_order = tuple(order)

    @property
    def n(self) -> int:
        return len(self.weights)

    def user_weights(self) -> tuple[Fraction, ...]:
        out: list[Fraction] = [Fraction(0)] * self.n
        for sorted_idx, user_idx in enumerate(self.original_order):
            out[user_idx] = self.weights[sorted_idx]
        return tuple(out)

    def min_gap(self) -> Fraction:
        return min_weight_gap(self.weights)

    def __eq__(self, other) -> bool:
        return isinstance(other, LinearObjective) and self.weights == other.weights

    def __hash__(self) -> int:
        return hash(self.weights)


def _common_scale(fractions) -> int:
    return math.lcm(*(f.denominator for f in fractions)) if fractions else 1


class _RobustInstance:
    """Shared constrained-fitness logic; subclasses provide the objective."""

    __slots__ = ()

    family: str
    n: int
    k: int
    optimum_value: Fraction | None
    _scale: int
    _opt_int: int | None

    def objective_value(self, x: BitString) -> Fraction:
        """Robust objective F(x), ignoring the cardinality constraint."""
        self._check_length(x)
        return Fraction(self._objective_int(x.mask, x.ones), self._scale)

    def fitness(self, x: BitString) -> Fraction:
        """Constrained fitness: F(x) if |x|_1 <= k, else k - |x|_1 (< 0)."""
        self._check_length(x)
        return Fraction(self.fitness_int(x.mask, x.ones), self._scale)

    def fitness_int(self, mask: int, ones: int) -> int:
        """Scaled-integer fitness; exact total order matching ``fitness``."""
        if ones > self.k:
            return (self.k - ones) * self._scale
        return self._objective_int(mask, ones)

    def is_optimal(self, x: BitString) -> bool:
        """True iff x is feasible and attains the known optimum value."""
        self._check_length(x)
        if self._opt_int is None:
            raise UnknownOptimumError(
                "instance has no optimum value; runs are censored-only"
            )
        return x.ones <= self.k and self._objective_int(x.mask, x.ones) == self._opt_int

    def _objective_int(self, mask: int, ones: int) -> int:
        raise NotImplementedError

    def _check_length(self, x: BitString) -> None:
        if x.n != self.n:
            raise ValueError(f"length mismatch: solution has {x.n} bits, instance has {self.n}")

    def params(self) -> dict:
        """Builder parameters, for sweep records and serialization."""
        raise NotImplementedError


class DeletionRobustInstance(_RobustInstance):
    """Deletion-robust linear objective: drop the d largest selected weights.

    Weights are sorted non-increasingly, so the closed form skips the d
    selected positions with the smallest index.  Strings with at most d
    ones score 0 (everything can be deleted).
    """

    __slots__ = (
        "family",
        "objective",
        "k",
        "d",
        "optimum_value",
        "_scale",
        "_opt_int",
        "_int_weights",
        "_uniform_int",
    )

    def __init__(self, objective: LinearObjective, k: int, d: int, family: str = "linear"):
        n = objective.n
        if not 0 <= d < k <= n:
            raise ValueError(f"need 0 <= d < k <= n, got n={n}, k={k}, d={d}")
        self.family = family
        self.objective = objective
        self.k = k
        self.d = d
        scale = _common_scale(objective.weights)
        self._scale = scale
        self._int_weights = tuple(int(w * scale) for w in objective.weights)
        first = self._int_weights[0]
        self._uniform_int = first if all(w == first for w in self._int_weights) else None
        # optimum in closed form at 1^k 0^(n-k): the adversary deletes the
        # first d selected weights
        self.optimum_value = sum(objective.weights[d:k], Fraction(0))
        self._opt_int = sum(self._int_weights[d:k])

    @property
    def n(self) -> int:
        return self.objective.n

    def _objective_int(self, mask: int, ones: int) -> int:
        d = self.d
        if ones <= d:
            return 0
        if self._uniform_int is not None:
            return (ones - d) * self._uniform_int
        weights = self._int_weights
        total = 0
        skip = d
        m = mask
        while m:
            low = m & -m
            if skip:
                skip -= 1
            else:
                total += weights[low.bit_length() - 1]
            m ^= low
        return total

    def params(self) -> dict:
        return {"n": self.n, "k": self.k, "d": self.d}

    def __repr__(self) -> str:
        return f"DeletionRobustInstance({self.family}, n={self.n}, k={self.k}, d={self.d})"


class WorstCaseInstance(_RobustInstance):
    """Worst-case objective: minimum of m linear functions on the same x.

    No order is assumed or imposed on the weights of any function.  The
    optimum value is optional; without it runs cannot stop on the optimum
    (censored-only mode).
    """

    __slots__ = (
        "family",
        "weight_rows",
        "k",
        "optimum_value",
        "_scale",
        "_opt_int",
        "_int_rows",
    )

    def __init__(self, weight_rows: Sequence[Sequence], k: int, optimum=None, family: str = "worstcase"):
        rows = tuple(tuple(as_weight(w) for w in row) for row in weight_rows)
        if not rows:
            raise ValueError("need at least one linear function (m >= 1)")
        n = len(rows[0])
        if n < 1 or any(len(row) != n for row in rows):
            raise ValueError("all weight rows must share one positive length")
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
        self.family = family
        self.weight_rows = rows
        self.k = k
        self.optimum_value = None if optimum is None else Fraction(optimum)
        parts = [w for row in rows for w in row]
        if self.optimum_value is not None:
            parts.append(self.optimum_value)
        scale = _common_scale(parts)
        self._scale = scale
        # duplicate functions cannot change the minimum; evaluate each once
        self._int_rows = tuple(
            dict.fromkeys(tuple(int(w * scale) for w in row) for row in rows)
        )
        self._opt_int = None if self.optimum_value is None else int(self.optimum_value * scale)

    @property
    def n(self) -> int:
        return len(self.weight_rows[0])

    @property
    def m(self) -> int:
        return len(self.weight_rows)

    def with_optimum(self, optimum) -> "WorstCaseInstance":
        """Copy of this instance with a known optimum value attached."""
        return WorstCaseInstance(self.weight_rows, self.k, optimum=optimum, family=self.family)

    def _objective_int(self, mask: int, ones: int) -> int:
        positions = []
        m = mask
        while m:
            low = m & -m
            positions.append(low.bit_length() - 1)
            m ^= low
        best = None
        for row in self._int_rows:
            total = 0
            for i in positions:
                total += row[i]
            if best is None or total < best:
                best = total
        return best if best is not None else 0

    def params(self) -> dict:
        return {"n": self.n, "k": self.k, "m": self.m}

    def __repr__(self) -> str:
        return f"WorstCaseInstance({self.family}, n={self.n}, k={self.k}, m={self.m})"


Instance = Union[DeletionRobustInstance, WorstCaseInstance]


# ---------------------------------------------------------------------------
# builders


def build_onemax(n: int, k: int, d: int) -> DeletionRobustInstance:
    """Deletion-robust OneMax: all weights 1; optimum value k - d."""
    return DeletionRobustInstance(LinearObjective([1] * n), k, d, family="onemax")


def build_binval(n: int, k: int, d: int) -> DeletionRobustInstance:
    """Deletion-robust BinVal: weight 2^(n-i-1) at position i, exact at any n."""
    weights = [Fraction(1 << (n - 1 - i)) for i in range(n)]
    return DeletionRobustInstance(LinearObjective(weights), k, d, family="binval")


def build_linear(weights: Sequence, k: int, d: int) -> DeletionRobustInstance:
    """General deletion-robust instance; weights are sorted internally."""
    return DeletionRobustInstance(LinearObjective(weights), k, d, family="linear")


def build_plateau(n: int, d: int) -> DeletionRobustInstance:
    """Deletion-robust instance whose k-ones level set is a near-flat plateau.

    k = d + 1, the first k weights are 2 and the rest are 1, so every
    feasible string scores 0 (at most d ones) or the single surviving
    weight: 2 only at 1^k 0^(n-k), 1 anywhere else on the |x|_1 = k level.
    """
    if not 0 <= d < n - 1:
        raise ValueError(f"need 0 <= d <= n-2, got n={n}, d={d}")
    k = d + 1
    weights = [2] * k + [1] * (n - k)
    return DeletionRobustInstance(LinearObjective(weights), k, d, family="plateau")


def build_worst_k1(n: int, m: int) -> WorstCaseInstance:
    """Worst-case instance with budget 1: m identical functions, first weight 2.

    The unique optimum is 10^(n-1) with value 2; every other single-bit
    string scores 1.
    """
    if n < 2 or m < 1:
        raise ValueError(f"need n >= 2 and m >= 1, got n={n}, m={m}")
    row = [2] + [1] * (n - 1)
    return WorstCaseInstance([row] * m, k=1, optimum=2, family="worst_k1")


def build_worst_midk(n: int, k: int, m: int) -> WorstCaseInstance:
    """Worst-case instance for 2 <= k < n/2 with a deceptive local-optimum set.

    Functions 1..m-1 put weight k+1 on the first k-1 positions, 3/2 on
    position k and k on the tail; function m puts 1 on the first k-1
    positions, k^2 on position k and k on the tail.  The global optimum is
    1^k 0^(n-k) with value k^2 + 1/2, while every k-ones string avoiding
    the first k positions scores exactly k^2.
    """
    if not (2 <= k and 2 * k < n):
        raise ValueError(f"need 2 <= k < n/2, got n={n}, k={k}")
    if m < 2:
        raise ValueError(f"need m >= 2, got m={m}")
    shared = [k + 1] * (k - 1) + [Fraction(3, 2)] + [k] * (n - k)
    last = [1] * (k - 1) + [k * k] + [k] * (n - k)
    rows = [shared] * (m - 1) + [last]
    return WorstCaseInstance(rows, k, optimum=Fraction(2 * k * k + 1, 2), family="worst_midk")


def build_worst_highk(n: int, k: int) -> WorstCaseInstance:
    """Worst-case instance for k >= n/2: k indicator-boosted functions.

    Function s puts weight n on position s and 1 elsewhere, so any string
    missing one of the first k positions scores just |x|_1 and the k-ones
    level set is a plateau with the lone peak 1^k 0^(n-k) of value n+k-1.
    """
    if not (1 <= k <= n and 2 * k >= n):
        raise ValueError(f"need n/2 <= k <= n, got n={n}, k={k}")
    rows = []
    for s in range(k):
        row = [1] * n
        row[s] = n
        rows.append(row)
    return WorstCaseInstance(rows, k, optimum=n + k - 1, family="worst_highk")


def build_worst(weight_rows: Sequence[Sequence], k: int, optimum=None) -> WorstCaseInstance:
    """General worst-case instance; optimum left unset unless supplied."""
    return WorstCaseInstance(weight_rows, k, optimum=optimum, family="worstcase")
