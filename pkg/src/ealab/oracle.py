"""Independent ground truth: brute-force objectives and exact hitting times.

Two kinds of oracle live here.

* Brute force: the deletion-robust objective evaluated by enumerating
  every deletion subset, and the optimum found by enumerating every
  feasible solution.  These share no logic with the closed-form
  evaluation they are used to check.

* Absorbing Markov chains: the expected first hitting time (EFHT) of the
  optimum, obtained by solving the linear system

      t = 0                      on absorbing states,
      (I - Q) t = 1              on transient states,

  where Q is the transition matrix restricted to transient states.  The
  chain over one-bit counts (valid whenever fitness depends only on the
  number of ones) handles large n; the full chain over all 2^n strings is
  exact for any instance at small n.

Reported means are in evaluations, i.e. 1 + EFHT averaged over the
requested initial distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .bitvec import BitString
from .problems import DeletionRobustInstance, Instance

EXACT_MODE_MAX_N = 64  # exact-rational solves above this are impractically slow
MP_MODE_MAX_N = 320
FULL_CHAIN_MAX_N = 12
BRUTE_OPTIMUM_MAX_N = 20
BRUTE_F_MAX_ONES = 24
BRUTE_F_SUBSET_CAP = 500_000
FLOAT_RESIDUAL_BOUND = 1e-9


class EnumerationCapError(ValueError):
    """Raised when a brute-force enumeration would exceed its documented cap."""


class SingularChainError(RuntimeError):
    """Raised when absorption is unreachable and the hitting times diverge."""


@dataclass
class ChainSolution:
    """Exact or high-precision expected first hitting times for one chain.

    ``efht`` is indexed by state (ones count for lumped chains, bit mask
    for the full chain); absorbing states have EFHT 0.
    ``mean_evaluations`` is 1 + EFHT averaged over the initial
    distribution, i.e. expected fitness evaluations.
    """

    kind: str
    states: str
    efht: list
    mean_evaluations: Fraction | float
    init: str
    mode: str
    residual: float | None
    params: dict

    def to_csv(self) -> str:
        from .experiments import format_value  # local import to avoid a cycle

        lines = ["state,efht"]
        for state, value in enumerate(self.efht):
            lines.append(f"{state},{format_value(value)}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# brute force


def brute_force_F(
    inst: DeletionRobustInstance,
    x: BitString,
    subset_cap: int = BRUTE_F_SUBSET_CAP,
) -> Fraction:
    """Deletion-robust objective by enumerating every deletion subset.

    Minimizes the remaining weight over all z subseteq x with |z|_1 <= d,
    with no appeal to weight ordering.  Enumeration is capped at
    ``subset_cap`` subsets (and 24 selected items).
    """
    inst._check_length(x)
    ones = x.ones
    if ones > BRUTE_F_MAX_ONES:
        raise EnumerationCapError(f"brute force supports at most {BRUTE_F_MAX_ONES} ones, got {ones}")
    d_eff = min(inst.d, ones)
    n_subsets = sum(math.comb(ones, j) for j in range(d_eff + 1))
    if n_subsets > subset_cap:
        raise EnumerationCapError(f"{n_subsets} deletion subsets exceed the cap of {subset_cap}")

    weights = inst.objective.weights
    selected = []
    m = x.mask
    while m:
        low = m & -m
        selected.append(weights[low.bit_length() - 1])
        m ^= low
    # search with scaled integers, then recompute the winner exactly
    scale = math.lcm(*(w.denominator for w in selected)) if selected else 1
    int_sel = [int(w * scale) for w in selected]
    best_total = 0
    best_subset: tuple[int, ...] = ()
    indices = range(len(int_sel))
    for size in range(d_eff + 1):
        for subset in combinations(indices, size):
            total = 0
            for i in subset:
                total += int_sel[i]
            if total > best_total:
                best_total = total
                best_subset = subset
    remaining = sum(selected, Fraction(0)) - sum((selected[i] for i in best_subset), Fraction(0))
    return remaining


def brute_force_optimum(inst: Instance) -> Fraction:
    """Maximum objective value over every feasible solution, by enumeration."""
    n = inst.n
    if n > BRUTE_OPTIMUM_MAX_N:
        raise EnumerationCapError(f"exhaustive optimum supports n <= {BRUTE_OPTIMUM_MAX_N}, got n={n}")
    k = inst.k
    best = None
    for mask in range(1 << n):
        ones = mask.bit_count()
        if ones > k:
            continue
        value = inst._objective_int(mask, ones)
        if best is None or value > best:
            best = value
    return Fraction(best, inst._scale)


# ---------------------------------------------------------------------------
# lumped chain over one-bit counts


def _ones_fitness(kind: str, n: int, k: int | None, d: int) -> tuple[list[int] | None, list[bool]]:
    """Fitness by ones count (None for accept-all) and the absorbing flags."""
    if kind == "deletion_onemax":
        if k is None or not 0 <= d < k <= n:
            raise ValueError(f"need 0 <= d < k <= n, got n={n}, k={k}, d={d}")
        g = [k - j if j > k else (0 if j <= d else j - d) for j in range(n + 1)]
        absorbing = [j == k for j in range(n + 1)]
        return g, absorbing
    if kind == "accept_all_walk":
        if not 0 <= d < n:
            raise ValueError(f"need 0 <= d < n, got n={n}, d={d}")
        return None, [j > d for j in range(n + 1)]
    raise ValueError(f"unknown lumped chain kind {kind!r}")


def _exact_move_law(n: int, j: int) -> list[int]:
    """Integer numerators of P(ones j -> j') over denominator n^n.

    The offspring ones count is j - X + Y with X ~ B(j, 1/n) flipped
    one-bits and Y ~ B(n - j, 1/n) flipped zero-bits; entry j' of the
    returned list is the numerator of P(j -> j').
    """
    base = n - 1
    nx = [math.comb(j, x) * base ** (j - x) for x in range(j + 1)]
    ny = [math.comb(n - j, y) * base ** (n - j - y) for y in range(n - j + 1)]
    law = [0] * (n + 1)
    for x, px in enumerate(nx):
        if px == 0:
            continue
        for y, py in enumerate(ny):
            law[j - x + y] += px * py
    return law


def _float_move_law(n: int, j: int) -> np.ndarray:
    px = _binom_pmf_float(j, n)
    py = _binom_pmf_float(n - j, n)
    return np.convolve(py, px[::-1])  # entry j' is P(j -> j')


def _binom_pmf_float(trials: int, n: int) -> np.ndarray:
    """PMF of B(trials, 1/n) via the stable multiplicative recurrence."""
    pmf = np.empty(trials + 1)
    pmf[0] = (1.0 - 1.0 / n) ** trials
    ratio = 1.0 / (n - 1.0) if n > 1 else float("inf")
    for x in range(trials):
        pmf[x + 1] = pmf[x] * (trials - x) / (x + 1) * ratio
    return pmf


def _mp_move_law(mp, n: int, j: int) -> list:
    one = mp.mpf(1)
    q = one - one / n
    px = [q**j]
    for x in range(j):
        px.append(px[-1] * (j - x) / ((x + 1) * (n - 1)))
    py = [q ** (n - j)]
    for y in range(n - j):
        py.append(py[-1] * (n - j - y) / ((y + 1) * (n - 1)))
    law = [mp.mpf(0)] * (n + 1)
    for x, vx in enumerate(px):
        for y, vy in enumerate(py):
            law[j - x + y] += vx * vy
    return law


def _solve_exact(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gauss-Jordan elimination over exact rationals."""
    size = len(matrix)
    aug = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(size):
        pivot_row = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if pivot_row is None:
            raise SingularChainError("chain system is singular: absorption unreachable")
        aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        prow = aug[col]
        inv = Fraction(1) / prow[col]
        for c in range(col, size + 1):
            prow[c] *= inv
        for r in range(size):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                row = aug[r]
                for c in range(col, size + 1):
                    row[c] -= factor * prow[c]
    return [aug[r][size] for r in range(size)]


def _auto_mode(n: int) -> str:
    if n <= EXACT_MODE_MAX_N:
        return "exact"
    if n <= MP_MODE_MAX_N:
        return "mp"
    return "float"


def _auto_dps(kind: str, n: int) -> int:
    # accept-all hitting times can reach ~2^n; keep enough headroom that the
    # absolute residual bound stays meaningful
    if kind == "accept_all_walk":
        return max(50, int(0.302 * n) + 25)
    return 50


def lumped_chain_efht(
    kind: str,
    n: int,
    k: int | None = None,
    d: int = 0,
    init: str | int = "uniform",
    mode: str = "auto",
    dps: int | None = None,
) -> ChainSolution:
    """EFHT of the ones-count chain for kinds whose fitness depends on ones only.

    ``deletion_onemax`` absorbs at ones = k under elitist acceptance;
    ``accept_all_walk`` accepts every offspring and absorbs at ones > d.
    ``init`` is "uniform" (binomial over ones counts) or a point ones
    count.  ``mode`` picks the arithmetic: exact rationals, mpmath, or
    float64 with an enforced residual bound.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    g, absorbing = _ones_fitness(kind, n, k, d)
    if not any(absorbing):
        raise SingularChainError("absorbing set is empty: absorption unreachable")
    if mode == "auto":
        mode = _auto_mode(n)
    transient = [j for j in range(n + 1) if not absorbing[j]]
    index = {j: i for i, j in enumerate(transient)}

    def accepted(j: int, j2: int) -> bool:
        return g is None or g[j2] >= g[j]

    if mode == "exact":
        denom = n**n
        size = len(transient)
        matrix = [[Fraction(0)] * size for _ in range(size)]
        for row_i, j in enumerate(transient):
            law = _exact_move_law(n, j)
            stay = law[j]
            for j2, num in enumerate(law):
                if j2 == j or num == 0:
                    continue
                if accepted(j, j2):
                    if not absorbing[j2]:
                        matrix[row_i][index[j2]] = Fraction(num, denom)
                else:
                    stay += num
            matrix[row_i][row_i] = Fraction(stay, denom)
        system = [
            [(Fraction(1) if r == c else Fraction(0)) - matrix[r][c] for c in range(size)]
            for r in range(size)
        ]
        t_transient = _solve_exact(system, [Fraction(1)] * size)
        efht: list = [Fraction(0)] * (n + 1)
        for i, j in enumerate(transient):
            efht[j] = t_transient[i]
        residual = None
    elif mode == "mp":
        import mpmath as mp

        with mp.workdps(dps or _auto_dps(kind, n)):
            size = len(transient)
            system = mp.zeros(size, size)
            for row_i, j in enumerate(transient):
                law = _mp_move_law(mp, n, j)
                stay = law[j]
                for j2 in range(n + 1):
                    if j2 == j:
                        continue
                    if accepted(j, j2):
                        if not absorbing[j2]:
                            system[row_i, index[j2]] = -law[j2]
                    else:
                        stay += law[j2]
                system[row_i, row_i] = 1 - stay
            rhs = mp.matrix([1] * size)
            try:
                solution = mp.lu_solve(system, rhs)
            except ZeroDivisionError as exc:
                raise SingularChainError("chain system is singular: absorption unreachable") from exc
            resid = system * solution - rhs
            residual = float(max(abs(v) for v in resid)) if size else 0.0
            if residual > FLOAT_RESIDUAL_BOUND:
                raise SingularChainError(
                    f"solver residual {residual:.3e} exceeds {FLOAT_RESIDUAL_BOUND}; raise dps"
                )
            efht = [Fraction(0)] * (n + 1)
            for i, j in enumerate(transient):
                efht[j] = solution[i]
    elif mode == "float":
        size = len(transient)
        system = np.eye(size)
        for row_i, j in enumerate(transient):
            law = _float_move_law(n, j)
            if abs(law.sum() - 1.0) > 1e-12:
                raise SingularChainError("move law row does not sum to 1 within 1e-12")
            stay = law[j]
            for j2 in range(n + 1):
                if j2 == j:
                    continue
                if accepted(j, j2):
                    if not absorbing[j2]:
                        system[row_i, index[j2]] -= law[j2]
                else:
                    stay += law[j2]
            system[row_i, row_i] = 1.0 - stay
        rhs = np.ones(size)
        try:
            solution = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularChainError("chain system is singular: absorption unreachable") from exc
        residual = float(np.max(np.abs(system @ solution - rhs))) if size else 0.0
        if residual > FLOAT_RESIDUAL_BOUND:
            raise SingularChainError(
                f"solver residual {residual:.3e} exceeds {FLOAT_RESIDUAL_BOUND}"
            )
        efht = [Fraction(0)] * (n + 1)
        for i, j in enumerate(transient):
            efht[j] = float(solution[i])
    else:
        raise ValueError(f"unknown mode {mode!r}")

    mean = _mean_evaluations_lumped(efht, n, init, exact=(mode == "exact"))
    return ChainSolution(
        kind=kind,
        states=f"ones count 0..{n}",
        efht=efht,
        mean_evaluations=mean,
        init=str(init),
        mode=mode,
        residual=residual,
        params={"n": n, "k": k, "d": d},
    )


def _mean_evaluations_lumped(efht: list, n: int, init, exact: bool):
    if init == "uniform":
        if exact:
            total = sum(
                (Fraction(math.comb(n, j), 2**n) * efht[j] for j in range(n + 1)),
                Fraction(0),
            )
            return 1 + total
        total = 0.0
        for j in range(n + 1):
            weight = math.comb(n, j) / 2**n
            total += weight * float(efht[j])
        return 1.0 + total
    j = int(init)
    if not 0 <= j <= n:
        raise ValueError(f"point init {j} outside 0..{n}")
    return 1 + efht[j] if exact else 1.0 + float(efht[j])


# ---------------------------------------------------------------------------
# full chain over all bit strings


def _popcount_table(n: int) -> np.ndarray:
    size = 1 << n
    table = np.zeros(size, dtype=np.uint8)
    for i in range(1, size):
        table[i] = table[i >> 1] + (i & 1)
    return table


def full_chain_efht(inst: Instance, init: str = "uniform", refine_steps: int = 2) -> ChainSolution:
    """EFHT of the exact (1+1)-EA chain over all 2^n solutions.

    Builds the full mutation kernel (probability (1/n)^h (1-1/n)^(n-h) to
    each string at Hamming distance h) composed with elitist acceptance,
    absorbs at the optimal solutions and solves for the hitting times in
    float64 with iterative refinement in extended precision.
    """
    n = inst.n
    if n > FULL_CHAIN_MAX_N:
        raise EnumerationCapError(f"full chain supports n <= {FULL_CHAIN_MAX_N}, got n={n}")
    if init != "uniform":
        raise ValueError("full chain supports the uniform initial distribution only")
    work = inst
    if work._opt_int is None:
        work = inst.with_optimum(brute_force_optimum(inst))

    size = 1 << n
    pop = _popcount_table(n)
    fitness = np.empty(size, dtype=np.int64)
    bound = 1 << 62
    for mask in range(size):
        value = work.fitness_int(mask, mask.bit_count())
        if abs(value) >= bound:
            raise OverflowError("scaled fitness exceeds the int64 range of the full chain")
        fitness[mask] = value
    ones = pop.astype(np.int64)
    optimal = (ones <= work.k) & (fitness == work._opt_int)
    if not optimal.any():
        raise SingularChainError("no optimal states: absorption unreachable")

    p = 1.0 / n
    shell = np.array([p**h * (1.0 - p) ** (n - h) for h in range(n + 1)])
    states = np.arange(size, dtype=np.uint32)
    hamming_matrix = pop[np.bitwise_xor.outer(states, states)]
    kernel = shell[hamming_matrix]
    del hamming_matrix
    accepted = fitness[np.newaxis, :] >= fitness[:, np.newaxis]
    transition = np.where(accepted, kernel, 0.0)
    del kernel, accepted
    off_diagonal = transition.sum(axis=1) - np.diagonal(transition)
    idx = np.arange(size)
    transition[idx, idx] = 1.0 - off_diagonal

    transient = np.flatnonzero(~optimal)
    q = transition[np.ix_(transient, transient)]
    system = np.eye(len(transient)) - q
    rhs = np.ones(len(transient))
    try:
        t = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularChainError("chain system is singular: absorption unreachable") from exc
    system_ld = system.astype(np.longdouble)
    for _ in range(refine_steps):
        resid = rhs - (system_ld @ t.astype(np.longdouble))
        t = t + np.linalg.solve(system, resid.astype(np.float64))
    residual = float(np.max(np.abs(system_ld @ t.astype(np.longdouble) - rhs)))
    if residual > FLOAT_RESIDUAL_BOUND:
        raise SingularChainError(f"solver residual {residual:.3e} exceeds {FLOAT_RESIDUAL_BOUND}")

    efht = np.zeros(size)
    efht[transient] = t
    mean = 1.0 + float(efht.mean())
    return ChainSolution(
        kind="full",
        states=f"bit masks 0..{size - 1} (bit i is position i)",
        efht=[float(v) for v in efht],
        mean_evaluations=mean,
        init="uniform",
        mode="float",
        residual=residual,
        params=dict(work.params(), family=work.family),
    )
