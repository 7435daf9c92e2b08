"""Acceptance verification suite: ten criteria gating the lab.

The "full" profile runs every criterion at its contract parameters and
tolerances; "quick" shrinks sizes and sample counts for a smoke pass,
keeping thresholds of the same form.  Every criterion is deterministic:
master seeds are fixed as 1000 + criterion number and statistical checks
use 3-standard-error bands.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

from .bitvec import BitString, RandomSource
from .drift import (
    ObjectiveGapDistance,
    OnesGapDistance,
    PiecewiseWalkDistance,
    canonical_ones_states,
    check_bound,
    exhaustive_states,
)
from .experiments import RegimeSpec, compare_regimes, default_regime_rs, run_trials
from .oracle import brute_force_F, brute_force_optimum, full_chain_efht, lumped_chain_efht
from .problems import (
    build_binval,
    build_linear,
    build_onemax,
    build_plateau,
    build_worst_highk,
    build_worst_k1,
    build_worst_midk,
    random_rational_weights,
)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} criterion {self.number} [{self.name}] {self.detail} ({self.seconds:.1f}s)"


def _seed(number: int) -> int:
    return 1000 + number


# --- criterion 1 -----------------------------------------------------------


def _criterion_objective_correctness(profile: str) -> tuple[bool, str]:
    if profile == "full":
        n, vectors, max_d, k = 14, 20, 4, 10
    else:
        n, vectors, max_d, k = 10, 4, 2, 6
    rng = RandomSource(_seed(1))
    mismatches = 0
    checked = 0
    for _ in range(vectors):
        weights = random_rational_weights(n, rng)
        for d in range(max_d + 1):
            inst = build_linear(weights, k, d)
            for mask in range(1 << n):
                x = BitString(n, mask)
                checked += 1
                if brute_force_F(inst, x) != inst.objective_value(x):
                    mismatches += 1
        # the budget k never enters the objective; check the fitness branch
        for budget in range(1, n + 1):
            inst = build_linear(weights, budget, 0)
            for _ in range(40):
                x = BitString(n, rng.bits(n))
                expected = (
                    Fraction(budget - x.ones)
                    if x.ones > budget
                    else inst.objective_value(x)
                )
                if inst.fitness(x) != expected:
                    mismatches += 1
    detail = f"{checked} exhaustive closed-form vs enumeration comparisons, {mismatches} mismatches"
    return mismatches == 0, detail


# --- criterion 2 -----------------------------------------------------------


def _criterion_chain_agreement(profile: str) -> tuple[bool, str]:
    if profile == "full":
        trials, max_n_cross = 10_000, 10
    else:
        trials, max_n_cross = 2_000, 7
    n, k, d = 30, 20, 5
    chain_mean = float(lumped_chain_efht("deletion_onemax", n, k=k, d=d).mean_evaluations)
    stats = run_trials(build_onemax(n, k, d), trials, _seed(2), 10**6)
    gap = abs(float(stats.mean) - chain_mean)
    sim_ok = gap <= 3 * stats.stderr

    worst_rel = 0.0
    for size in range(1, max_n_cross + 1):
        for budget in range(1, size + 1):
            for deletions in range(budget):
                lumped = lumped_chain_efht("deletion_onemax", size, k=budget, d=deletions)
                full = full_chain_efht(build_onemax(size, budget, deletions))
                reference = float(lumped.mean_evaluations)
                rel = abs(full.mean_evaluations - reference) / reference
                worst_rel = max(worst_rel, rel)
    cross_ok = worst_rel <= 1e-9
    detail = (
        f"sim mean {float(stats.mean):.3f} vs chain {chain_mean:.3f} "
        f"(|gap|={gap:.3f}, 3se={3 * stats.stderr:.3f}); "
        f"lumped-vs-full worst rel err {worst_rel:.2e} over n<={max_n_cross}"
    )
    return sim_ok and cross_ok, detail


# --- criterion 3 -----------------------------------------------------------


def _criterion_nlogn_band(profile: str) -> tuple[bool, str]:
    if profile == "full":
        sizes, trials = (64, 128, 256, 512), 500
    else:
        sizes, trials = (32, 64, 128), 100
    ratios = []
    exact_ratios = []
    for n in sizes:
        d = math.isqrt(n)
        k = 2 * d
        stats = run_trials(build_onemax(n, k, d), trials, _seed(3), 10**7)
        ratios.append(float(stats.mean) / (n * math.log(n)))
        chain = lumped_chain_efht("deletion_onemax", n, k=k, d=d)
        exact_ratios.append(float(chain.mean_evaluations) / (n * math.log(n)))
    band = max(ratios) / min(ratios)
    exact_band = max(exact_ratios) / min(exact_ratios)
    detail = (
        f"empirical band {band:.4f} (exact-oracle band {exact_band:.4f}) vs threshold 2 "
        f"over n={list(sizes)}"
    )
    return band <= 2.0, detail


# --- criterion 4 -----------------------------------------------------------


def _criterion_threshold_ratio(profile: str) -> tuple[bool, str]:
    sizes = (100, 200) if profile == "full" else (50, 100)
    ratios = []
    for n in sizes:
        r_small, r_large = default_regime_rs(n)
        comparison = compare_regimes(RegimeSpec(n=n, r=r_small), RegimeSpec(n=n, r=r_large))
        ratios.append(comparison.ratio)
    ok = ratios[0] >= 10.0 and ratios[1] > ratios[0]
    detail = (
        f"EFHT ratio large-r/small-r: n={sizes[0]}: {ratios[0]:.3e}, "
        f"n={sizes[1]}: {ratios[1]:.3e} (needs >= 10 and growth)"
    )
    return ok, detail


# --- criterion 5 -----------------------------------------------------------


def _criterion_plateau_lower_bound(profile: str) -> tuple[bool, str]:
    if profile == "full":
        n, d, trials = 16, 7, 200
    else:
        n, d, trials = 12, 5, 40
    k = d + 1
    threshold = math.comb(n, k) / 8
    stats = run_trials(build_plateau(n, d), trials, _seed(5), 2 * 10**6)
    sim_ok = float(stats.mean) >= threshold

    chain = full_chain_efht(build_plateau(10, 4))
    chain_threshold = math.comb(10, 5) / 4
    chain_ok = chain.mean_evaluations >= chain_threshold
    detail = (
        f"sim mean {float(stats.mean):.1f} >= C({n},{k})/8 = {threshold:.2f} "
        f"({stats.censored} censored); exact chain mean {chain.mean_evaluations:.1f} "
        f">= C(10,5)/4 = {chain_threshold:.0f}"
    )
    return sim_ok and chain_ok, detail


# --- criterion 6 -----------------------------------------------------------


def _criterion_single_budget_trap(profile: str) -> tuple[bool, str]:
    if profile == "full":
        sizes, trials = (32, 64, 128), 300
    else:
        sizes, trials = (16, 32), 60
    normalized = []
    floors_ok = True
    for n in sizes:
        stats = run_trials(build_worst_k1(n, 2), trials, _seed(6), 10**6)
        mean = float(stats.mean)
        if mean < (n / 4) ** 2:
            floors_ok = False
        normalized.append(mean / n**2)
    band = max(normalized) / min(normalized)
    detail = (
        f"mean/n^2 per cell {[f'{v:.3f}' for v in normalized]} band {band:.3f} "
        f"(threshold 3); every mean >= (n/4)^2: {floors_ok}"
    )
    return floors_ok and band <= 3.0, detail


# --- criterion 7 -----------------------------------------------------------


def _criterion_highk_plateau(profile: str) -> tuple[bool, str]:
    if profile == "full":
        n, k, trials = 14, 7, 100
    else:
        n, k, trials = 10, 5, 30
    threshold = math.comb(n, k) / 8
    stats = run_trials(build_worst_highk(n, k), trials, _seed(7), 10**6)
    ok = float(stats.mean) >= threshold
    detail = (
        f"mean {float(stats.mean):.1f} >= C({n},{k})/8 = {threshold:.2f} "
        f"({stats.censored} censored)"
    )
    return ok, detail


# --- criterion 8 -----------------------------------------------------------


def _criterion_drift_suite(profile: str) -> tuple[bool, str]:
    samples = 100_000 if profile == "full" else 20_000
    pieces = []

    n, k, d = 50, 30, 10
    inst = build_onemax(n, k, d)
    report_gap = check_bound(
        inst,
        OnesGapDistance(n, k),
        canonical_ones_states(n, range(d + 1, k)),
        "multiplicative",
        1.0 / (math.e * n),
        samples,
        master_seed=_seed(8),
    )
    pieces.append(("ones-gap", report_gap.all_pass, len(report_gap.flagged())))

    walk = PiecewiseWalkDistance(100, 5)
    report_walk = check_bound(
        None,
        walk,
        canonical_ones_states(100, range(walk.d + 1)),
        "additive",
        1.0 / 100**2,
        samples,
        master_seed=_seed(8) + 1,
    )
    pieces.append(("walk-piecewise", report_walk.all_pass, len(report_walk.flagged())))

    general = build_linear(random_rational_weights(10, RandomSource(1008)), 4, 1)
    states = exhaustive_states(10, 2, 4)
    report_general = check_bound(
        general,
        ObjectiveGapDistance(general),
        states,
        "multiplicative",
        1.0 / (math.e * 10**4),
        samples,
        master_seed=_seed(8) + 2,
    )
    pieces.append(("objective-gap", report_general.all_pass, len(report_general.flagged())))

    growth = 1 + Fraction(20 * walk.r, 100)
    ladder = walk.step_sizes()
    ratios_ok = all(
        ladder[j] / ladder[j - 1] == (1 if j < 50 else growth) for j in range(1, walk.d + 1)
    )
    telescope_ok = all(
        ladder[j - 1] == walk.value_by_ones(j - 1) - walk.value_by_ones(j)
        for j in range(1, walk.d + 1)
    )
    edge = walk.value_by_ones(walk.d) - walk.value_by_ones(walk.d + 1)
    edge_ok = edge == growth**walk.r * 20 * walk.r + 1 and all(
        edge >= 100 * ladder[j - 1] for j in range(1, walk.d + 2)
    )
    ladder_ok = ratios_ok and telescope_ok and edge_ok

    all_ok = ladder_ok and all(ok for _, ok, _ in pieces)
    detail = (
        "; ".join(f"{name}: {'pass' if ok else f'{bad} flagged'}" for name, ok, bad in pieces)
        + f"; ladder identities exact: {ladder_ok} ({samples} samples/state)"
    )
    return all_ok, detail


# --- criterion 9 -----------------------------------------------------------


def _criterion_optimum_crosscheck(profile: str) -> tuple[bool, str]:
    rng = RandomSource(_seed(9))
    instances = [
        build_onemax(6, 3, 1),
        build_onemax(9, 5, 2),
        build_onemax(12, 8, 3),
        build_onemax(12, 12, 0),
        build_binval(6, 4, 1),
        build_binval(9, 6, 2),
        build_binval(12, 7, 3),
        build_linear(random_rational_weights(8, rng), 5, 2),
        build_linear(random_rational_weights(10, rng), 4, 1),
        build_linear(random_rational_weights(12, rng), 6, 4),
        build_plateau(8, 3),
        build_plateau(10, 4),
        build_plateau(12, 7),
        build_worst_k1(8, 1),
        build_worst_k1(10, 3),
        build_worst_k1(12, 2),
        build_worst_midk(9, 3, 2),
        build_worst_midk(11, 4, 3),
        build_worst_midk(12, 3, 4),
        build_worst_midk(12, 5, 2),
        build_worst_highk(8, 4),
        build_worst_highk(8, 8),
        build_worst_highk(10, 6),
        build_worst_highk(12, 6),
        build_worst_highk(12, 9),
        build_worst_highk(12, 12),
    ]
    if profile != "full":
        instances = [inst for inst in instances if inst.n <= 9]
    failures = []
    for inst in instances:
        if brute_force_optimum(inst) != inst.optimum_value:
            failures.append(f"{inst.family}{inst.params()}")
    special_midk = build_worst_midk(12, 3, 3)
    if brute_force_optimum(special_midk) != Fraction(19, 2):
        failures.append("worst_midk value 19/2")
    special_high = build_worst_highk(12, 7)
    if brute_force_optimum(special_high) != 18:
        failures.append("worst_highk value n+k-1")
    detail = f"{len(instances) + 2} builder instances cross-checked exhaustively"
    if failures:
        detail += f"; mismatches: {failures}"
    return not failures, detail


# --- criterion 10 ----------------------------------------------------------


def _criterion_sweep_determinism(profile: str) -> tuple[bool, str]:
    import json
    import tempfile
    from pathlib import Path

    from .cli import main as cli_main

    trials = 30 if profile == "full" else 8
    spec = {
        "family": "onemax",
        "cells": [{"n": 12, "k": 6, "d": 2}, {"n": 16, "k": 6, "d": 2}],
        "trials": trials,
        "master_seed": _seed(10),
        "max_evaluations": 100_000,
    }
    with tempfile.TemporaryDirectory() as tmp:
        spec_path = Path(tmp) / "sweep.json"
        spec_path.write_text(json.dumps(spec))
        out_one = Path(tmp) / "w1.csv"
        out_eight = Path(tmp) / "w8.csv"
        code_one = cli_main(
            ["sweep", "--spec", str(spec_path), "--out", str(out_one), "--workers", "1"]
        )
        code_eight = cli_main(
            ["sweep", "--spec", str(spec_path), "--out", str(out_eight), "--workers", "8"]
        )
        bytes_one = out_one.read_bytes()
        bytes_eight = out_eight.read_bytes()
    identical = bytes_one == bytes_eight and code_one == code_eight == 0
    detail = f"{len(bytes_one)}-byte CSV identical across worker counts 1 and 8: {identical}"
    return identical, detail


_CRITERIA = (
    (1, "objective closed form equals enumeration", _criterion_objective_correctness),
    (2, "chain and simulation agree", _criterion_chain_agreement),
    (3, "n log n scaling band", _criterion_nlogn_band),
    (4, "plateau threshold blow-up", _criterion_threshold_ratio),
    (5, "plateau lower bounds", _criterion_plateau_lower_bound),
    (6, "budget-1 trap scaling", _criterion_single_budget_trap),
    (7, "high-budget plateau bound", _criterion_highk_plateau),
    (8, "drift bounds and ladder identities", _criterion_drift_suite),
    (9, "builder optima cross-check", _criterion_optimum_crosscheck),
    (10, "sweep CSV determinism", _criterion_sweep_determinism),
)


def criterion_numbers() -> list[int]:
    return [number for number, _, _ in _CRITERIA]


def run_criterion(number: int, profile: str = "full") -> CriterionResult:
    for num, name, func in _CRITERIA:
        if num == number:
            start = time.perf_counter()
            passed, detail = func(profile)
            return CriterionResult(num, name, passed, detail, time.perf_counter() - start)
    raise ValueError(f"unknown criterion {number}; valid: {criterion_numbers()}")


def run_criteria(numbers=None, profile: str = "full", echo=None) -> list[CriterionResult]:
    """Run the requested criteria (all by default), echoing one line each."""
    if profile not in ("full", "quick"):
        raise ValueError("profile must be full or quick")
    wanted = list(numbers) if numbers is not None else criterion_numbers()
    unknown = set(wanted) - set(criterion_numbers())
    if unknown:
        raise ValueError(f"unknown criteria {sorted(unknown)}; valid: {criterion_numbers()}")
    results = []
    for number in wanted:
        result = run_criterion(number, profile)
        results.append(result)
        if echo is not None:
            echo(result.line())
    return results
