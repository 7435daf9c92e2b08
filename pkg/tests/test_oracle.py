import math
from fractions import Fraction

import pytest

from ealab.bitvec import BitString, RandomSource
from ealab.oracle import (
    ChainSolution,
    EnumerationCapError,
    SingularChainError,
    _exact_move_law,
    brute_force_F,
    brute_force_optimum,
    full_chain_efht,
    lumped_chain_efht,
)
from ealab.problems import (
    build_binval,
    build_linear,
    build_onemax,
    build_plateau,
    build_worst,
    build_worst_highk,
    build_worst_k1,
    build_worst_midk,
    random_rational_weights,
)


def bits(text):
    return BitString.from01(text)


def test_brute_force_trivial_cases():
    inst = build_linear([4, 3, 2, 1], 3, 2)
    assert brute_force_F(inst, bits("1100")) == 0  # ones <= d deletes everything
    inst0 = build_linear([4, 3, 2, 1], 3, 0)
    assert brute_force_F(inst0, bits("1011")) == 7  # d = 0: plain weighted sum


def test_brute_force_matches_closed_form_exhaustive():
    rng = RandomSource(12)
    for d in (0, 1, 2, 3):
        inst = build_linear(random_rational_weights(9, rng), 6, d)
        for mask in range(1 << 9):
            x = BitString(9, mask)
            assert brute_force_F(inst, x) == inst.objective_value(x)


def test_brute_force_caps():
    inst = build_linear([1] * 30, 29, 4)
    with pytest.raises(EnumerationCapError):
        brute_force_F(inst, BitString.prefix_ones(30, 28))
    small_cap = build_linear([1] * 20, 19, 4)
    with pytest.raises(EnumerationCapError):
        brute_force_F(small_cap, BitString.prefix_ones(20, 18), subset_cap=10)


def test_brute_force_optimum_matches_builders():
    assert brute_force_optimum(build_onemax(10, 6, 2)) == 4
    assert brute_force_optimum(build_binval(10, 6, 2)) == sum(1 << (9 - i) for i in range(2, 6))
    assert brute_force_optimum(build_worst_midk(12, 3, 3)) == Fraction(19, 2)
    assert brute_force_optimum(build_worst_highk(10, 6)) == 15
    assert brute_force_optimum(build_worst_k1(9, 2)) == 2
    assert brute_force_optimum(build_plateau(10, 4)) == 2


def test_brute_force_optimum_size_cap():
    with pytest.raises(EnumerationCapError):
        brute_force_optimum(build_onemax(21, 5, 1))


def test_move_law_rows_sum_to_one_exactly():
    for n in (1, 2, 5, 9):
        for j in range(n + 1):
            law = _exact_move_law(n, j)
            assert sum(law) == n**n


def test_lumped_hand_solved_two_state_chain():
    solution = lumped_chain_efht("deletion_onemax", 1, k=1, d=0)
    assert solution.mean_evaluations == Fraction(3, 2)
    assert solution.efht[1] == 0
    assert solution.efht[0] == 1
    assert solution.mode == "exact"


def test_lumped_accept_all_forced_flip():
    solution = lumped_chain_efht("accept_all_walk", 1, d=0, init=0)
    assert solution.efht[0] == 1
    assert solution.mean_evaluations == 2


def test_lumped_accept_all_point_init_formula():
    # from the all-zeros state the first move lands past d=0 iff any bit flips
    n = 6
    solution = lumped_chain_efht("accept_all_walk", n, d=0, init=0)
    escape = 1 - Fraction(n - 1, n) ** n
    assert solution.efht[0] == 1 / escape


def test_lumped_efht_monotone_towards_optimum():
    n, k, d = 30, 20, 5
    solution = lumped_chain_efht("deletion_onemax", n, k=k, d=d)
    for j in range(d + 1, k):
        assert solution.efht[j] > solution.efht[j + 1]


def test_lumped_regression_pin_n30():
    solution = lumped_chain_efht("deletion_onemax", 30, k=20, d=5)
    assert float(solution.mean_evaluations) == pytest.approx(20.486256372947647, rel=1e-12)


def test_lumped_modes_agree():
    exact = lumped_chain_efht("deletion_onemax", 24, k=15, d=4, mode="exact")
    mp = lumped_chain_efht("deletion_onemax", 24, k=15, d=4, mode="mp")
    floaty = lumped_chain_efht("deletion_onemax", 24, k=15, d=4, mode="float")
    reference = float(exact.mean_evaluations)
    assert float(mp.mean_evaluations) == pytest.approx(reference, rel=1e-12)
    assert float(floaty.mean_evaluations) == pytest.approx(reference, rel=1e-9)
    assert mp.residual is not None and mp.residual <= 1e-9
    assert floaty.residual is not None and floaty.residual <= 1e-9


def test_lumped_validation():
    with pytest.raises(ValueError):
        lumped_chain_efht("deletion_onemax", 8, k=3, d=3)
    with pytest.raises(ValueError):
        lumped_chain_efht("accept_all_walk", 8, d=8)
    with pytest.raises(ValueError):
        lumped_chain_efht("nope", 8, d=1)
    with pytest.raises(ValueError):
        lumped_chain_efht("deletion_onemax", 8, k=5, d=1, init=9)


def test_full_chain_agrees_with_lumped():
    for n, k, d in ((6, 4, 1), (8, 5, 2), (9, 3, 0)):
        lumped = lumped_chain_efht("deletion_onemax", n, k=k, d=d)
        full = full_chain_efht(build_onemax(n, k, d))
        reference = float(lumped.mean_evaluations)
        assert full.mean_evaluations == pytest.approx(reference, rel=1e-11)


def test_full_chain_plateau_lower_bound():
    solution = full_chain_efht(build_plateau(10, 4))
    assert solution.mean_evaluations >= math.comb(10, 5) / 4


def test_full_chain_single_budget_trap():
    # every non-optimal single-one start needs the simultaneous double flip
    solution = full_chain_efht(build_worst_k1(8, 3))
    star = 1  # mask of 10000000
    assert solution.efht[star] == 0
    for i in range(1, 8):
        value = solution.efht[1 << i]
        assert value > (8 / 4) ** 2
        assert value == pytest.approx(142.603983, rel=1e-6)  # pinned from the solve


def test_full_chain_unknown_optimum_uses_enumeration():
    inst = build_worst([[2, 1, 1, 1], [1, 2, 1, 1]], 2)
    solution = full_chain_efht(inst)
    assert solution.mean_evaluations > 1


def test_full_chain_unreachable_absorption_is_explicit():
    wrong = build_worst([[2, 1, 1, 1], [1, 2, 1, 1]], 2, optimum=99)
    with pytest.raises(SingularChainError):
        full_chain_efht(wrong)


def test_full_chain_size_cap():
    with pytest.raises(EnumerationCapError):
        full_chain_efht(build_onemax(13, 5, 1))


def test_chain_csv_export():
    solution = lumped_chain_efht("deletion_onemax", 4, k=2, d=1)
    text = solution.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "state,efht"
    assert len(lines) == 6
    assert lines[3].startswith("2,0")  # absorbing state k=2
    assert isinstance(solution, ChainSolution)
