import math
from fractions import Fraction

import pytest

from ealab.bitvec import BitString, RandomSource, flip_count_cdf, sample_flip_mask
from ealab.drift import (
    BoundReport,
    DomainError,
    LeadingBlockDistance,
    LeadingOnesGapDistance,
    LinearWalkDistance,
    ObjectiveGapDistance,
    OnesGapDistance,
    PiecewiseWalkDistance,
    canonical_ones_states,
    check_bound,
    estimate_drift,
    exhaustive_states,
    make_distance,
)
from ealab.problems import build_binval, build_linear, build_onemax, build_plateau, random_rational_weights


def bits(text):
    return BitString.from01(text)


def test_piecewise_walk_construction_rules():
    with pytest.raises(ValueError):
        PiecewiseWalkDistance(11, 2)  # odd n
    with pytest.raises(ValueError):
        PiecewiseWalkDistance(10, 0)  # r >= 1
    with pytest.raises(ValueError):
        PiecewiseWalkDistance(10, 2, d=6)  # d != n/2 + r
    with pytest.raises(ValueError):
        PiecewiseWalkDistance(10, 5)  # d reaches n


def test_piecewise_walk_zero_set_and_positivity():
    dist = PiecewiseWalkDistance(12, 2)  # d = 8
    for j in range(13):
        value = dist.value_by_ones(j)
        assert (value == 0) == (j > 8)
        if j <= 8:
            assert value > 0


def test_piecewise_ladder_identities_exact():
    n, r = 20, 3
    dist = PiecewiseWalkDistance(n, r)
    d = dist.d
    ladder = dist.step_sizes()  # D(1..d+1)
    growth = 1 + Fraction(20 * r, n)
    for j in range(1, d + 1):
        assert ladder[j - 1] == dist.value_by_ones(j - 1) - dist.value_by_ones(j)
    for j in range(1, d + 1):
        ratio = ladder[j] / ladder[j - 1]
        assert ratio == (1 if j < n // 2 else growth)
    edge_drop = dist.value_by_ones(d) - dist.value_by_ones(d + 1)
    assert edge_drop == growth**r * 20 * r + 1
    for j in range(1, d + 2):
        assert edge_drop >= n * ladder[j - 1]
    assert dist.v_min() == dist.value_by_ones(d)


def test_linear_walk_values():
    dist = LinearWalkDistance(10, 3)
    assert dist.value(BitString.zeros(10)) == 4
    assert dist.value(BitString.prefix_ones(10, 3)) == 1
    assert dist.value(BitString.prefix_ones(10, 4)) == 0


def test_ones_gap_values_and_domain():
    dist = OnesGapDistance(10, 6)
    assert dist.value(BitString.prefix_ones(10, 6)) == 0
    assert dist.value(BitString.prefix_ones(10, 2)) == 4
    with pytest.raises(DomainError):
        dist.value(BitString.prefix_ones(10, 7))


def test_leading_block_values_and_domain():
    dist = LeadingBlockDistance(10, 2)
    assert dist.value(bits("1110000000")) == 0
    assert dist.value(bits("1101000000")) == 1  # third one sits at position 4
    assert dist.value(bits("0110100000")) == 2
    with pytest.raises(DomainError):
        dist.value(bits("1100000000"))  # needs more than d ones


def test_leading_block_zero_set_exhaustive():
    dist = LeadingBlockDistance(10, 2)
    for mask in range(1 << 10):
        x = BitString(10, mask)
        if x.ones <= 2:
            continue
        value = dist.value(x)
        assert value >= 0
        assert (value == 0) == (mask & 0b111 == 0b111)


def test_leading_ones_gap_values():
    dist = LeadingOnesGapDistance(10, 4)
    assert dist.value(bits("1111000000")) == 0
    assert dist.value(bits("1101100000")) == 2
    assert dist.value(BitString.zeros(10)) == 4
    with pytest.raises(DomainError):
        dist.value(BitString.prefix_ones(10, 5))


def test_objective_gap_on_plateau():
    inst = build_plateau(10, 4)
    dist = ObjectiveGapDistance(inst)
    in_plateau = bits("1111010000")
    assert dist.value(in_plateau) == 1  # optimum 2 minus plateau value 1
    assert dist.value(BitString.prefix_ones(10, 5)) == 0
    assert dist.value(BitString.zeros(10)) == 2


def test_zero_sets_are_exact_small_n():
    inst = build_linear(random_rational_weights(10, RandomSource(3)), 5, 2)
    families = [
        (LinearWalkDistance(10, 3), lambda x: x.ones > 3, range(1 << 10)),
        (OnesGapDistance(10, 5), lambda x: x.ones == 5, None),
        (LeadingOnesGapDistance(10, 5), lambda x: x.mask & 31 == 31, None),
        (ObjectiveGapDistance(inst), inst.is_optimal, None),
    ]
    for dist, target, masks in families:
        for mask in masks or range(1 << 10):
            x = BitString(10, mask)
            if isinstance(dist, (OnesGapDistance, LeadingOnesGapDistance, ObjectiveGapDistance)) and x.ones > 5:
                continue
            assert (dist.value(x) == 0) == bool(target(x))
            assert dist.value(x) >= 0


def test_objective_gap_v_min_enumeration_and_bound():
    inst = build_linear(random_rational_weights(10, RandomSource(9)), 4, 1)
    dist = ObjectiveGapDistance(inst)
    v_min = dist.v_min()
    positives = []
    for mask in range(1 << 10):
        x = BitString(10, mask)
        if x.ones <= 4:
            value = dist.value(x)
            if value > 0:
                positives.append(value)
    assert v_min == min(positives)
    gap = inst.objective.min_gap()
    assert 1 / v_min <= 1 + 1 / gap


def test_estimate_drift_absorbing_state_is_zero():
    dist = OnesGapDistance(8, 4)
    inst = build_onemax(8, 4, 1)
    estimate = estimate_drift(inst, dist, BitString.prefix_ones(8, 4), 100, RandomSource(1))
    assert estimate.mean == 0.0 and estimate.stderr == 0.0 and estimate.samples == 0


def test_estimate_drift_ones_gap_positive():
    n, k, d = 30, 20, 5
    inst = build_onemax(n, k, d)
    dist = OnesGapDistance(n, k)
    for j in (6, 12, 19):
        state = BitString.prefix_ones(n, j)
        estimate = estimate_drift(inst, dist, state, 20_000, RandomSource(j))
        required = (k - j) / (math.e * n)
        assert estimate.mean >= required - 3 * estimate.stderr


def test_estimate_drift_piecewise_positive():
    dist = PiecewiseWalkDistance(40, 2)  # d = 22
    for j in (0, 10, 20, 22):
        state = BitString.prefix_ones(40, j)
        estimate = estimate_drift(None, dist, state, 20_000, RandomSource(100 + j))
        assert estimate.mean >= 1 / 40**2 - 3 * estimate.stderr


def test_estimate_drift_requires_instance_for_elitist_families():
    dist = OnesGapDistance(8, 4)
    with pytest.raises(ValueError):
        estimate_drift(None, dist, BitString.prefix_ones(8, 2), 10, RandomSource(0))


def test_leading_block_never_increases_along_accepted_steps():
    # any feasible start with more than d ones: accepted steps keep the
    # position of the (d+1)-th one from moving right
    n, k, d = 12, 7, 2
    inst = build_binval(n, k, d)
    block = LeadingBlockDistance(n, d)
    rng = RandomSource(77)
    cdf = flip_count_cdf(n)
    checked = 0
    attempts = 0
    while checked < 100_000 and attempts < 10**7:
        attempts += 1
        mask = rng.bits(n)
        ones = mask.bit_count()
        if not d < ones <= k:
            continue
        f0 = inst.fitness_int(mask, ones)
        flips = sample_flip_mask(n, rng, cdf)
        y = mask ^ flips
        ones_y = y.bit_count()
        if inst.fitness_int(y, ones_y) < f0:
            continue
        checked += 1
        assert block.value_of_key(block.key(y, ones_y, None)) <= block.value_of_key(
            block.key(mask, ones, None)
        )
    assert checked == 100_000


def test_leading_ones_gap_never_increases_once_block_is_filled():
    # in its phase context (first d+1 positions already ones) accepted steps
    # never shrink the leading-ones run
    n, k, d = 12, 7, 2
    inst = build_binval(n, k, d)
    gap = LeadingOnesGapDistance(n, k)
    prefix = (1 << (d + 1)) - 1
    rng = RandomSource(78)
    cdf = flip_count_cdf(n)
    checked = 0
    attempts = 0
    while checked < 100_000 and attempts < 10**7:
        attempts += 1
        mask = rng.bits(n) | prefix
        ones = mask.bit_count()
        if ones > k:
            continue
        f0 = inst.fitness_int(mask, ones)
        flips = sample_flip_mask(n, rng, cdf)
        y = mask ^ flips
        ones_y = y.bit_count()
        if inst.fitness_int(y, ones_y) < f0:
            continue
        checked += 1
        assert gap.value_of_key(gap.key(y, ones_y, None)) <= gap.value_of_key(
            gap.key(mask, ones, None)
        )
    assert checked == 100_000


def test_check_bound_multiplicative_report():
    n, k, d = 20, 12, 3
    inst = build_onemax(n, k, d)
    dist = OnesGapDistance(n, k)
    states = canonical_ones_states(n, range(d + 1, k))
    report = check_bound(inst, dist, states, "multiplicative", 1 / (math.e * n), 20_000, master_seed=5)
    assert isinstance(report, BoundReport)
    assert report.all_pass
    assert len(report.rows) == k - d - 1
    assert report.v_min == 1
    assert report.implied_evaluations_bound == pytest.approx(
        (1 + math.log(k - d - 1)) * math.e * n, rel=1e-9
    )
    text = report.to_csv()
    assert text.startswith("state,ones,distance,drift,stderr,required,margin,flagged")


def test_check_bound_additive_flags_impossible_requirement():
    n = 16
    dist = LinearWalkDistance(n, 2)
    states = canonical_ones_states(n, [0, 1, 2])
    report = check_bound(None, dist, states, "additive", 50.0, 4_000, master_seed=1)
    assert not report.all_pass
    assert all(row.flagged for row in report.rows)


def test_check_bound_validation():
    dist = LinearWalkDistance(8, 2)
    with pytest.raises(ValueError):
        check_bound(None, dist, [], "additive", 0.1, 10)
    with pytest.raises(ValueError):
        check_bound(None, dist, canonical_ones_states(8, [0]), "nope", 0.1, 10)


def test_make_distance_factory():
    assert isinstance(make_distance("walk-piecewise", n=10, r=2), PiecewiseWalkDistance)
    assert isinstance(make_distance("walk-linear", n=10, d=3), LinearWalkDistance)
    assert isinstance(make_distance("ones-gap", n=10, k=5), OnesGapDistance)
    assert isinstance(make_distance("leading-block", n=10, d=3), LeadingBlockDistance)
    assert isinstance(make_distance("leading-ones-gap", n=10, k=5), LeadingOnesGapDistance)
    inst = build_onemax(10, 5, 2)
    assert isinstance(make_distance("objective-gap", inst=inst), ObjectiveGapDistance)
    with pytest.raises(ValueError):
        make_distance("objective-gap")
    with pytest.raises(ValueError):
        make_distance("nope", n=1)


def test_exhaustive_states_listing():
    states = exhaustive_states(6, 2, 3)
    assert len(states) == math.comb(6, 2) + math.comb(6, 3)
    assert all(2 <= s.ones <= 3 for s in states)
    with pytest.raises(ValueError):
        exhaustive_states(21, 0, 1)
