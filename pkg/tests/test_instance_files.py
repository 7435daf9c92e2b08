import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ealab.instance_files import (
    InstanceFormatError,
    format_rational,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    parse_rational,
    save_instance,
)
from ealab.problems import build_binval, build_linear, build_onemax, build_worst


def test_rational_round_trip_examples():
    assert parse_rational("3/2") == Fraction(3, 2)
    assert parse_rational(7) == Fraction(7)
    assert format_rational(Fraction(3, 2)) == "3/2"
    assert format_rational(Fraction(14, 2)) == 7


@given(st.integers(-10**12, 10**12), st.integers(1, 10**6))
def test_rational_round_trip_property(numerator, denominator):
    value = Fraction(numerator, denominator)
    assert parse_rational(format_rational(value)) == value


@pytest.mark.parametrize("bad", ["1/0", "x", 1.5, None, True])
def test_rational_rejects_garbage(bad):
    with pytest.raises(InstanceFormatError):
        parse_rational(bad)


@pytest.mark.parametrize(
    "doc",
    [
        {"family": "onemax", "n": 8, "k": 5, "d": 2},
        {"family": "binval", "n": 6, "k": 4, "d": 1},
        {"family": "plateau", "n": 10, "d": 4},
        {"family": "linear", "k": 3, "d": 1, "weights": [1, "3/2", 2, 1]},
        {"family": "worst_k1", "n": 8, "m": 3},
        {"family": "worst_midk", "n": 12, "k": 3, "m": 2},
        {"family": "worst_highk", "n": 10, "k": 6},
        {"family": "worstcase", "k": 2, "weight_matrix": [[2, 1, 1], ["3/2", 1, 2]]},
        {"family": "worstcase", "k": 2, "weight_matrix": [[2, 1, 1]], "optimum": 3},
    ],
)
def test_document_round_trip(doc):
    inst = instance_from_dict(doc)
    rebuilt = instance_from_dict(instance_to_dict(inst))
    assert type(rebuilt) is type(inst)
    assert rebuilt.family == inst.family
    assert rebuilt.params() == inst.params()
    assert rebuilt.optimum_value == inst.optimum_value
    if hasattr(inst, "objective"):
        assert rebuilt.objective.user_weights() == inst.objective.user_weights()
    else:
        assert rebuilt.weight_rows == inst.weight_rows


def test_linear_round_trip_preserves_user_order(tmp_path):
    inst = build_linear([1, 3, 2], 2, 1)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    doc = json.loads(path.read_text())
    assert doc["weights"] == [1, 3, 2]
    loaded = load_instance(path)
    assert loaded.objective.user_weights() == inst.objective.user_weights()
    assert loaded.optimum_value == inst.optimum_value


def test_derived_families_serialize_compactly(tmp_path):
    for inst in (build_onemax(8, 5, 2), build_binval(20, 6, 2)):
        path = tmp_path / f"{inst.family}.json"
        save_instance(inst, path)
        doc = json.loads(path.read_text())
        assert "weights" not in doc
        assert load_instance(path).optimum_value == inst.optimum_value


@pytest.mark.parametrize(
    "doc,fragment",
    [
        ({"family": "nope"}, "unknown family"),
        ({"family": "onemax", "n": 8, "k": 5}, "missing field"),
        ({"family": "onemax", "n": 8, "k": 5, "d": "2"}, "must be an integer"),
        ({"family": "onemax", "n": 8, "k": 9, "d": 2}, "k <= n"),
        ({"family": "linear", "k": 2, "d": 1, "weights": [1, "1/2"]}, "at least 1"),
        (
            {"family": "linear", "k": 2, "d": 1, "weights": [2, 2], "optimum": 5},
            "contradicts",
        ),
        ({"family": "onemax", "n": 8, "k": 5, "d": 2, "optimum": 4}, "contradicts"),
        ({"family": "worst_highk", "n": 10, "k": 6, "optimum": 14}, "contradicts"),
        (
            {"family": "worstcase", "k": 1, "m": 3, "weight_matrix": [[1, 1]]},
            "contradicts",
        ),
        (["not", "a", "dict"], "JSON object"),
    ],
)
def test_malformed_documents(doc, fragment):
    with pytest.raises(InstanceFormatError) as err:
        instance_from_dict(doc)
    assert fragment in str(err.value)


def test_load_errors(tmp_path):
    missing = tmp_path / "missing.json"
    with pytest.raises(InstanceFormatError):
        load_instance(missing)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InstanceFormatError):
        load_instance(bad)


def test_worstcase_optimum_survives_round_trip():
    inst = build_worst([[2, 1, 1], [1, 2, 1]], 2, optimum=Fraction(3))
    doc = instance_to_dict(inst)
    assert doc["optimum"] == 3
    assert instance_from_dict(doc).optimum_value == 3
