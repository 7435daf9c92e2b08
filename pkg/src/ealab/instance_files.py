"""Instance file schema: JSON documents describing one problem instance.

Fields:

* ``family`` -- one of ``onemax``, ``binval``, ``linear``, ``plateau``
  (deletion-robust families) or ``worstcase``, ``worst_k1``,
  ``worst_midk``, ``worst_highk`` (worst-case families).
* ``n`` -- solution length (derived families).
* ``k`` -- cardinality budget; ``d`` -- deletion budget (deletion
  families); ``m`` -- number of functions (worst-case families).
* ``weights`` -- list of exact rationals, user order (family ``linear``).
* ``weight_matrix`` -- m lists of n exact rationals (family ``worstcase``).
* ``optimum`` -- optional exact rational (``worstcase`` only; derived
  families compute their optimum and reject contradicting overrides).

Rationals are written as plain JSON integers when integral and as
``"p/q"`` strings otherwise, so values round-trip exactly.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from . import problems
from .problems import DeletionRobustInstance, Instance, WorstCaseInstance


class InstanceFormatError(ValueError):
    """Raised for malformed or inconsistent instance documents."""


def parse_rational(value) -> Fraction:
    if isinstance(value, bool):
        raise InstanceFormatError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceFormatError(f"not a rational: {value!r}") from exc
    raise InstanceFormatError(f"not a rational: {value!r}")


def format_rational(value: Fraction):
    """Integers as plain ints, everything else as 'p/q'."""
    if value.denominator == 1:
        return int(value)
    return f"{value.numerator}/{value.denominator}"


def _require(doc: dict, field: str) -> object:
    if field not in doc:
        raise InstanceFormatError(f"missing field {field!r} for family {doc.get('family')!r}")
    return doc[field]


def _int_field(doc: dict, field: str) -> int:
    value = _require(doc, field)
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(f"field {field!r} must be an integer, got {value!r}")
    return value


def _check_stated_optimum(doc: dict, inst: Instance) -> Instance:
    # derived families fix their optimum; a contradicting override is an error
    if "optimum" in doc and parse_rational(doc["optimum"]) != inst.optimum_value:
        raise InstanceFormatError("stated optimum contradicts the family's optimum")
    return inst


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    family = doc.get("family")
    try:
        if family == "onemax":
            return _check_stated_optimum(
                doc,
                problems.build_onemax(_int_field(doc, "n"), _int_field(doc, "k"), _int_field(doc, "d")),
            )
        if family == "binval":
            return _check_stated_optimum(
                doc,
                problems.build_binval(_int_field(doc, "n"), _int_field(doc, "k"), _int_field(doc, "d")),
            )
        if family == "plateau":
            return _check_stated_optimum(
                doc, problems.build_plateau(_int_field(doc, "n"), _int_field(doc, "d"))
            )
        if family == "linear":
            weights = _require(doc, "weights")
            if not isinstance(weights, list):
                raise InstanceFormatError("field 'weights' must be a list")
            return _check_stated_optimum(
                doc,
                problems.build_linear(
                    [parse_rational(w) for w in weights], _int_field(doc, "k"), _int_field(doc, "d")
                ),
            )
        if family == "worst_k1":
            return _check_stated_optimum(
                doc, problems.build_worst_k1(_int_field(doc, "n"), _int_field(doc, "m"))
            )
        if family == "worst_midk":
            return _check_stated_optimum(
                doc,
                problems.build_worst_midk(
                    _int_field(doc, "n"), _int_field(doc, "k"), _int_field(doc, "m")
                ),
            )
        if family == "worst_highk":
            return _check_stated_optimum(
                doc, problems.build_worst_highk(_int_field(doc, "n"), _int_field(doc, "k"))
            )
        if family == "worstcase":
            matrix = _require(doc, "weight_matrix")
            if not isinstance(matrix, list) or not all(isinstance(r, list) for r in matrix):
                raise InstanceFormatError("field 'weight_matrix' must be a list of lists")
            if "m" in doc and _int_field(doc, "m") != len(matrix):
                raise InstanceFormatError("field 'm' contradicts the weight matrix height")
            rows = [[parse_rational(w) for w in row] for row in matrix]
            optimum = parse_rational(doc["optimum"]) if "optimum" in doc else None
            return problems.build_worst(rows, _int_field(doc, "k"), optimum=optimum)
    except ValueError as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(str(exc)) from exc
    raise InstanceFormatError(f"unknown family {family!r}")


def instance_to_dict(inst: Instance) -> dict:
    doc: dict = {"family": inst.family}
    doc.update(inst.params())
    if isinstance(inst, DeletionRobustInstance):
        if inst.family == "linear":
            doc["weights"] = [format_rational(w) for w in inst.objective.user_weights()]
        doc["optimum"] = format_rational(inst.optimum_value)
    elif isinstance(inst, WorstCaseInstance):
        if inst.family == "worstcase":
            doc["weight_matrix"] = [
                [format_rational(w) for w in row] for row in inst.weight_rows
            ]
        if inst.optimum_value is not None:
            doc["optimum"] = format_rational(inst.optimum_value)
    return doc


def load_instance(path) -> Instance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InstanceFormatError(f"cannot read instance file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"instance file {path} is not valid JSON: {exc}") from exc
    return instance_from_dict(doc)


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")
