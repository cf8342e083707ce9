"""Look up a class object from its id (plus optional parameters)."""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Any

from .abelian import AbelianGroupClass
from .core import ContractViolation, FraisseClass
from .fields import FiniteFieldClass
from .relational import GraphClass, KnFreeGraphClass, LinearOrderClass, QMetricClass

CLASS_NAMES = ("graph", "k3free", "order", "metric", "abelian", "field")


def make_class(class_id: str, **params: Any) -> FraisseClass:
    """Build a class from an id such as ``graph``, ``k4free``, ``qmetric_q2_d8`` or ``field_p3``.

    Short names ``metric`` and ``field`` take their parameters from ``params``.
    """
    params = {k: v for k, v in params.items() if v is not None}
    if class_id == "graph":
        return GraphClass()
    if class_id == "order":
        return LinearOrderClass()
    if class_id == "abelian":
        return AbelianGroupClass(**_pick(params, "size_cap"))
    m = re.fullmatch(r"k(\d+)free", class_id)
    if m:
        return KnFreeGraphClass(int(m.group(1)))
    m = re.fullmatch(r"qmetric_q(\d+)_d(\d+(?:/\d+)?)", class_id)
    if m:
        return QMetricClass(int(m.group(1)), Fraction(m.group(2)))
    if class_id == "metric":
        return QMetricClass(int(params.get("q", 1)), Fraction(str(params.get("dmax", 8))))
    m = re.fullmatch(r"field_p(\d+)", class_id)
    if m:
        return FiniteFieldClass(int(m.group(1)), **_pick(params, "size_cap"))
    if class_id == "field":
        return FiniteFieldClass(int(params.get("p", 2)), **_pick(params, "size_cap"))
    raise ContractViolation(f"unknown class {class_id!r}")


def _pick(params: dict, *names: str) -> dict:
    return {k: params[k] for k in names if k in params}


def class_from_json(data: dict) -> FraisseClass:
    return make_class(data["class"], **data.get("params", {}))


def class_to_json(cls: FraisseClass) -> dict:
    return {"class": cls.class_id, "params": cls.params()}
