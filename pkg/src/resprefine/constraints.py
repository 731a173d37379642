"""Constraint taxonomy and the learned-constraint objects stored in the model.

Every constraint is a frozen dataclass so that structural equality and hashing
work out of the box. Multi-parameter argument lists are sorted on construction,
which makes ``One(a, b) == One(b, a)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from datetime import date, datetime
from typing import Any, Iterable, Union


class ConstraintCategory(enum.Enum):
    CONFIGURATION_AUTHENTICATION = 1
    PRODUCER_CONSUMER = 2
    UNSUPPORTED_OPERATION = 3
    ADDITIONAL_MANDATORY = 4
    OR = 5
    ONE = 6
    ALL_OR_NONE = 7
    CONDITIONAL_PARAMETER_REQUIRED = 8
    PARAMETER_UNKNOWN = 9
    DATA_ARITHMETIC = 10
    DATA_NON_ARITHMETIC = 11
    DATA_INFLUENCED_PARAM_SELECTION = 12
    PARAMETER_INFLUENCED_DATA_VALUES = 13
    UNHANDLED = 14

    @property
    def yields_constraint(self) -> bool:
        return self.value not in (1, 3, 9, 14)


RELOPS = ("<", "<=", ">", ">=", "=", "!=")

NEGATED_RELOP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}


def _sorted_ids(ids: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(set(ids)))


@dataclass(frozen=True)
class ProducerConsumer:
    producer_op: str
    producer_param: str
    consumer_op: str
    consumer_param: str

    kind = "ProducerConsumer"
    category = ConstraintCategory.PRODUCER_CONSUMER

    def param_ids(self) -> tuple[str, ...]:
        return (self.producer_param, self.consumer_param)


@dataclass(frozen=True)
class AdditionalMandatory:
    param: str

    kind = "AdditionalMandatory"
    category = ConstraintCategory.ADDITIONAL_MANDATORY

    def param_ids(self) -> tuple[str, ...]:
        return (self.param,)

    def holds(self, selected: frozenset[str]) -> bool:
        return self.param in selected


@dataclass(frozen=True)
class _GroupConstraint:
    params: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", _sorted_ids(self.params))

    def param_ids(self) -> tuple[str, ...]:
        return self.params

    def count(self, selected: frozenset[str]) -> int:
        return sum(1 for p in self.params if p in selected)


@dataclass(frozen=True)
class Or(_GroupConstraint):
    """At least one of ``params``.

    The selection encoder uses the weaker conditional form (only once some
    optional parameter is sent); ``holds`` is the plain reading.
    """

    kind = "Or"
    category = ConstraintCategory.OR

    def holds(self, selected: frozenset[str]) -> bool:
        return self.count(selected) > 0


@dataclass(frozen=True)
class One(_GroupConstraint):
    kind = "One"
    category = ConstraintCategory.ONE

    def holds(self, selected: frozenset[str]) -> bool:
        return self.count(selected) <= 1


@dataclass(frozen=True)
class AllOrNone(_GroupConstraint):
    kind = "AllOrNone"
    category = ConstraintCategory.ALL_OR_NONE

    def holds(self, selected: frozenset[str]) -> bool:
        return self.count(selected) in (0, len(self.params))


@dataclass(frozen=True)
class ConditionalParameterRequired:
    """If ``p2`` presence equals ``p2_present`` then ``p1`` presence must equal ``p1_present``."""

    p1: str
    p1_present: bool
    p2: str
    p2_present: bool

    kind = "ConditionalParameterRequired"
    category = ConstraintCategory.CONDITIONAL_PARAMETER_REQUIRED

    def param_ids(self) -> tuple[str, ...]:
        return (self.p1, self.p2)

    def holds(self, selected: frozenset[str]) -> bool:
        if (self.p2 in selected) == self.p2_present:
            return (self.p1 in selected) == self.p1_present
        return True


@dataclass(frozen=True)
class Present:
    """Presence test used as the antecedent of a parameter-influenced data rule."""

    param: str
    present: bool = True

    kind = "Present"
    category = None

    def param_ids(self) -> tuple[str, ...]:
        return (self.param,)

    def holds(self, selected: frozenset[str]) -> bool:
        return (self.param in selected) == self.present


@dataclass(frozen=True)
class DataArithmetic:
    """``lhs relop rhs`` where rhs is a parameter id or a constant (or constant list).

    A tuple rhs with ``=``/``!=`` means membership / non-membership.
    """

    lhs: str
    relop: str
    rhs: Any
    rhs_is_param: bool = False

    kind = "DataArithmetic"
    category = ConstraintCategory.DATA_ARITHMETIC

    def __post_init__(self) -> None:
        if self.relop not in RELOPS:
            raise ValueError(f"unknown relational operator {self.relop!r}")
        if isinstance(self.rhs, list):
            object.__setattr__(self, "rhs", tuple(self.rhs))

    def param_ids(self) -> tuple[str, ...]:
        if self.rhs_is_param:
            return (self.lhs, self.rhs)
        return (self.lhs,)

    def negated(self) -> "DataArithmetic":
        return DataArithmetic(self.lhs, NEGATED_RELOP[self.relop], self.rhs, self.rhs_is_param)

    def satisfied(self, values: dict[str, Any]) -> bool:
        left = values[self.lhs]
        right = values[self.rhs] if self.rhs_is_param else self.rhs
        return compare(left, self.relop, right)


@dataclass(frozen=True)
class DataNonArithmetic:
    """Value property of one parameter: ``categorical`` (value set), ``unique`` or ``format``."""

    param: str
    property: str
    values: tuple = ()

    kind = "DataNonArithmetic"
    category = ConstraintCategory.DATA_NON_ARITHMETIC

    def __post_init__(self) -> None:
        if self.property not in ("categorical", "unique", "format"):
            raise ValueError(f"unknown data property {self.property!r}")
        object.__setattr__(self, "values", tuple(sorted(set(self.values), key=repr)))

    def param_ids(self) -> tuple[str, ...]:
        return (self.param,)

    def satisfied(self, values: dict[str, Any], used: set | None = None) -> bool:
        value = values[self.param]
        if self.property == "categorical":
            return any(_loose_equal(value, v) for v in self.values)
        if self.property == "format":
            from resprefine.formats import matches_format

            return all(matches_format(value, fmt) for fmt in self.values)
        return used is None or freeze(value) not in used


SelectionConstraint = Union[AdditionalMandatory, Or, One, AllOrNone, ConditionalParameterRequired, Present]


@dataclass(frozen=True)
class DataInfluencedParamSelection:
    antecedent: DataArithmetic
    consequent: SelectionConstraint

    kind = "DataInfluencedParamSelection"
    category = ConstraintCategory.DATA_INFLUENCED_PARAM_SELECTION

    def param_ids(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.antecedent.param_ids() + self.consequent.param_ids()))


@dataclass(frozen=True)
class ParameterInfluencedDataValues:
    antecedent: SelectionConstraint
    consequent: DataArithmetic

    kind = "ParameterInfluencedDataValues"
    category = ConstraintCategory.PARAMETER_INFLUENCED_DATA_VALUES

    def param_ids(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.antecedent.param_ids() + self.consequent.param_ids()))


Constraint = Union[
    ProducerConsumer,
    AdditionalMandatory,
    Or,
    One,
    AllOrNone,
    ConditionalParameterRequired,
    DataArithmetic,
    DataNonArithmetic,
    DataInfluencedParamSelection,
    ParameterInfluencedDataValues,
]

SELECTION_TYPES = (AdditionalMandatory, Or, One, AllOrNone, ConditionalParameterRequired, Present)
DATA_TYPES = (DataArithmetic, DataNonArithmetic)
NESTED_TYPES = (DataInfluencedParamSelection, ParameterInfluencedDataValues)

_KINDS = {
    cls.kind: cls
    for cls in (
        ProducerConsumer,
        AdditionalMandatory,
        Or,
        One,
        AllOrNone,
        ConditionalParameterRequired,
        Present,
        DataArithmetic,
        DataNonArithmetic,
        DataInfluencedParamSelection,
        ParameterInfluencedDataValues,
    )
}


# -- comparison helpers ------------------------------------------------------


def _as_ordered(value: Any) -> Any:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, (datetime, date)):
        return value
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
        try:
            return datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError:
            return value
    return value


def _loose_equal(a: Any, b: Any) -> bool:
    if a == b:
        return True
    if isinstance(a, (int, float)) and isinstance(b, (int, float)) and not isinstance(a, bool):
        return math.isclose(a, b)
    return str(a) == str(b)


def compare(left: Any, relop: str, right: Any) -> bool:
    """Evaluate ``left relop right``; tuple right-hand sides mean (non-)membership."""
    if isinstance(right, tuple):
        member = any(_loose_equal(left, r) for r in right)
        if relop == "=":
            return member
        if relop == "!=":
            return not member
        raise ValueError("ordering comparison against a value list")
    if relop == "=":
        return _loose_equal(left, right)
    if relop == "!=":
        return not _loose_equal(left, right)
    a, b = _as_ordered(left), _as_ordered(right)
    if isinstance(a, datetime) and isinstance(b, datetime):
        if (a.tzinfo is None) != (b.tzinfo is None):
            a, b = a.replace(tzinfo=None), b.replace(tzinfo=None)
    try:
        if relop == "<":
            return a < b
        if relop == "<=":
            return a <= b
        if relop == ">":
            return a > b
        return a >= b
    except TypeError:
        return False


def freeze(value: Any) -> Any:
    if isinstance(value, dict):
        return tuple(sorted((k, freeze(v)) for k, v in value.items()))
    if isinstance(value, list):
        return tuple(freeze(v) for v in value)
    return value


# -- serialization -----------------------------------------------------------


def to_dict(c: Any) -> dict:
    if isinstance(c, ProducerConsumer):
        return {
            "kind": c.kind,
            "producer_op": c.producer_op,
            "producer_param": c.producer_param,
            "consumer_op": c.consumer_op,
            "consumer_param": c.consumer_param,
        }
    if isinstance(c, (AdditionalMandatory,)):
        return {"kind": c.kind, "param": c.param}
    if isinstance(c, Present):
        return {"kind": c.kind, "param": c.param, "present": c.present}
    if isinstance(c, _GroupConstraint):
        return {"kind": c.kind, "params": list(c.params)}
    if isinstance(c, ConditionalParameterRequired):
        return {
            "kind": c.kind,
            "p1": c.p1,
            "p1_present": c.p1_present,
            "p2": c.p2,
            "p2_present": c.p2_present,
        }
    if isinstance(c, DataArithmetic):
        rhs = list(c.rhs) if isinstance(c.rhs, tuple) else c.rhs
        return {"kind": c.kind, "lhs": c.lhs, "relop": c.relop, "rhs": rhs, "rhs_is_param": c.rhs_is_param}
    if isinstance(c, DataNonArithmetic):
        return {"kind": c.kind, "param": c.param, "property": c.property, "values": list(c.values)}
    if isinstance(c, NESTED_TYPES):
        return {"kind": c.kind, "antecedent": to_dict(c.antecedent), "consequent": to_dict(c.consequent)}
    raise TypeError(f"not a constraint: {c!r}")


def from_dict(d: dict) -> Any:
    d = dict(d)
    cls = _KINDS.get(d.pop("kind", None))
    if cls is None:
        raise ValueError(f"unknown constraint kind in {d!r}")
    if cls in NESTED_TYPES:
        return cls(from_dict(d["antecedent"]), from_dict(d["consequent"]))
    if cls is DataArithmetic and isinstance(d.get("rhs"), list):
        d["rhs"] = tuple(d["rhs"])
    if cls is DataNonArithmetic:
        d["values"] = tuple(d.get("values", ()))
    if issubclass(cls, _GroupConstraint):
        return cls(tuple(d["params"]))
    return cls(**d)


def describe(c: Any) -> str:
    """Compact human-readable rendering, e.g. ``One(a, b)``."""
    if isinstance(c, _GroupConstraint):
        return f"{c.kind}({', '.join(c.params)})"
    if isinstance(c, ProducerConsumer):
        return f"ProducerConsumer({c.producer_op}, {c.producer_param}, {c.consumer_op}, {c.consumer_param})"
    if isinstance(c, AdditionalMandatory):
        return f"AdditionalMandatory({c.param})"
    if isinstance(c, Present):
        return f"present({c.param})" if c.present else f"absent({c.param})"
    if isinstance(c, ConditionalParameterRequired):
        return f"ConditionalParameterRequired({c.p1}, {c.p1_present}, {c.p2}, {c.p2_present})"
    if isinstance(c, DataArithmetic):
        return f"({c.lhs} {c.relop} {c.rhs!r})" if not c.rhs_is_param else f"({c.lhs} {c.relop} {c.rhs})"
    if isinstance(c, DataNonArithmetic):
        return f"DataNonArithmetic({c.param}, {c.property}, {list(c.values)})"
    if isinstance(c, NESTED_TYPES):
        return f"{c.kind}({describe(c.antecedent)} => {describe(c.consequent)})"
    return repr(c)


__all__ = [
    "ConstraintCategory",
    "Constraint",
    "ProducerConsumer",
    "AdditionalMandatory",
    "Or",
    "One",
    "AllOrNone",
    "ConditionalParameterRequired",
    "Present",
    "DataArithmetic",
    "DataNonArithmetic",
    "DataInfluencedParamSelection",
    "ParameterInfluencedDataValues",
    "SELECTION_TYPES",
    "DATA_TYPES",
    "NESTED_TYPES",
    "RELOPS",
    "compare",
    "to_dict",
    "from_dict",
    "describe",
]

