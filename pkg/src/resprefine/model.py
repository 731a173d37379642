"""Extended specification model: operations, schemas and learned constraints.

The model is the single mutable object refined by the learning loop. It is
only mutated between iterations; generators and the executor work on a
``snapshot()``.
"""

from __future__ import annotations

import copy
import enum
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

from resprefine import constraints as C
from resprefine.errors import UnknownOperation, UnknownParameter, UnresolvedEntity

log = logging.getLogger(__name__)

METHODS = ("POST", "GET", "PUT", "PATCH", "DELETE")
PRIMITIVES = ("integer", "number", "boolean", "string")
LEARNED_KEY = "x-learned-constraints"


class Loc(str, enum.Enum):
    BODY = "body"
    PATH = "path"
    QUERY = "query"
    HEADER = "header"
    FORMDATA = "formdata"


def param_id(opname: str, loc: Loc | str, pname: str) -> str:
    loc = loc.value if isinstance(loc, Loc) else str(loc).lower()
    return f"{opname.lower()}.{loc}.{pname}"


def output_id(opname: str, responsecode: str, pname: str) -> str:
    return f"{opname}.{responsecode}.{pname}"


@dataclass
class InputParameter:
    pname: str
    ptype: str
    is_required: bool
    loc: Loc
    pc: dict = field(default_factory=dict)
    examples: list = field(default_factory=list)
    id: str = ""
    # required flag of each dotted segment relative to its own container
    required_chain: tuple[bool, ...] = ()
    deleted: bool = False

    @property
    def segments(self) -> list[str]:
        return self.pname.split(".")


@dataclass
class OutputParameter:
    pname: str
    ptype: str
    is_required: bool
    responsecode: str
    pc: dict = field(default_factory=dict)
    examples: list = field(default_factory=list)
    id: str = ""


@dataclass
class SchemaField:
    fname: str
    ftype: str
    is_required: bool
    fieldconstraint: dict = field(default_factory=dict)
    # referenced schema name for object / array-of-object fields
    ref: Optional[str] = None


@dataclass
class Schema:
    sname: str
    fields: list[SchemaField] = field(default_factory=list)

    def field(self, name: str) -> Optional[SchemaField]:
        for f in self.fields:
            if f.fname == name:
                return f
        return None


@dataclass
class Operation:
    opname: str
    path: str
    method: str
    tag: list[str] = field(default_factory=list)
    inputs: list[InputParameter] = field(default_factory=list)
    outputs: list[OutputParameter] = field(default_factory=list)
    local_constraints: list = field(default_factory=list)
    media_type: str = "application/json"
    # response code -> "object" | "array" | "primitive" | None
    response_shapes: dict[str, Optional[str]] = field(default_factory=dict)
    response_schemas: dict[str, Optional[str]] = field(default_factory=dict)

    @property
    def live_inputs(self) -> list[InputParameter]:
        return [p for p in self.inputs if not p.deleted]

    def input(self, pid: str) -> Optional[InputParameter]:
        for p in self.inputs:
            if p.id == pid:
                return p
        return None

    def input_named(self, pname: str) -> Optional[InputParameter]:
        for p in self.live_inputs:
            if p.pname == pname:
                return p
        return None

    def output(self, oid: str) -> Optional[OutputParameter]:
        for p in self.outputs:
            if p.id == oid:
                return p
        return None


@dataclass
class SpecModel:
    operations: dict[str, Operation] = field(default_factory=dict)
    schemas: dict[str, Schema] = field(default_factory=dict)
    global_constraints: list = field(default_factory=list)
    original_operations: tuple[str, ...] = ()
    needs_user_input: set[str] = field(default_factory=set)
    # op -> number of times its data must be regenerated from scratch
    regenerate: dict[str, int] = field(default_factory=dict)
    quarantined: list = field(default_factory=list)
    removed_operations: list[str] = field(default_factory=list)
    recursive_refs: set[str] = field(default_factory=set)
    warnings: list[str] = field(default_factory=list)
    document: dict = field(default_factory=dict)
    base_path: str = ""

    # -- lookup -------------------------------------------------------------

    def operation(self, opname: str) -> Operation:
        try:
            return self.operations[opname]
        except KeyError:
            raise UnknownOperation(opname) from None

    def live_operations(self) -> list[Operation]:
        return [op for name, op in self.operations.items() if name not in self.needs_user_input]

    def operation_for_id(self, pid: str) -> Optional[Operation]:
        prefix = pid.split(".", 1)[0]
        for op in self.operations.values():
            if op.opname.lower() == prefix or op.opname == prefix:
                return op
        return None

    def find_input(self, pid: str) -> tuple[Operation, InputParameter]:
        op = self.operation_for_id(pid)
        if op is not None:
            p = op.input(pid)
            if p is not None:
                return op, p
        raise UnknownParameter(pid)

    def find_output(self, oid: str) -> tuple[Operation, OutputParameter]:
        op = self.operation_for_id(oid)
        if op is not None:
            p = op.output(oid)
            if p is not None:
                return op, p
        raise UnknownParameter(oid)

    def is_live_input(self, pid: str) -> bool:
        try:
            _, p = self.find_input(pid)
        except UnknownParameter:
            return False
        return not p.deleted

    def constraints(self) -> Iterator:
        yield from self.global_constraints
        for op in self.operations.values():
            yield from op.local_constraints

    def snapshot(self) -> "SpecModel":
        return copy.deepcopy(self)

    # -- mutation -----------------------------------------------------------

    def add_constraint(self, c: Any) -> bool:
        """Insert ``c`` into its owning collection; returns False for duplicates."""
        owner = self.check_resolvable(c)
        target = self.global_constraints if owner is None else owner.local_constraints
        if c in target:
            return False
        target.append(c)
        log.debug("added constraint %s", C.describe(c))
        return True

    def check_resolvable(self, c: Any) -> Optional[Operation]:
        if isinstance(c, C.ProducerConsumer):
            for opname in (c.producer_op, c.consumer_op):
                if opname not in self.operations:
                    raise UnresolvedEntity(opname)
            if not self.is_live_input(c.consumer_param):
                raise UnresolvedEntity(c.consumer_param)
            try:
                self.find_output(c.producer_param)
            except UnknownParameter:
                if not self.is_live_input(c.producer_param):
                    raise UnresolvedEntity(c.producer_param) from None
            return None
        ids = c.param_ids()
        owners = set()
        for pid in ids:
            if not self.is_live_input(pid):
                raise UnresolvedEntity(pid)
            owners.add(self.find_input(pid)[0].opname)
        if len(owners) != 1:
            raise UnresolvedEntity(f"constraint spans operations {sorted(owners)}")
        if isinstance(c, (C.Or, C.One, C.AllOrNone)) and len(c.params) < 2:
            raise UnresolvedEntity(f"{c.kind} needs at least two parameters")
        return self.operations[owners.pop()]

    def remove_operation(self, opname: str) -> None:
        if opname not in self.operations:
            raise UnknownOperation(opname)
        del self.operations[opname]
        self.needs_user_input.discard(opname)
        self.removed_operations.append(opname)
        self.global_constraints = [
            c for c in self.global_constraints if opname not in (c.producer_op, c.consumer_op)
        ]

    def remove_parameter(self, pid: str) -> None:
        op, p = self.find_input(pid)
        if p.deleted:
            return
        p.deleted = True
        op.local_constraints = _dedupe(
            s for s in (_strip_param(c, pid) for c in op.local_constraints) if s is not None
        )
        self.global_constraints = [
            c for c in self.global_constraints if pid not in (c.consumer_param, c.producer_param)
        ]

    def remove_constraint(self, c: Any) -> bool:
        if c in self.global_constraints:
            self.global_constraints.remove(c)
            return True
        for op in self.operations.values():
            if c in op.local_constraints:
                op.local_constraints.remove(c)
                return True
        return False

    def quarantine(self, c: Any, reason: str) -> None:
        if self.remove_constraint(c):
            self.quarantined.append((c, reason))
            log.warning("quarantined %s: %s", C.describe(c), reason)

    def extract_dependencies(self) -> list[C.ProducerConsumer]:
        return [c for c in self.global_constraints if isinstance(c, C.ProducerConsumer)]

    # -- export -------------------------------------------------------------

    def to_document(self) -> dict:
        """The source document with learned state under vendor extension keys."""
        doc = copy.deepcopy(self.document)
        doc[LEARNED_KEY] = [C.to_dict(c) for c in self.constraints()]
        doc["x-removed-operations"] = list(self.removed_operations)
        doc["x-removed-parameters"] = sorted(
            p.id for op in self.operations.values() for p in op.inputs if p.deleted
        )
        doc["x-needs-user-input"] = sorted(self.needs_user_input)
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2, default=str)


def _dedupe(items) -> list:
    out: list = []
    for c in items:
        if c not in out:
            out.append(c)
    return out


def _strip_param(c: Any, pid: str) -> Any:
    """Return ``c`` with ``pid`` removed, or None when the constraint degenerates."""
    if pid not in c.param_ids():
        return c
    if isinstance(c, (C.Or, C.One, C.AllOrNone)):
        rest = tuple(p for p in c.params if p != pid)
        return type(c)(rest) if len(rest) >= 2 else None
    return None


# module-level forms of the mutation API


def add_constraint(model: SpecModel, c: Any) -> SpecModel:
    model.add_constraint(c)
    return model


def remove_operation(model: SpecModel, opname: str) -> SpecModel:
    model.remove_operation(opname)
    return model


def remove_parameter(model: SpecModel, pid: str) -> SpecModel:
    model.remove_parameter(pid)
    return model


def extract_dependencies(model: SpecModel) -> list[C.ProducerConsumer]:
    return model.extract_dependencies()
