"""Data scenarios: concrete values for a parameter scenario.

Values come from spec examples first, then from a deterministic provider
keyed on name/type/format, and finally from a small finite-domain solver
whenever the gathered constraints reject what the earlier sources offered.
"""

from __future__ import annotations

import itertools
import logging
import random
import re
import string
import uuid
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from typing import Any, Iterable, Optional, Protocol, Sequence

from resprefine import constraints as C
from resprefine.errors import UnsatisfiableData
from resprefine.formats import matches_format
from resprefine.model import InputParameter, Operation, Schema
from resprefine.scenarios.selection import ParameterScenario

log = logging.getLogger(__name__)

DEFAULT_K = 2
INT_RANGE = (0, 1000)
_BASE_TIME = datetime(2024, 1, 1, 12, 0, 0, tzinfo=timezone.utc)

SPEC_EXAMPLE = "spec-example"
PROVIDER = "realistic-provider"
SOLVER = "solver"
RANDOM = "random"


@dataclass
class DataScenario:
    target_op: str
    assignment: dict[str, Any]
    provenance: dict[str, str] = field(default_factory=dict)


class UsedValues:
    """Run-level memory of emitted values, consulted by ``unique`` constraints."""

    def __init__(self) -> None:
        self._seen: dict[str, set] = {}
        self._counter = itertools.count(1)

    def contains(self, pid: str, value: Any) -> bool:
        return C.freeze(value) in self._seen.get(pid, ())

    def add(self, pid: str, value: Any) -> None:
        self._seen.setdefault(pid, set()).add(C.freeze(value))

    def fresh_index(self) -> int:
        return next(self._counter)

    def as_sets(self) -> dict[str, set]:
        return self._seen


# -- gathering ---------------------------------------------------------------


def gather_data_constraints(scenario: ParameterScenario | Iterable[str], op: Operation) -> list:
    """Data constraints that apply to this selection of parameters."""
    selected = frozenset(scenario.selected if isinstance(scenario, ParameterScenario) else scenario)
    out: list = []

    def add(c) -> None:
        if c not in out:
            out.append(c)

    for c in op.local_constraints:
        if isinstance(c, C.DATA_TYPES):
            if all(p in selected for p in c.param_ids()):
                add(c)
        elif isinstance(c, C.ParameterInfluencedDataValues):
            if c.antecedent.holds(selected) and all(p in selected for p in c.consequent.param_ids()):
                add(c.consequent)
        elif isinstance(c, C.DataInfluencedParamSelection):
            if not all(p in selected for p in c.antecedent.param_ids()):
                continue
            if c.consequent.holds(selected):
                add(c.antecedent)
            else:
                # the selection breaks the rule, so the data must avoid its trigger
                add(c.antecedent.negated())
    return out


# -- provider ----------------------------------------------------------------


class ValueProvider(Protocol):
    def value(self, p: InputParameter, rng: random.Random, index: int) -> Any: ...


_FIRST = ["alice", "bruno", "chen", "dara", "emeka", "farah", "goran", "hana", "ivan", "jun"]
_LAST = ["smith", "garcia", "kumar", "okafor", "novak", "tanaka", "silva", "murphy"]
_CITIES = ["Pune", "Lisbon", "Osaka", "Nairobi", "Austin", "Krakow", "Recife", "Leeds"]
_COUNTRIES = ["IN", "PT", "JP", "KE", "US", "PL", "BR", "GB"]
_WORDS = ["alpha", "river", "maple", "quartz", "ember", "harbor", "lumen", "cobalt", "tundra", "willow"]
_DOMAINS = ["example.com", "example.org", "mail.test"]


class DefaultProvider:
    """Deterministic realistic-looking values keyed on name, type and format."""

    def __init__(self, schemas: Optional[dict[str, Schema]] = None) -> None:
        self.schemas = schemas or {}

    def value(self, p: InputParameter, rng: random.Random, index: int = 0) -> Any:
        return self._value(p.pname.rsplit(".", 1)[-1], p.ptype, p.pc, rng, index, depth=0)

    def _value(self, name: str, ptype: str, pc: dict, rng: random.Random, index: int, depth: int) -> Any:
        if pc.get("enum"):
            return rng.choice(list(pc["enum"]))
        if "default" in pc and rng.random() < 0.25:
            return pc["default"]
        fmt = (pc.get("format") or "").lower()
        lname = name.lower()
        if ptype == "boolean":
            return rng.choice([True, False])
        if ptype == "integer":
            return rng.randint(*self._bounds(pc, integer=True))
        if ptype == "number":
            lo, hi = self._bounds(pc, integer=False)
            return round(rng.uniform(lo, hi), 2)
        if ptype == "array":
            items = pc.get("items") or {}
            itype = items.get("type", "string")
            ipc = {k: v for k, v in items.items() if k not in ("type", "ref")}
            if items.get("ref") and depth < 3:
                return [self._object(items["ref"], rng, index, depth + 1)]
            n = max(1, int(pc.get("minItems", 1)))
            singular_name = lname[:-1] if lname.endswith("s") else lname
            return [self._value(singular_name, itype, ipc, rng, index, depth + 1) for _ in range(n)]
        if ptype == "object":
            ref = pc.get("ref")
            return self._object(ref, rng, index, depth + 1) if ref and depth < 3 else {}
        if ptype == "file":
            return f"{rng.choice(_WORDS)} {index}\n"
        return self._string(lname, fmt, pc, rng, index)

    def _object(self, ref: Optional[str], rng: random.Random, index: int, depth: int) -> dict:
        schema = self.schemas.get(ref or "")
        if schema is None:
            return {}
        out = {}
        for f in schema.fields:
            fpc = dict(f.fieldconstraint)
            if f.ref:
                fpc.setdefault("ref", f.ref)
            out[f.fname] = self._value(f.fname, f.ftype, fpc, rng, index, depth)
        return out

    @staticmethod
    def _bounds(pc: dict, integer: bool) -> tuple:
        lo, hi = INT_RANGE
        if "minimum" in pc:
            lo = pc["minimum"] + (1 if integer and pc.get("exclusiveMinimum") is True else 0)
        if "maximum" in pc:
            hi = pc["maximum"] - (1 if integer and pc.get("exclusiveMaximum") is True else 0)
        if isinstance(pc.get("exclusiveMinimum"), (int, float)) and not isinstance(pc.get("exclusiveMinimum"), bool):
            lo = pc["exclusiveMinimum"] + (1 if integer else 0.01)
        if isinstance(pc.get("exclusiveMaximum"), (int, float)) and not isinstance(pc.get("exclusiveMaximum"), bool):
            hi = pc["exclusiveMaximum"] - (1 if integer else 0.01)
        if hi < lo:
            hi = lo
        return (int(lo), int(hi)) if integer else (float(lo), float(hi))

    def _string(self, lname: str, fmt: str, pc: dict, rng: random.Random, index: int) -> str:
        tag = f"{rng.randint(10, 9999)}"
        if fmt == "email" or "email" in lname:
            val = f"{rng.choice(_FIRST)}.{rng.choice(_LAST)}{tag}@{rng.choice(_DOMAINS)}"
        elif fmt in ("uri", "url") or lname.endswith(("url", "uri", "link", "website")):
            val = f"https://{rng.choice(_DOMAINS)}/{rng.choice(_WORDS)}/{tag}"
        elif fmt == "uuid" or lname.endswith("uuid"):
            val = str(uuid.UUID(int=rng.getrandbits(128), version=4))
        elif fmt == "date-time" or lname.endswith(("timestamp", "time", "at")) and fmt != "date":
            val = (_BASE_TIME + timedelta(minutes=rng.randint(0, 60 * 24 * 365))).isoformat().replace("+00:00", "Z")
        elif fmt == "date" or lname.endswith("date") or lname in ("dob", "birthday"):
            val = (_BASE_TIME.date() + timedelta(days=rng.randint(0, 365))).isoformat()
        elif fmt == "ipv4" or lname in ("ip", "ipaddress", "ip_address"):
            val = ".".join(str(rng.randint(1, 254)) for _ in range(4))
        elif fmt == "ipv6":
            val = ":".join(f"{rng.randint(0, 0xFFFF):x}" for _ in range(8))
        elif fmt == "password" or "password" in lname:
            val = "".join(rng.choice(string.ascii_letters + string.digits) for _ in range(10)) + "!a1"
        elif "phone" in lname:
            val = "+1" + "".join(rng.choice(string.digits) for _ in range(10))
        elif lname in ("city", "town"):
            val = rng.choice(_CITIES)
        elif "country" in lname:
            val = rng.choice(_COUNTRIES)
        elif lname.endswith(("zip", "zipcode", "pincode", "postcode", "postalcode")):
            val = "".join(rng.choice(string.digits) for _ in range(6))
        elif lname in ("firstname", "first_name", "name", "username", "user", "owner", "author"):
            val = rng.choice(_FIRST) + (tag if lname == "username" else "")
        elif lname in ("lastname", "last_name", "surname"):
            val = rng.choice(_LAST)
        else:
            val = f"{rng.choice(_WORDS)}{tag}"
        lo = int(pc.get("minLength", 0) or 0)
        hi = pc.get("maxLength")
        if len(val) < lo:
            val = val + "x" * (lo - len(val))
        if hi is not None and len(val) > int(hi):
            val = val[: int(hi)]
        return val


# -- validation --------------------------------------------------------------


def _pc_ok(p: InputParameter, value: Any) -> bool:
    pc = p.pc
    if pc.get("enum") and value not in pc["enum"]:
        return False
    if p.ptype in ("integer", "number") and isinstance(value, (int, float)) and not isinstance(value, bool):
        if "minimum" in pc and value < pc["minimum"]:
            return False
        if "maximum" in pc and value > pc["maximum"]:
            return False
    if isinstance(value, str):
        if pc.get("format") and not matches_format(value, pc["format"]):
            return False
        if pc.get("pattern"):
            try:
                if not re.search(pc["pattern"], value):
                    return False
            except re.error:
                pass
    return True


def violations(assignment: dict[str, Any], constraints: Sequence, used: Optional[UsedValues] = None) -> list:
    """Constraints the assignment fails (independent of how it was produced)."""
    bad = []
    for c in constraints:
        if not all(pid in assignment for pid in c.param_ids()):
            continue
        if isinstance(c, C.DataNonArithmetic) and c.property == "unique":
            if used is not None and used.contains(c.param, assignment[c.param]):
                bad.append(c)
            continue
        try:
            ok = c.satisfied(assignment)
        except (ValueError, TypeError):
            ok = False
        if not ok:
            bad.append(c)
    return bad


# -- solver ------------------------------------------------------------------


def _shift(value: Any, delta: int) -> Any:
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return value + delta
    if isinstance(value, float):
        return round(value + delta, 6)
    if isinstance(value, str):
        try:
            dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError:
            try:
                return str(int(value) + delta)
            except ValueError:
                return None
        if "T" not in value:
            return (dt.date() + timedelta(days=delta)).isoformat()
        out = (dt + timedelta(hours=delta)).isoformat()
        return out.replace("+00:00", "Z") if value.endswith("Z") else out
    return None


def _as_typed(value: Any, p: Optional[InputParameter]) -> Any:
    if p is None or isinstance(value, bool):
        return value
    if p.ptype == "integer" and isinstance(value, float) and value.is_integer():
        return int(value)
    if p.ptype in ("integer", "number") and isinstance(value, str):
        try:
            return int(value) if p.ptype == "integer" else float(value)
        except ValueError:
            return value
    if p.ptype == "string" and isinstance(value, (int, float)) and not isinstance(value, bool):
        return str(value)
    return value


def solve_assignment(
    start: dict[str, Any],
    constraints: Sequence,
    params: dict[str, InputParameter],
    fresh: Optional[callable] = None,
    used: Optional[UsedValues] = None,
) -> Optional[dict[str, Any]]:
    """Smallest-change assignment satisfying ``constraints``, or None.

    Each constrained parameter gets a finite candidate domain (its current
    value first, then values derived from the constraints); a backtracking
    search picks the first consistent combination.
    """
    involved: list[str] = []
    for c in constraints:
        for pid in c.param_ids():
            if pid in start and pid not in involved:
                involved.append(pid)
    domains: dict[str, list] = {pid: [start[pid]] for pid in involved}

    def push(pid: str, v: Any) -> None:
        if pid in domains and v is not None:
            v = _as_typed(v, params.get(pid))
            if all(not (type(v) is type(x) and v == x) for x in domains[pid]):
                domains[pid].append(v)

    for c in constraints:
        if isinstance(c, C.DataNonArithmetic):
            if c.property == "categorical":
                for v in c.values:
                    push(c.param, v)
            elif fresh is not None:
                for _ in range(4):
                    push(c.param, fresh(c.param))
        elif isinstance(c, C.DataArithmetic) and not c.rhs_is_param:
            consts = c.rhs if isinstance(c.rhs, tuple) else (c.rhs,)
            for v in consts:
                for d in (0, 1, -1, 10, -10):
                    push(c.lhs, _shift(v, d) if d else v)
            if c.relop == "!=" and fresh is not None:
                for _ in range(4):
                    push(c.lhs, fresh(c.lhs))
    for pid in involved:
        p = params.get(pid)
        for v in (p.pc.get("enum") or ()) if p is not None else ():
            push(pid, v)
    for _ in range(2):
        for c in constraints:
            if isinstance(c, C.DataArithmetic) and c.rhs_is_param:
                for v in list(domains.get(c.rhs, ())):
                    for d in (0, 1, -1, 10, -10):
                        push(c.lhs, _shift(v, d) if d else v)
                for v in list(domains.get(c.lhs, ())):
                    for d in (0, 1, -1, 10, -10):
                        push(c.rhs, _shift(v, d) if d else v)
    for pid in involved:
        p = params.get(pid)
        if p is not None:
            domains[pid] = [v for v in domains[pid] if _pc_ok(p, v)] or domains[pid]

    assign = dict(start)
    relevant = {pid: [c for c in constraints if pid in c.param_ids()] for pid in involved}

    def ok_so_far(pid: str, done: set[str]) -> bool:
        for c in relevant[pid]:
            if all(q in done or q not in involved for q in c.param_ids()):
                if violations(assign, [c], used):
                    return False
        return True

    def rec(i: int, done: set[str]) -> bool:
        if i == len(involved):
            return True
        pid = involved[i]
        for v in domains[pid][:64]:
            assign[pid] = v
            done.add(pid)
            if ok_so_far(pid, done) and rec(i + 1, done):
                return True
            done.discard(pid)
        assign[pid] = start[pid]
        return False

    if rec(0, set()):
        return assign
    return None


# -- generation --------------------------------------------------------------


def _rng(seed: int, *parts: Any) -> random.Random:
    return random.Random(":".join(str(p) for p in (seed,) + parts))


def generate_data(
    scenario: ParameterScenario,
    constraints: Sequence,
    k: int = DEFAULT_K,
    op: Optional[Operation] = None,
    *,
    seed: int = 0,
    provider: Optional[ValueProvider] = None,
    used: Optional[UsedValues] = None,
    use_examples: bool = True,
    generation: int = 0,
    masked: Iterable[str] = (),
) -> list[DataScenario]:
    """Up to ``k`` distinct, validated assignments for ``scenario``.

    ``masked`` names parameters whose values are replaced at run time
    (dependency injection); assignments differing only there are merged.
    ``generation`` shifts the random streams so regenerated data differs.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    provider = provider or DefaultProvider()
    used = used if used is not None else UsedValues()
    params = {p.id: p for p in (op.live_inputs if op else [])}
    selected = sorted(scenario.selected)
    masked = set(masked)
    out: list[DataScenario] = []
    seen: set = set()
    for i in range(k):
        assignment: dict[str, Any] = {}
        prov: dict[str, str] = {}
        for pid in selected:
            p = params.get(pid)
            if p is None:
                assignment[pid], prov[pid] = f"value{i}", RANDOM
                continue
            if use_examples and i < len(p.examples) and _pc_ok(p, p.examples[i]):
                assignment[pid], prov[pid] = p.examples[i], SPEC_EXAMPLE
                continue
            rng = _rng(seed, scenario.target_op, pid, i, generation)
            assignment[pid], prov[pid] = provider.value(p, rng, i), PROVIDER

        def fresh(pid: str, _i=i) -> Any:
            n = used.fresh_index()
            p = params.get(pid)
            rng = _rng(seed, scenario.target_op, pid, "fresh", n, generation)
            return provider.value(p, rng, n) if p is not None else f"value{n}"

        bad = violations(assignment, constraints, used)
        if bad:
            solved = solve_assignment(assignment, constraints, params, fresh=fresh, used=used)
            if solved is None:
                raise UnsatisfiableData(scenario.target_op, f"no values satisfy {[C.describe(c) for c in bad]}")
            for pid, v in solved.items():
                if v is not assignment.get(pid) and v != assignment.get(pid):
                    prov[pid] = SOLVER
            assignment = solved
        key = tuple((pid, C.freeze(v)) for pid, v in sorted(assignment.items()) if pid not in masked)
        if key in seen:
            continue
        seen.add(key)
        for pid, v in assignment.items():
            used.add(pid, v)
        out.append(DataScenario(scenario.target_op, assignment, prov))
    return out
