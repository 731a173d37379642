"""Test cases, request construction and execution against a live service."""

from __future__ import annotations

import json
import logging
import re
import socket
import time
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence, Union
from urllib.parse import quote, urlsplit

import httpx

from resprefine import constraints as C
from resprefine.errors import ConnectivityError, MissingPathValue, PathNotInResponse
from resprefine.failures import FailureRecord
from resprefine.model import Loc, Operation, SpecModel
from resprefine.scenarios.data import DataScenario
from resprefine.scenarios.selection import ParameterScenario
from resprefine.scenarios.sequences import SequenceScenario

log = logging.getLogger(__name__)

MAX_BODY = 64 * 1024
DEFAULT_TIMEOUT = 10.0


# -- test cases --------------------------------------------------------------


@dataclass(frozen=True)
class StatusInRange:
    op_id: str
    low: int = 200
    high: int = 399

    def check(self, status: int, body: Any) -> bool:
        return self.low <= status <= self.high


@dataclass(frozen=True)
class FieldPresent:
    op_id: str
    path: str

    def check(self, status: int, body: Any) -> bool:
        try:
            lookup(body, self.path)
        except PathNotInResponse:
            return False
        return True


ResponseCheck = Union[StatusInRange, FieldPresent]


@dataclass
class TestCase:
    seq: SequenceScenario
    params: dict[str, ParameterScenario]
    data: dict[str, DataScenario]
    checks: list[ResponseCheck]
    deps: list[C.ProducerConsumer]

    __test__ = False  # not a pytest class

    @property
    def target(self) -> str:
        return self.seq.target_op


def generate_tests(
    model: SpecModel,
    deps: Sequence[C.ProducerConsumer],
    sequences: Sequence[SequenceScenario],
    param_scenarios: dict[str, list[ParameterScenario]],
    data_scenarios: dict[str, list[list[DataScenario]]],
    prerequisites: dict[str, tuple[ParameterScenario, DataScenario]],
) -> tuple[list[TestCase], list[str]]:
    """Sequence x parameter scenarios x data scenarios, per target operation.

    ``data_scenarios[op][i]`` holds the data for ``param_scenarios[op][i]``;
    prerequisites always run with their single all-mandatory scenario.
    """
    tests: list[TestCase] = []
    warnings: list[str] = []
    for seq in sequences:
        target = seq.target_op
        scenarios = param_scenarios.get(target, [])
        if not scenarios:
            warnings.append(f"{target}: no parameter scenario; no tests generated")
            continue
        missing = [op for op in seq.ops[:-1] if op not in prerequisites]
        if missing:
            warnings.append(f"{target}: prerequisites {missing} have no scenario; no tests generated")
            continue
        for i, ps in enumerate(scenarios):
            for ds in data_scenarios.get(target, [[]] * len(scenarios))[i]:
                params = {op: prerequisites[op][0] for op in seq.ops[:-1]}
                data = {op: prerequisites[op][1] for op in seq.ops[:-1]}
                params[target] = ps
                data[target] = ds
                checks: list[ResponseCheck] = [StatusInRange(op) for op in seq.ops]
                tests.append(TestCase(seq, params, data, checks, list(seq.deps)))
    return tests, warnings


# -- request construction ----------------------------------------------------


@dataclass
class RunState:
    """Values injected from producer responses; lives for one test case."""

    bindings: dict[str, Any] = field(default_factory=dict)
    # producer op -> (response json, sent values)
    observed: dict[str, tuple[Any, dict]] = field(default_factory=dict)

    def clear(self) -> None:
        self.bindings.clear()
        self.observed.clear()


@dataclass
class RequestPlan:
    method: str
    path: str
    query: list[tuple[str, str]] = field(default_factory=list)
    headers: dict[str, str] = field(default_factory=dict)
    json_body: Any = None
    has_json: bool = False
    form: dict[str, Any] = field(default_factory=dict)
    files: dict[str, Any] = field(default_factory=dict)
    values: dict[str, Any] = field(default_factory=dict)
    injected: dict[str, Any] = field(default_factory=dict)

    def snapshot(self) -> dict:
        return {
            "method": self.method,
            "path": self.path,
            "params": {k: _jsonable(v) for k, v in self.values.items()},
            "injected": sorted(self.injected),
        }


def _jsonable(v: Any) -> Any:
    try:
        json.dumps(v)
        return v
    except TypeError:
        return str(v)


def _scalar(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (dict, list)):
        return json.dumps(v)
    return str(v)


def nest(flat: dict[str, Any]) -> dict:
    """``{"a.b": 1}`` -> ``{"a": {"b": 1}}``."""
    out: dict = {}
    for path in sorted(flat):
        cur = out
        segs = path.split(".")
        for s in segs[:-1]:
            nxt = cur.get(s)
            if not isinstance(nxt, dict):
                nxt = cur[s] = {}
            cur = nxt
        cur[segs[-1]] = flat[path]
    return out


def build_request(op: Operation, scenario: ParameterScenario, data: DataScenario, state: Optional[RunState] = None) -> RequestPlan:
    values = {pid: data.assignment[pid] for pid in sorted(scenario.selected) if pid in data.assignment}
    injected = {}
    if state is not None:
        for pid, v in state.bindings.items():
            if pid in scenario.selected or op.input(pid) is not None:
                values[pid] = v
                injected[pid] = v
    plan = RequestPlan(op.method, op.path, values=values, injected=injected)
    body: dict[str, Any] = {}
    whole = None
    path = op.path
    for pid, value in values.items():
        p = op.input(pid)
        if p is None or p.deleted:
            continue
        if p.loc is Loc.PATH:
            path = path.replace("{" + p.pname + "}", quote(_scalar(value), safe=""))
        elif p.loc is Loc.QUERY:
            items = value if isinstance(value, list) else [value]
            plan.query.extend((p.pname, _scalar(v)) for v in items)
        elif p.loc is Loc.HEADER:
            plan.headers[p.pname] = _scalar(value)
        elif p.loc is Loc.FORMDATA:
            if p.ptype == "file" or "multipart" in op.media_type:
                if p.ptype == "file":
                    plan.files[p.pname] = (f"{p.pname}.txt", str(value).encode(), "text/plain")
                else:
                    plan.form[p.pname] = _scalar(value)
            else:
                plan.form[p.pname] = _scalar(value)
        else:
            if p.pc.get("whole_body"):
                whole = value
            else:
                body[p.pname] = value
    missing = [seg for seg in _placeholders(path)]
    if missing:
        raise MissingPathValue(f"{op.opname}: unresolved path parameters {missing}")
    plan.path = path
    if whole is not None:
        plan.json_body, plan.has_json = whole, True
    elif body:
        plan.json_body, plan.has_json = nest(body), True
    return plan


def _placeholders(path: str) -> list[str]:
    return re.findall(r"\{([^}]+)\}", path)


def lookup(doc: Any, path: str) -> Any:
    """Dotted descent; arrays contribute their first element."""
    cur = doc
    for seg in [s for s in path.split(".") if s]:
        while isinstance(cur, list):
            if not cur:
                raise PathNotInResponse(path)
            cur = cur[0]
        if not isinstance(cur, dict) or seg not in cur:
            raise PathNotInResponse(path)
        cur = cur[seg]
    return cur


def producer_path(dep: C.ProducerConsumer) -> tuple[str, str]:
    """('output', 'a.b') for ``op.200.a.b``; ('input', pid) for an input id."""
    parts = dep.producer_param.split(".")
    if len(parts) >= 3 and parts[0] == dep.producer_op and (parts[1][:1].isdigit() or parts[1] in ("default", "2xx")):
        return "output", ".".join(parts[2:])
    return "input", dep.producer_param


def inject_dependencies(
    producer_op: str,
    response: Any,
    deps: Iterable[C.ProducerConsumer],
    state: RunState,
    sent: Optional[dict[str, Any]] = None,
) -> list[str]:
    """Bind consumer parameters from ``producer_op``'s response; returns misses."""
    state.observed[producer_op] = (response, dict(sent or {}))
    misses = []
    for dep in deps:
        if dep.producer_op != producer_op:
            continue
        kind, where = producer_path(dep)
        try:
            if kind == "output":
                value = lookup(response, where)
            elif sent and where in sent:
                value = sent[where]
            else:
                raise PathNotInResponse(where)
        except PathNotInResponse:
            misses.append(dep.producer_param)
            log.info("dependency %s unfulfilled: %s not found", C.describe(dep), where)
            continue
        if isinstance(value, list) and value:
            value = value[0]
        state.bindings[dep.consumer_param] = value
    return misses


# -- execution ---------------------------------------------------------------


@dataclass
class RequestRecord:
    iteration: int
    test_index: int
    op_id: str
    method: str
    url: str
    status: int
    latency_ms: float
    body: str
    checks: list[bool]
    request: dict

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ExecutionReport:
    iteration: int
    records: list[RequestRecord] = field(default_factory=list)
    planned: int = 0
    skipped: int = 0
    aborted_tests: int = 0
    generator_defects: list[str] = field(default_factory=list)
    injection_misses: list[str] = field(default_factory=list)
    tests: int = 0

    @property
    def issued(self) -> int:
        return len(self.records)

    def counts(self) -> dict[str, int]:
        out = {"2xx": 0, "3xx": 0, "4xx": 0, "5xx": 0, "other": 0}
        for r in self.records:
            cls = f"{r.status // 100}xx"
            out[cls if cls in out else "other"] += 1
        return out

    def summary(self) -> dict:
        return {
            "iteration": self.iteration,
            "tests": self.tests,
            "planned": self.planned,
            "issued": self.issued,
            "skipped": self.skipped,
            "aborted_tests": self.aborted_tests,
            "counts": self.counts(),
            "generator_defects": list(self.generator_defects),
            "injection_misses": list(self.injection_misses),
        }


class Executor:
    """Runs test cases in order; the hit budget spans all calls."""

    def __init__(
        self,
        model: SpecModel,
        base_url: str,
        headers: Optional[dict[str, str]] = None,
        timeout: float = DEFAULT_TIMEOUT,
        hit_budget: Optional[int] = None,
        client: Optional[httpx.Client] = None,
        max_body: int = MAX_BODY,
        probe: bool = True,
    ) -> None:
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.headers = dict(headers or {})
        self.timeout = timeout
        self.hit_budget = hit_budget
        self.max_body = max_body
        self.issued = 0
        self._client = client or httpx.Client(timeout=timeout, follow_redirects=False)
        self._probed = not probe

    @property
    def budget_left(self) -> Optional[int]:
        return None if self.hit_budget is None else max(0, self.hit_budget - self.issued)

    @property
    def exhausted(self) -> bool:
        return self.hit_budget is not None and self.issued >= self.hit_budget

    def probe(self) -> None:
        if self._probed:
            return
        parts = urlsplit(self.base_url)
        port = parts.port or (443 if parts.scheme == "https" else 80)
        try:
            with socket.create_connection((parts.hostname, port), timeout=min(self.timeout, 5.0)):
                pass
        except OSError as exc:
            raise ConnectivityError(f"cannot reach {self.base_url}: {exc}") from exc
        self._probed = True

    def close(self) -> None:
        self._client.close()

    def _send(self, plan: RequestPlan) -> tuple[int, str, Any, float]:
        headers = {**self.headers, **plan.headers}
        kwargs: dict[str, Any] = {"params": plan.query or None, "headers": headers}
        if plan.files:
            kwargs["files"] = plan.files
            kwargs["data"] = plan.form or None
        elif plan.form:
            kwargs["data"] = plan.form
        elif plan.has_json:
            kwargs["content"] = json.dumps(plan.json_body).encode()
            headers.setdefault("Content-Type", "application/json")
        url = self.base_url + plan.path
        start = time.perf_counter()
        try:
            resp = self._client.request(plan.method, url, timeout=self.timeout, **kwargs)
        except httpx.TimeoutException:
            return 0, "request timed out", None, (time.perf_counter() - start) * 1000
        except httpx.TransportError as exc:
            return 0, f"transport error: {exc}", None, (time.perf_counter() - start) * 1000
        latency = (time.perf_counter() - start) * 1000
        text = resp.text
        parsed = None
        if "json" in resp.headers.get("content-type", "") or text[:1] in "{[":
            try:
                parsed = resp.json()
            except ValueError:
                parsed = None
        return resp.status_code, text, parsed, latency

    def execute_tests(
        self, testcases: Sequence[TestCase], iteration: int = 1
    ) -> tuple[ExecutionReport, dict[tuple, FailureRecord]]:
        self.probe()
        report = ExecutionReport(iteration, tests=len(testcases))
        report.planned = sum(len(t.seq.ops) for t in testcases)
        failures: dict[tuple, FailureRecord] = {}
        state = RunState()
        for ti, test in enumerate(testcases):
            state.clear()
            for pos, opname in enumerate(test.seq.ops):
                if self.exhausted:
                    report.skipped += len(test.seq.ops) - pos
                    report.skipped += sum(len(t.seq.ops) for t in testcases[ti + 1 :])
                    return report, failures
                op = self.model.operations[opname]
                try:
                    plan = build_request(op, test.params[opname], test.data[opname], state)
                except MissingPathValue as exc:
                    report.generator_defects.append(str(exc))
                    report.aborted_tests += 1
                    break
                status, text, parsed, latency = self._send(plan)
                self.issued += 1
                checks = [c.check(status, parsed) for c in test.checks if c.op_id == opname]
                report.records.append(
                    RequestRecord(
                        iteration,
                        ti,
                        opname,
                        plan.method,
                        plan.path,
                        status,
                        round(latency, 3),
                        text[: self.max_body],
                        checks,
                        plan.snapshot(),
                    )
                )
                if status >= 400 or status == 0:
                    rec = FailureRecord.from_response(opname, status, text, plan.snapshot())
                    failures.setdefault(rec.key, rec)
                is_target = pos == len(test.seq.ops) - 1
                if not is_target:
                    if not 200 <= status <= 399:
                        report.aborted_tests += 1
                        break
                    misses = inject_dependencies(opname, parsed, test.deps, state, plan.values)
                    report.injection_misses.extend(misses)
        return report, failures
