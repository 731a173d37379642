"""Turn a failure record into an action on the specification model."""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from resprefine import constraints as C
from resprefine.analyzer import entities as E
from resprefine.analyzer.backend import RuleBased
from resprefine.constraints import ConstraintCategory as Cat
from resprefine.errors import BackendUnavailable, RefineError
from resprefine.failures import FailureRecord
from resprefine.model import InputParameter, Operation, SpecModel

log = logging.getLogger(__name__)


class Action(str, enum.Enum):
    ADD_CONSTRAINT = "AddConstraint"
    REMOVE_OPERATION = "RemoveOperation"
    REMOVE_PARAMETER = "RemoveParameter"
    REQUEST_USER_INPUT = "RequestUserInput"
    REPORT_DEFECT = "ReportDefect"
    IGNORE = "Ignore"
    # blank non-404 client errors: no constraint, fresh data next round
    REGENERATE_DATA = "RegenerateData"


@dataclass
class AnalyzerVerdict:
    category: Cat
    constraint: Any = None
    action: Action = Action.IGNORE
    target: Optional[str] = None
    note: str = ""
    failure: Optional[FailureRecord] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "category": self.category.name,
            "action": self.action.value,
            "constraint": C.to_dict(self.constraint) if self.constraint is not None else None,
            "target": self.target,
            "note": self.note,
        }


_ACTION_BY_CATEGORY = {
    Cat.CONFIGURATION_AUTHENTICATION: Action.REQUEST_USER_INPUT,
    Cat.UNSUPPORTED_OPERATION: Action.REMOVE_OPERATION,
    Cat.PARAMETER_UNKNOWN: Action.REMOVE_PARAMETER,
    Cat.UNHANDLED: Action.REPORT_DEFECT,
}


def _unhandled(note: str, f: Optional[FailureRecord] = None) -> AnalyzerVerdict:
    return AnalyzerVerdict(Cat.UNHANDLED, None, Action.REPORT_DEFECT, note=note, failure=f)


def _sent(f: FailureRecord) -> set[str]:
    return set((f.request_snapshot or {}).get("params", {}) or ())


class Analyzer:
    """Backend chain plus the per-category verdict builders."""

    def __init__(self, backends: Sequence[Any] = ()) -> None:
        self.rules = RuleBased()
        self.extra = [b for b in backends if not isinstance(b, RuleBased)]

    # -- classification -----------------------------------------------------

    def classify_failure(self, f: FailureRecord, op: Optional[Operation] = None) -> Cat:
        try:
            cat = self.rules.classify(f.message, f.status)
        except Exception:  # the rules must never take the run down
            log.exception("rule classification crashed on %r", f.message)
            cat = Cat.UNHANDLED
        if cat is not Cat.UNHANDLED or f.status == 0 or not f.message.strip():
            return cat
        ctx = {"operation": op.opname if op else f.op_id}
        for backend in self.extra:
            try:
                got = backend.classify(f.message, f.status, ctx)
            except BackendUnavailable as exc:
                log.warning("backend %s unavailable: %s", backend.name, exc)
                continue
            if got is not None:
                return got
        return cat

    def _targets(self, message: str, candidates: Sequence[InputParameter]) -> list[str]:
        try:
            return E.identify_target_parameters(message, candidates)
        except RefineError:
            pass
        for backend in self.extra:
            try:
                ids = backend.extract_entities(message, candidates)
            except BackendUnavailable:
                continue
            if ids:
                return ids
        return []

    # -- verdicts -----------------------------------------------------------

    def analyze(self, f: FailureRecord, model: SpecModel) -> AnalyzerVerdict:
        op = model.operations.get(f.op_id)
        if op is None:
            return _unhandled(f"operation {f.op_id} no longer in model", f)
        if f.status == 0:
            return AnalyzerVerdict(Cat.UNHANDLED, None, Action.REPORT_DEFECT, note="timeout or transport error", failure=f)
        if f.is_blank and 400 <= f.status < 500 and f.status not in (401, 403, 405):
            return self.handle_blank_response(f, op, model)
        cat = self.classify_failure(f, op)
        try:
            verdict = self._build(cat, f, op, model)
        except RefineError as exc:
            log.info("downgrading %s on %s to Unhandled: %s", cat.name, f.op_id, exc)
            return _unhandled(f"{cat.name}: {exc}", f)
        if verdict.constraint is not None:
            try:
                model.check_resolvable(verdict.constraint)
            except RefineError as exc:
                return _unhandled(f"unresolvable {verdict.constraint.kind}: {exc}", f)
        verdict.failure = f
        return verdict

    def _build(self, cat: Cat, f: FailureRecord, op: Operation, model: SpecModel) -> AnalyzerVerdict:
        if cat in _ACTION_BY_CATEGORY and cat is not Cat.PARAMETER_UNKNOWN:
            target = op.opname if cat is not Cat.UNHANDLED else None
            return AnalyzerVerdict(cat, None, _ACTION_BY_CATEGORY[cat], target=target)
        msg = f.message
        live = op.live_inputs
        if cat is Cat.PARAMETER_UNKNOWN:
            ids = self._targets(_after_colon(msg), live) or self._targets(msg, live)
            if not ids:
                raise E.NoTargetFound(msg)
            return AnalyzerVerdict(cat, None, Action.REMOVE_PARAMETER, target=ids[0])
        if cat is Cat.PRODUCER_CONSUMER:
            return AnalyzerVerdict(cat, self._producer_consumer(f, op, model), Action.ADD_CONSTRAINT)
        if cat is Cat.ADDITIONAL_MANDATORY:
            sent = _sent(f)
            pool = [p for p in live if p.id not in sent] or live
            ids = self._targets(msg, pool)
            if not ids:
                raise E.NoTargetFound(msg)
            return AnalyzerVerdict(cat, C.AdditionalMandatory(ids[0]), Action.ADD_CONSTRAINT)
        if cat in (Cat.OR, Cat.ONE, Cat.ALL_OR_NONE):
            ids = self._targets(msg, live)
            if len(ids) < 2:
                raise E.NoTargetFound(f"group constraint needs two parameters: {msg}")
            cls = {Cat.OR: C.Or, Cat.ONE: C.One, Cat.ALL_OR_NONE: C.AllOrNone}[cat]
            return AnalyzerVerdict(cat, cls(tuple(ids)), Action.ADD_CONSTRAINT)
        if cat in (Cat.DATA_ARITHMETIC, Cat.DATA_NON_ARITHMETIC):
            sent = _sent(f)
            pool = [p for p in live if p.id in sent] or live
            ids = self._targets(msg, pool) or (self._targets(msg, live) if pool is not live else [])
            if not ids:
                raise E.NoTargetFound(msg)
            c = self._relation(msg, ids, live)
            return AnalyzerVerdict(_category_of(c), c, Action.ADD_CONSTRAINT)
        if cat in (
            Cat.CONDITIONAL_PARAMETER_REQUIRED,
            Cat.DATA_INFLUENCED_PARAM_SELECTION,
            Cat.PARAMETER_INFLUENCED_DATA_VALUES,
        ):
            c = E.split_nested_constraint(msg, op)
            if c.category is None:
                raise E.NoConditionalMarker(msg)
            return AnalyzerVerdict(_category_of(c), c, Action.ADD_CONSTRAINT)
        return _unhandled(f"no builder for {cat.name}")

    def _relation(self, msg: str, ids: list[str], live: list[InputParameter]):
        try:
            return E.extract_relational_constraint(msg, ids, live)
        except RefineError:
            for backend in self.extra:
                try:
                    c = backend.extract_relation(msg, ids, live)
                except BackendUnavailable:
                    continue
                if c is not None:
                    return c
            raise

    def _producer_consumer(self, f: FailureRecord, op: Operation, model: SpecModel) -> C.ProducerConsumer:
        try:
            return E.infer_producer_consumer(f.message, op, model)
        except RefineError:
            ctx = {"consumer": op.opname, "operations": sorted(model.operations)}
            for backend in self.extra:
                try:
                    pair = backend.producer_consumer(f.message, ctx)
                except BackendUnavailable:
                    continue
                if pair is not None:
                    return pair
            raise

    def handle_blank_response(self, f: FailureRecord, op: Operation, model: Optional[SpecModel] = None) -> AnalyzerVerdict:
        """Status-only heuristics for 4xx replies without a message."""
        if f.status == 404 and any(E.is_identifier_like(p) for p in op.live_inputs):
            if model is None:
                return AnalyzerVerdict(Cat.PRODUCER_CONSUMER, None, Action.ADD_CONSTRAINT, failure=f)
            try:
                pc = E.infer_producer_consumer("", op, model)
            except RefineError as exc:
                return _unhandled(f"blank 404: {exc}", f)
            return AnalyzerVerdict(Cat.PRODUCER_CONSUMER, pc, Action.ADD_CONSTRAINT, failure=f)
        return AnalyzerVerdict(
            Cat.DATA_NON_ARITHMETIC, None, Action.REGENERATE_DATA, target=op.opname, note="blank response", failure=f
        )


def _category_of(c: Any) -> Cat:
    return c.category if c.category is not None else Cat.UNHANDLED


def _after_colon(message: str) -> str:
    m = re.search(r":\s*(.+)$", message)
    return m.group(1) if m else message


def apply_verdict(model: SpecModel, verdict: AnalyzerVerdict) -> bool:
    """Apply to the model; returns True when the model changed."""
    a = verdict.action
    if a is Action.ADD_CONSTRAINT and verdict.constraint is not None:
        return model.add_constraint(verdict.constraint)
    if a is Action.REMOVE_OPERATION and verdict.target in model.operations:
        model.remove_operation(verdict.target)
        return True
    if a is Action.REMOVE_PARAMETER and verdict.target and model.is_live_input(verdict.target):
        model.remove_parameter(verdict.target)
        return True
    if a is Action.REQUEST_USER_INPUT and verdict.target and verdict.target not in model.needs_user_input:
        model.needs_user_input.add(verdict.target)
        return True
    if a is Action.REGENERATE_DATA and verdict.target:
        model.regenerate[verdict.target] = model.regenerate.get(verdict.target, 0) + 1
        return True
    return False
