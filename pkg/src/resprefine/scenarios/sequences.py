"""Operation sequences from learned producer-consumer dependencies."""

from __future__ import annotations

import graphlib
import logging
from dataclasses import dataclass, field
from typing import Sequence

from resprefine import constraints as C
from resprefine.model import Operation, SpecModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SequenceScenario:
    target_op: str
    ops: tuple[str, ...]
    deps: tuple[C.ProducerConsumer, ...] = ()


@dataclass
class SequencePlan:
    sequences: list[SequenceScenario]
    dropped: list[C.ProducerConsumer] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def single_resource(op: Operation) -> bool:
    shapes = [s for code, s in op.response_shapes.items() if code.startswith("2") or code == "default"]
    return "object" in shapes or "array" not in shapes


def _reaches(edges: dict[str, set[str]], src: str, dst: str) -> bool:
    stack, seen = [src], set()
    while stack:
        n = stack.pop()
        if n == dst:
            return True
        if n in seen:
            continue
        seen.add(n)
        stack.extend(edges.get(n, ()))
    return False


def plan_sequences(deps: Sequence[C.ProducerConsumer], model: SpecModel) -> SequencePlan:
    live = {op.opname: op for op in model.live_operations()}
    plan = SequencePlan([])
    usable = [d for d in deps if d.producer_op in live and d.consumer_op in live]

    # one producer per consumer parameter; prefer single-resource producers
    chosen: dict[tuple[str, str], C.ProducerConsumer] = {}
    for d in usable:
        key = (d.consumer_op, d.consumer_param)
        cur = chosen.get(key)
        if cur is None or (single_resource(live[d.producer_op]) and not single_resource(live[cur.producer_op])):
            chosen[key] = d
    picked = [d for d in usable if chosen.get((d.consumer_op, d.consumer_param)) is d]

    # insertion order is learning order: a later edge closing a cycle is dropped
    consumers_of: dict[str, set[str]] = {}
    kept: list[C.ProducerConsumer] = []
    for d in picked:
        if d.producer_op == d.consumer_op or _reaches(consumers_of, d.consumer_op, d.producer_op):
            plan.dropped.append(d)
            msg = f"dependency {C.describe(d)} closes a cycle; dropped"
            plan.warnings.append(msg)
            log.warning(msg)
            continue
        consumers_of.setdefault(d.producer_op, set()).add(d.consumer_op)
        kept.append(d)

    incoming: dict[str, list[C.ProducerConsumer]] = {}
    for d in kept:
        incoming.setdefault(d.consumer_op, []).append(d)

    for target in sorted(live):
        needed, used, stack = {target}, [], [target]
        while stack:
            n = stack.pop()
            for d in incoming.get(n, ()):
                used.append(d)
                if d.producer_op not in needed:
                    needed.add(d.producer_op)
                    stack.append(d.producer_op)
        graph = {n: set() for n in needed}
        for d in used:
            graph[d.consumer_op].add(d.producer_op)
        ts = graphlib.TopologicalSorter(graph)
        ts.prepare()
        order: list[str] = []
        while ts.is_active():
            ready = sorted(ts.get_ready())
            order.extend(ready)
            ts.done(*ready)
        ordered_deps = tuple(d for d in kept if d in used)
        plan.sequences.append(SequenceScenario(target, tuple(order), ordered_deps))
    return plan


def generate_sequences(deps: Sequence[C.ProducerConsumer], model: SpecModel) -> list[SequenceScenario]:
    """One sequence per live operation, prerequisites first."""
    return plan_sequences(deps, model).sequences
