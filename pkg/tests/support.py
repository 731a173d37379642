"""Shared helpers: running the pipeline against an in-process fixture."""

from __future__ import annotations

from functools import lru_cache

from resprefine.fixtures import FixtureSpec, get_fixture, serve_fixture
from resprefine.pipeline import PipelineConfig, PipelineResult, pipeline


def run_fixture(name: str | FixtureSpec, **overrides) -> tuple[FixtureSpec, PipelineResult]:
    spec = get_fixture(name) if isinstance(name, str) else name
    with serve_fixture(spec) as handle:
        cfg = PipelineConfig(spec.document, handle.url, **{"headers": dict(spec.headers), **overrides})
        return spec, pipeline(cfg)


@lru_cache(maxsize=None)
def cached_run(name: str) -> tuple[FixtureSpec, PipelineResult]:
    """Default-config run, shared between tests that only read the result."""
    return run_fixture(name)


def shares(result: PipelineResult, cls: str) -> list[float]:
    out = []
    for rep in result.reports:
        out.append(rep.counts.get(cls, 0) / rep.issued if rep.issued else 0.0)
    return out


# -- random selection problems and an independent oracle ----------------------

import itertools
import random

from resprefine import constraints as C
from resprefine.errors import InfeasibleMandatory
from resprefine.model import InputParameter, Loc, Operation, param_id

_CONTAINERS = ("", "", "ship", "meta")


def random_operation(rng: random.Random, max_vars: int = 12) -> tuple[Operation, tuple[str, ...]]:
    """An operation with query and nested body parameters plus random constraints."""
    n = rng.randint(1, max_vars)
    op = Operation("rnd", "/rnd", "POST")
    container_required = {c: rng.random() < 0.4 for c in _CONTAINERS if c}
    for i in range(n):
        if rng.random() < 0.5:
            p = InputParameter(f"q{i}", "string", rng.random() < 0.15, Loc.QUERY)
            p.required_chain = (p.is_required,)
        else:
            parent = rng.choice(_CONTAINERS)
            leaf_req = rng.random() < 0.4
            if parent:
                chain = (container_required[parent], leaf_req)
                name = f"{parent}.f{i}"
            else:
                chain, name = (rng.random() < 0.15,), f"f{i}"
            p = InputParameter(name, "string", all(chain), Loc.BODY, required_chain=chain)
        p.id = param_id(op.opname, p.loc, p.pname)
        op.inputs.append(p)
    ids = [p.id for p in op.inputs]

    def group(kind):
        k = rng.randint(2, min(4, len(ids)))
        return kind(tuple(rng.sample(ids, k)))

    def selection():
        kind = rng.choice(["mandatory", "or", "one", "allornone", "conditional"])
        if kind == "mandatory" or len(ids) < 2:
            return C.AdditionalMandatory(rng.choice(ids))
        if kind == "conditional":
            a, b = rng.sample(ids, 2)
            return C.ConditionalParameterRequired(a, rng.random() < 0.7, b, rng.random() < 0.7)
        return group({"or": C.Or, "one": C.One, "allornone": C.AllOrNone}[kind])

    for _ in range(rng.randint(0, 4)):
        if rng.random() < 0.25:
            trigger = rng.choice(ids)
            op.local_constraints.append(C.DataInfluencedParamSelection(C.DataArithmetic(trigger, "=", "x"), selection()))
        else:
            op.local_constraints.append(selection())
    forced = tuple(rng.sample(ids, rng.randint(0, min(1, len(ids)))))
    return op, forced


def admissible(op: Operation, forced, sel: frozenset, with_rules: frozenset) -> bool:
    """Direct reading of each constraint; ``with_rules`` picks which data rules fire."""
    params = op.live_inputs
    always = {p.id for p in params if p.is_required} | set(forced)
    always |= {c.param for c in op.local_constraints if isinstance(c, C.AdditionalMandatory)}
    if not always <= sel:
        return False
    optional = [p.id for p in params if p.id not in always]
    for p in params:
        if p.id not in sel or p.loc is not Loc.BODY:
            continue
        # every object enclosing a sent field is sent, with its required members
        for depth in range(len(p.segments)):
            prefix = p.segments[:depth]
            for q in params:
                if q.loc is Loc.BODY and q.segments[:depth] == prefix and len(q.segments) > depth:
                    if all(q.required_chain[depth:]) and q.id not in sel:
                        return False

    def holds(c) -> bool:
        if isinstance(c, C.AdditionalMandatory):
            return c.param in sel
        if isinstance(c, C.Or):
            # the rule only binds once some optional parameter is sent
            return not any(v in sel for v in optional) or any(v in sel for v in c.params)
        if isinstance(c, C.One):
            return sum(v in sel for v in c.params) <= 1
        if isinstance(c, C.AllOrNone):
            return sum(v in sel for v in c.params) in (0, len(c.params))
        if isinstance(c, C.ConditionalParameterRequired):
            return (c.p2 in sel) != c.p2_present or (c.p1 in sel) == c.p1_present
        raise TypeError(c)

    for c in op.local_constraints:
        if isinstance(c, C.DataInfluencedParamSelection):
            if c in with_rules and not (holds(c.consequent) and c.antecedent.lhs in sel):
                return False
        elif not holds(c):
            return False
    return True


def oracle_scenarios(op: Operation, forced, cap: int, prerequisite: bool = False) -> list[tuple[str, frozenset]]:
    """Maximal, minimal and covering picks by filtering all 2^n subsets."""
    ids = sorted(p.id for p in op.live_inputs)
    subsets = [frozenset(s) for r in range(len(ids) + 1) for s in itertools.combinations(ids, r)]
    rules = [c for c in op.local_constraints if isinstance(c, C.DataInfluencedParamSelection)]
    out: list[tuple[str, frozenset]] = []
    seen: set = set()
    feasible = False
    for mask in itertools.product((True, False), repeat=len(rules)):
        on = frozenset(r for r, m in zip(rules, mask) if m)
        sols = [s for s in subsets if admissible(op, forced, s, on)]
        if not sols:
            continue
        feasible = True
        key = lambda s: tuple(sorted(s))
        top, bottom = max(map(len, sols)), min(map(len, sols))
        picks = [] if prerequisite else [("Maximal", s) for s in sorted((s for s in sols if len(s) == top), key=key)[:cap]]
        picks.append(("Minimal", min((s for s in sols if len(s) == bottom), key=key)))
        if not prerequisite:
            covered = set().union(*(s for _, s in picks))
            for v in ids:
                if v in covered or v in _fixed_ids(op, forced, on):
                    continue
                with_v = [s for s in sols if v in s]
                if with_v:
                    m = min(map(len, with_v))
                    picks.append(("OptionalCovering", min((s for s in with_v if len(s) == m), key=key)))
        for kind, s in picks:
            if s not in seen:
                seen.add(s)
                out.append((kind, s))
        if prerequisite:
            break
    if not feasible:
        raise InfeasibleMandatory(op.opname)
    return out


def _fixed_ids(op: Operation, forced, on) -> set:
    """Parameters pinned by a unit rule: covering scenarios skip them."""
    out = {p.id for p in op.live_inputs if p.is_required} | set(forced)
    out |= {c.param for c in op.local_constraints if isinstance(c, C.AdditionalMandatory)}
    for c in on:
        out.add(c.antecedent.lhs)
        if isinstance(c.consequent, C.AdditionalMandatory):
            out.add(c.consequent.param)
    return out
