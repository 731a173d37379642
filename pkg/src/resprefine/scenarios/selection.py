"""Parameter-selection scenarios as a pseudo-Boolean problem.

Each input parameter is a 0/1 variable. Learned selection constraints become
linear-sum formulas joined by implication or disjunction. Small problems are
solved by enumerating the free variables; larger ones by depth-first
branch-and-bound over the same formulas with three-valued evaluation.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union

from resprefine import constraints as C
from resprefine.errors import InfeasibleMandatory
from resprefine.model import Loc, Operation

log = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 16
MAXIMAL_CAP = 8


# -- formulas ----------------------------------------------------------------


@dataclass(frozen=True)
class Sum:
    """``sum(vars) op k``."""

    vars: tuple[str, ...]
    op: str
    k: int

    def eval(self, assign: dict[str, int]) -> Optional[bool]:
        lo = sum(assign.get(v, 0) for v in self.vars)
        free = sum(1 for v in self.vars if v not in assign)
        hi = lo + free
        op, k = self.op, self.k
        if op == "=":
            if free == 0:
                return lo == k
            return False if k < lo or k > hi else None
        if op == ">":
            return True if lo > k else (False if hi <= k else None)
        if op == ">=":
            return True if lo >= k else (False if hi < k else None)
        if op == "<=":
            return True if hi <= k else (False if lo > k else None)
        if op == "<":
            return True if hi < k else (False if lo >= k else None)
        raise ValueError(op)

    def __str__(self) -> str:
        return f"sum({', '.join(self.vars)}) {self.op} {self.k}"


@dataclass(frozen=True)
class Implies:
    a: "Formula"
    b: "Formula"

    def eval(self, assign: dict[str, int]) -> Optional[bool]:
        a = self.a.eval(assign)
        if a is False:
            return True
        b = self.b.eval(assign)
        if b is True:
            return True
        if a is True and b is False:
            return False
        return None

    def __str__(self) -> str:
        return f"({self.a}) => ({self.b})"


@dataclass(frozen=True)
class Either:
    parts: tuple["Formula", ...]

    def eval(self, assign: dict[str, int]) -> Optional[bool]:
        seen_unknown = False
        for p in self.parts:
            v = p.eval(assign)
            if v is True:
                return True
            if v is None:
                seen_unknown = True
        return None if seen_unknown else False

    def __str__(self) -> str:
        return " OR ".join(f"({p})" for p in self.parts)


Formula = Union[Sum, Implies, Either]


@dataclass(frozen=True)
class Clause:
    label: str
    formula: Formula

    def eval(self, assign: dict[str, int]) -> Optional[bool]:
        return self.formula.eval(assign)

    def holds(self, selected: Iterable[str], variables: Sequence[str]) -> bool:
        sel = set(selected)
        return bool(self.formula.eval({v: int(v in sel) for v in variables}))


def unit(var: str, value: int, label: str = "unit") -> Clause:
    return Clause(label, Sum((var,), "=", value))


# -- problem -----------------------------------------------------------------


@dataclass
class SelectionProblem:
    op: str
    variables: tuple[str, ...]
    clauses: list[Clause] = field(default_factory=list)
    # one (with, without) pair per data-influenced selection rule
    alternatives: list[tuple[list[Clause], list[Clause]]] = field(default_factory=list)

    def variants(self) -> list[list[Clause]]:
        if not self.alternatives:
            return [list(self.clauses)]
        out = []
        for combo in itertools.product(*self.alternatives):
            out.append(list(self.clauses) + [c for group in combo for c in group])
        return out

    def fixed(self, clauses: Sequence[Clause]) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in clauses:
            f = c.formula
            if isinstance(f, Sum) and len(f.vars) == 1 and f.op == "=":
                out[f.vars[0]] = f.k
        return out

    def admits(self, selected: Iterable[str]) -> bool:
        sel = set(selected)
        assign = {v: int(v in sel) for v in self.variables}
        return any(all(c.eval(assign) for c in variant) for variant in self.variants())

    @property
    def mandatory(self) -> frozenset[str]:
        return frozenset(v for v, k in self.fixed(self.clauses).items() if k == 1)


@dataclass(frozen=True)
class ParameterScenario:
    target_op: str
    selected: frozenset[str]
    kind: str  # Maximal | Minimal | OptionalCovering

    def sorted_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.selected))


# -- encoding ----------------------------------------------------------------


def _selection_clauses(c, optional: Sequence[str]) -> list[Clause]:
    if isinstance(c, C.AdditionalMandatory):
        return [unit(c.param, 1, "additional-mandatory")]
    if isinstance(c, C.Present):
        return [unit(c.param, int(c.present), "presence")]
    if isinstance(c, C.Or):
        return [Clause("or", Implies(Sum(tuple(optional), ">", 0), Sum(c.params, ">", 0)))]
    if isinstance(c, C.One):
        return [Clause("one", Implies(Sum(c.params, ">", 0), Sum(c.params, "=", 1)))]
    if isinstance(c, C.AllOrNone):
        return [Clause("all-or-none", Either((Sum(c.params, "=", 0), Sum(c.params, "=", len(c.params)))))]
    if isinstance(c, C.ConditionalParameterRequired):
        return [
            Clause(
                "conditional",
                Implies(Sum((c.p2,), "=", int(c.p2_present)), Sum((c.p1,), "=", int(c.p1_present))),
            )
        ]
    raise TypeError(f"not a selection constraint: {c!r}")


def _nesting_clauses(op: Operation, live: set[str]) -> list[Clause]:
    """Selecting a nested field forces the required members of every enclosing object."""
    out: list[Clause] = []
    groups: dict[str, list] = {}
    for p in op.live_inputs:
        if p.loc in (Loc.BODY, Loc.FORMDATA):
            groups.setdefault(p.loc.value, []).append(p)
    for params in groups.values():
        for p in params:
            if p.is_required:
                continue
            segs = p.segments
            # depth 0 is the body root; deeper prefixes are enclosing objects
            for depth in range(0, len(segs)):
                prefix = segs[:depth]
                required = sorted(
                    q.id
                    for q in params
                    if q.id != p.id
                    and not q.is_required
                    and q.segments[:depth] == prefix
                    and len(q.segments) > depth
                    and all((q.required_chain or (q.is_required,))[depth:])
                )
                if required:
                    out.append(Clause("nesting", Implies(Sum((p.id,), "=", 1), Sum(tuple(required), "=", len(required)))))
    return out


def encode_selection_constraints(op: Operation, forced: Iterable[str] = ()) -> SelectionProblem:
    """Build the selection problem for ``op``.

    ``forced`` lists parameters that must be present anyway, e.g. consumer
    parameters bound by a producer-consumer dependency.
    """
    live = [p for p in op.live_inputs]
    variables = tuple(sorted(p.id for p in live))
    live_ids = set(variables)
    clauses: list[Clause] = []
    for p in live:
        if p.is_required:
            clauses.append(unit(p.id, 1, "mandatory"))
    for pid in sorted(set(forced) & live_ids):
        clauses.append(unit(pid, 1, "dependency"))
    fixed_on = {p.id for p in live if p.is_required} | (set(forced) & live_ids)
    for c in op.local_constraints:
        if isinstance(c, C.AdditionalMandatory):
            fixed_on.add(c.param)
    optional = tuple(v for v in variables if v not in fixed_on)
    clauses.extend(_nesting_clauses(op, live_ids))
    alternatives = []
    for c in op.local_constraints:
        if not all(pid in live_ids for pid in c.param_ids()):
            continue
        if isinstance(c, C.SELECTION_TYPES):
            clauses.extend(_selection_clauses(c, optional))
        elif isinstance(c, C.DataInfluencedParamSelection):
            with_rule = _selection_clauses(c.consequent, optional) + [
                unit(pid, 1, "antecedent") for pid in c.antecedent.param_ids()
            ]
            alternatives.append((with_rule, []))
    return SelectionProblem(op.opname, variables, clauses, alternatives)


# -- solving -----------------------------------------------------------------


def _free_and_fixed(problem: SelectionProblem, clauses: Sequence[Clause]) -> Optional[tuple[list[str], dict[str, int]]]:
    fixed: dict[str, int] = {}
    for v, k in _units(clauses):
        if fixed.get(v, k) != k:
            return None
        fixed[v] = k
    free = [v for v in problem.variables if v not in fixed]
    return free, fixed


def _units(clauses: Sequence[Clause]) -> Iterator[tuple[str, int]]:
    for c in clauses:
        f = c.formula
        if isinstance(f, Sum) and len(f.vars) == 1 and f.op == "=":
            yield f.vars[0], f.k


def enumerate_solutions(problem: SelectionProblem, clauses: Sequence[Clause]) -> list[frozenset[str]]:
    """Every satisfying selection (free variables enumerated exhaustively)."""
    ff = _free_and_fixed(problem, clauses)
    if ff is None:
        return []
    free, fixed = ff
    base = {v for v, k in fixed.items() if k}
    out = []
    for bits in itertools.product((0, 1), repeat=len(free)):
        assign = dict(fixed)
        assign.update(zip(free, bits))
        if all(c.eval(assign) for c in clauses):
            out.append(frozenset(base | {v for v, b in zip(free, bits) if b}))
    return out


class _Search:
    """Depth-first branch and bound over the free variables."""

    def __init__(self, problem: SelectionProblem, clauses: Sequence[Clause]) -> None:
        self.clauses = list(clauses)
        ff = _free_and_fixed(problem, clauses)
        self.ok = ff is not None
        self.free, self.fixed = ff if ff else ([], {})
        self.base = sum(self.fixed.values())

    def _consistent(self, assign: dict[str, int]) -> bool:
        return all(c.eval(assign) is not False for c in self.clauses)

    def walk(
        self,
        lo: int,
        hi: int,
        limit: int,
        require: Optional[str] = None,
    ) -> list[frozenset[str]]:
        """Solutions with cardinality in [lo, hi], canonical (lexicographic) order."""
        if not self.ok:
            return []
        found: list[frozenset[str]] = []
        assign = dict(self.fixed)
        if require is not None:
            if assign.get(require, 1) != 1:
                return []
            assign[require] = 1
        order = [v for v in self.free if v != require] if require else list(self.free)
        start = sum(assign.values())

        def rec(i: int, count: int) -> bool:
            if count > hi or count + (len(order) - i) < lo:
                return False
            if not self._consistent(assign):
                return False
            if i == len(order):
                if all(c.eval(assign) for c in self.clauses):
                    found.append(frozenset(v for v, b in assign.items() if b))
                    return len(found) >= limit
                return False
            v = order[i]
            for bit in (1, 0):
                assign[v] = bit
                if rec(i + 1, count + bit):
                    return True
            del assign[v]
            return False

        rec(0, start)
        return found

    def extreme(self, maximize: bool, require: Optional[str] = None) -> Optional[int]:
        """Best cardinality; bisects over the cardinality bound."""
        if not self.ok:
            return None
        n = len(self.free) + self.base
        lo, hi = self.base, n
        if not self.walk(lo, hi, 1, require):
            return None
        while lo < hi:
            if maximize:
                mid = (lo + hi + 1) // 2
                if self.walk(mid, n, 1, require):
                    lo = mid
                else:
                    hi = mid - 1
            else:
                mid = (lo + hi) // 2
                if self.walk(self.base, mid, 1, require):
                    hi = mid
                else:
                    lo = mid + 1
        return lo


def _canonical(s: frozenset[str]) -> tuple:
    return tuple(sorted(s))


def _select_exhaustive(problem, clauses, cap):
    sols = enumerate_solutions(problem, clauses)
    if not sols:
        return None
    top = max(len(s) for s in sols)
    bottom = min(len(s) for s in sols)
    maximal = sorted((s for s in sols if len(s) == top), key=_canonical)[:cap]
    minimal = min((s for s in sols if len(s) == bottom), key=_canonical)

    def covering(v: str) -> Optional[frozenset[str]]:
        with_v = [s for s in sols if v in s]
        if not with_v:
            return None
        m = min(len(s) for s in with_v)
        return min((s for s in with_v if len(s) == m), key=_canonical)

    return maximal, minimal, covering


def _select_search(problem, clauses, cap):
    search = _Search(problem, clauses)
    top = search.extreme(True)
    if top is None:
        return None
    bottom = search.extreme(False)
    maximal = search.walk(top, top, cap)
    minimal = search.walk(bottom, bottom, 1)[0]

    def covering(v: str) -> Optional[frozenset[str]]:
        m = search.extreme(False, require=v)
        if m is None:
            return None
        return search.walk(m, m, 1, require=v)[0]

    return maximal, minimal, covering


def solve_parameter_scenarios(
    problem: SelectionProblem,
    is_prerequisite: bool = False,
    cap: int = MAXIMAL_CAP,
    method: str = "auto",
) -> list[ParameterScenario]:
    """Maximal, minimal and optional-covering scenarios, deduplicated.

    Each clause variant is solved on its own and the results are
    concatenated in variant order. ``method`` is ``auto``, ``exhaustive``
    or ``search``.
    """
    out: list[ParameterScenario] = []
    seen: set[frozenset[str]] = set()

    def emit(sel: frozenset[str], kind: str) -> None:
        if sel not in seen:
            seen.add(sel)
            out.append(ParameterScenario(problem.op, sel, kind))

    any_feasible = False
    for clauses in problem.variants():
        ff = _free_and_fixed(problem, clauses)
        n_free = len(ff[0]) if ff else 0
        use_search = method == "search" or (method == "auto" and n_free > EXHAUSTIVE_LIMIT)
        picked = (_select_search if use_search else _select_exhaustive)(problem, clauses, cap)
        if picked is None:
            continue
        any_feasible = True
        maximal, minimal, covering = picked
        if is_prerequisite:
            emit(minimal, "Minimal")
            break
        for s in maximal:
            emit(s, "Maximal")
        emit(minimal, "Minimal")
        covered = set().union(*maximal, minimal)
        optional = [v for v in problem.variables if v not in problem.fixed(clauses)]
        for v in optional:
            if v in covered:
                continue
            s = covering(v)
            if s is not None:
                emit(s, "OptionalCovering")
    if not any_feasible:
        raise InfeasibleMandatory(problem.op)
    return out


def brute_force_scenarios(problem: SelectionProblem, is_prerequisite: bool = False, cap: int = MAXIMAL_CAP) -> list[ParameterScenario]:
    """Reference implementation: test every subset of all variables against ``admits``-style checks."""
    out: list[ParameterScenario] = []
    seen: set[frozenset[str]] = set()
    feasible = False
    n = len(problem.variables)
    for clauses in problem.variants():
        sols = []
        for mask in range(1 << n):
            sel = frozenset(v for i, v in enumerate(problem.variables) if mask >> i & 1)
            if all(c.holds(sel, problem.variables) for c in clauses):
                sols.append(sel)
        if not sols:
            continue
        feasible = True
        top = max(map(len, sols))
        bottom = min(map(len, sols))
        maximal = sorted([s for s in sols if len(s) == top], key=_canonical)[:cap]
        minimal = sorted([s for s in sols if len(s) == bottom], key=_canonical)[0]
        batch = [] if is_prerequisite else [(s, "Maximal") for s in maximal]
        batch.append((minimal, "Minimal"))
        if not is_prerequisite:
            covered = set().union(*maximal, minimal)
            fixed = problem.fixed(clauses)
            for v in problem.variables:
                if v in fixed or v in covered:
                    continue
                cands = [s for s in sols if v in s]
                if cands:
                    m = min(map(len, cands))
                    batch.append((sorted([s for s in cands if len(s) == m], key=_canonical)[0], "OptionalCovering"))
        for s, kind in batch:
            if s not in seen:
                seen.add(s)
                out.append(ParameterScenario(problem.op, s, kind))
        if is_prerequisite:
            break
    if not feasible:
        raise InfeasibleMandatory(problem.op)
    return out
