import graphlib
import itertools
import random
from datetime import datetime

import pytest
from hypothesis import given, settings, strategies as st

from resprefine import constraints as C
from resprefine.errors import InfeasibleMandatory, UnsatisfiableData
from resprefine.model import InputParameter, Loc, Operation, SpecModel, param_id
from resprefine.scenarios.data import (
    DefaultProvider,
    UsedValues,
    gather_data_constraints,
    generate_data,
    violations,
)
from resprefine.scenarios.selection import (
    ParameterScenario,
    brute_force_scenarios,
    encode_selection_constraints,
    solve_parameter_scenarios,
)
from resprefine.scenarios.sequences import generate_sequences, plan_sequences
from support import oracle_scenarios, random_operation


def _op(name="op", required=(), optional=(), ptype="string", constraints=()):
    op = Operation(name, f"/{name}", "GET")
    for n, req in [(n, True) for n in required] + [(n, False) for n in optional]:
        p = InputParameter(n, ptype, req, Loc.QUERY, required_chain=(req,))
        p.id = param_id(name, Loc.QUERY, n)
        op.inputs.append(p)
    op.local_constraints.extend(constraints)
    return op


def _ids(op, *names):
    return tuple(param_id(op.opname, Loc.QUERY, n) for n in names)


def _selected(scenarios):
    return [(s.kind, set(s.selected)) for s in scenarios]


# -- selection ---------------------------------------------------------------


def test_one_constraint_two_maximal_scenarios():
    op = _op(optional=("p1", "p2", "p3"))
    p1, p2, p3 = _ids(op, "p1", "p2", "p3")
    op.local_constraints.append(C.One((p1, p3)))
    problem = encode_selection_constraints(op)
    admitted = [set(s) for r in range(4) for s in itertools.combinations((p1, p2, p3), r) if problem.admits(s)]
    assert all(len({p1, p3} & s) <= 1 for s in admitted) and len(admitted) == 6
    got = solve_parameter_scenarios(problem)
    assert [set(s.selected) for s in got if s.kind == "Maximal"] == [{p1, p2}, {p2, p3}]


def test_mandatory_only_problem():
    op = _op(required=("m",))
    problem = encode_selection_constraints(op)
    assert [c.label for c in problem.clauses] == ["mandatory"]
    assert _selected(solve_parameter_scenarios(problem)) == [("Maximal", {"op.query.m"})]


def test_three_kinds_without_constraints():
    op = _op(required=("m",), optional=("o1", "o2"))
    m, o1, o2 = _ids(op, "m", "o1", "o2")
    got = _selected(solve_parameter_scenarios(encode_selection_constraints(op)))
    assert got == [("Maximal", {m, o1, o2}), ("Minimal", {m})]


def test_all_or_none_admits_only_extremes():
    op = _op(optional=("a", "b"))
    a, b = _ids(op, "a", "b")
    op.local_constraints.append(C.AllOrNone((a, b)))
    problem = encode_selection_constraints(op)
    assert [s for s in ([], [a], [b], [a, b]) if problem.admits(s)] == [[], [a, b]]


def test_covering_reaches_excluded_parameter():
    op = _op(optional=("a", "b", "c"))
    a, b, c = _ids(op, "a", "b", "c")
    # c only fits when both others are gone
    op.local_constraints += [C.ConditionalParameterRequired(a, False, c, True), C.ConditionalParameterRequired(b, False, c, True)]
    got = _selected(solve_parameter_scenarios(encode_selection_constraints(op)))
    assert got == [("Maximal", {a, b}), ("Minimal", set()), ("OptionalCovering", {c})]


def test_prerequisite_gets_minimal_scenario():
    op = _op(required=("m",), optional=("o",))
    (s,) = solve_parameter_scenarios(encode_selection_constraints(op), is_prerequisite=True)
    assert s.kind == "Minimal" and s.selected == frozenset(_ids(op, "m"))


def test_infeasible_mandatory():
    op = _op(required=("a", "b"))
    op.local_constraints.append(C.One(_ids(op, "a", "b")))
    with pytest.raises(InfeasibleMandatory):
        solve_parameter_scenarios(encode_selection_constraints(op))


def test_nested_optional_field_pulls_in_required_siblings():
    op = Operation("mk", "/mk", "POST")
    for name, chain in (("name", (True,)), ("ship.city", (False, True)), ("ship.zip", (False, True)), ("ship.note", (False, False))):
        p = InputParameter(name, "string", all(chain), Loc.BODY, required_chain=chain)
        p.id = param_id("mk", Loc.BODY, name)
        op.inputs.append(p)
    problem = encode_selection_constraints(op)
    assert not problem.admits({"mk.body.name", "mk.body.ship.city"})
    assert not problem.admits({"mk.body.name", "mk.body.ship.note"})
    assert problem.admits({"mk.body.name", "mk.body.ship.city", "mk.body.ship.zip"})
    assert problem.admits({"mk.body.name"})


def test_maximal_cap():
    op = _op(optional=tuple(f"p{i}" for i in range(10)))
    op.local_constraints.append(C.One(_ids(op, *[f"p{i}" for i in range(10)])))
    got = solve_parameter_scenarios(encode_selection_constraints(op), cap=3)
    assert sum(s.kind == "Maximal" for s in got) == 3


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_solver_matches_independent_oracle(seed):
    op, forced = random_operation(random.Random(seed), max_vars=9)
    for prerequisite in (False, True):
        try:
            expected = oracle_scenarios(op, forced, 8, prerequisite)
        except InfeasibleMandatory:
            expected = None
        for method in ("exhaustive", "search"):
            try:
                got = solve_parameter_scenarios(encode_selection_constraints(op, forced), prerequisite, 8, method)
                got = [(s.kind, s.selected) for s in got]
            except InfeasibleMandatory:
                got = None
            assert got == expected
        if expected is not None:
            brute = brute_force_scenarios(encode_selection_constraints(op, forced), prerequisite, 8)
            assert [(s.kind, s.selected) for s in brute] == expected


# -- data ----------------------------------------------------------------------


def test_gather_nested_data_constraint():
    op = _op(optional=("thumbnail", "type", "title"))
    th, ty, ti = _ids(op, "thumbnail", "type", "title")
    rule = C.ParameterInfluencedDataValues(C.Present(th), C.DataArithmetic(ty, "=", "link"))
    op.local_constraints.append(rule)
    assert gather_data_constraints({th, ty}, op) == [C.DataArithmetic(ty, "=", "link")]
    assert gather_data_constraints({ty, ti}, op) == []


def test_gather_arithmetic():
    op = _op(optional=("afterTimestamp", "beforeTimestamp"))
    a, b = _ids(op, "afterTimestamp", "beforeTimestamp")
    rel = C.DataArithmetic(a, ">", b, True)
    op.local_constraints.append(rel)
    assert gather_data_constraints({a, b}, op) == [rel]
    assert gather_data_constraints({a}, op) == []


def test_categorical_values_drawn_from_set():
    op = _op(required=("language",))
    (lang,) = _ids(op, "language")
    rule = C.DataNonArithmetic(lang, "categorical", ("ar", "en", "fr"))
    data = generate_data(ParameterScenario("op", frozenset({lang}), "Maximal"), [rule], k=3, op=op)
    assert data and all(d.assignment[lang] in ("ar", "en", "fr") for d in data)


def test_positive_integer():
    op = _op(required=("p",), ptype="integer")
    (p,) = _ids(op, "p")
    rule = C.DataArithmetic(p, ">", 0)
    op.inputs[0].examples = [-4]
    for d in generate_data(ParameterScenario("op", frozenset({p}), "Maximal"), [rule], k=4, op=op):
        assert d.assignment[p] >= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.sampled_from(["integer", "number"]))
def test_pairwise_inequality_always_holds(seed, ptype):
    op = _op(optional=("afterTimestamp", "beforeTimestamp"), ptype=ptype)
    a, b = _ids(op, "afterTimestamp", "beforeTimestamp")
    rule = C.DataArithmetic(a, ">", b, True)
    out = generate_data(ParameterScenario("op", frozenset({a, b}), "Maximal"), [rule], k=3, op=op, seed=seed)
    assert out
    for d in out:
        assert d.assignment[a] > d.assignment[b]
        assert violations(d.assignment, [rule]) == []


def test_timestamps_as_dates():
    op = _op(optional=("startTime", "endTime"))
    for p in op.inputs:
        p.pc["format"] = "date-time"
    s, e = _ids(op, "startTime", "endTime")
    rule = C.DataArithmetic(e, ">", s, True)
    for d in generate_data(ParameterScenario("op", frozenset({s, e}), "Maximal"), [rule], k=3, op=op):
        assert datetime.fromisoformat(d.assignment[e].replace("Z", "+00:00")) > datetime.fromisoformat(
            d.assignment[s].replace("Z", "+00:00")
        )


def test_generation_is_deterministic_per_seed():
    op = _op(optional=("name", "email", "count"))
    sc = ParameterScenario("op", frozenset(p.id for p in op.inputs), "Maximal")
    first = [d.assignment for d in generate_data(sc, [], k=2, op=op, seed=5)]
    again = [d.assignment for d in generate_data(sc, [], k=2, op=op, seed=5)]
    other = [d.assignment for d in generate_data(sc, [], k=2, op=op, seed=6)]
    assert first == again and first != other


def test_unique_values_never_repeat_across_calls():
    op = _op(required=("email",))
    (email,) = _ids(op, "email")
    used = UsedValues()
    rule = C.DataNonArithmetic(email, "unique")
    sc = ParameterScenario("op", frozenset({email}), "Maximal")
    values = []
    for _ in range(3):
        values += [d.assignment[email] for d in generate_data(sc, [rule], k=2, op=op, used=used)]
    assert len(values) == len(set(values)) == 6


def test_contradiction_is_unsatisfiable():
    op = _op(required=("n",), ptype="integer")
    (n,) = _ids(op, "n")
    rules = [C.DataArithmetic(n, ">", 10), C.DataArithmetic(n, "<", 5)]
    with pytest.raises(UnsatisfiableData):
        generate_data(ParameterScenario("op", frozenset({n}), "Maximal"), rules, k=1, op=op)


def test_provider_respects_bounds_and_enums():
    p = InputParameter("size", "integer", True, Loc.QUERY, pc={"minimum": 3, "maximum": 5})
    q = InputParameter("mode", "string", True, Loc.QUERY, pc={"enum": ["a", "b"]})
    prov, rng = DefaultProvider(), random.Random(0)
    assert all(3 <= prov.value(p, rng) <= 5 for _ in range(50))
    assert all(prov.value(q, rng) in ("a", "b") for _ in range(20))


# -- sequences -------------------------------------------------------------------


def _model(*names):
    m = SpecModel()
    for n in names:
        op = Operation(n, f"/{n}", "POST" if n.startswith("create") else "GET")
        p = InputParameter("id", "integer", True, Loc.QUERY)
        p.id = param_id(n, Loc.QUERY, "id")
        op.inputs.append(p)
        m.operations[n] = op
    return m


def _pc(prod, cons):
    return C.ProducerConsumer(prod, f"{prod}.200.id", cons, param_id(cons, Loc.QUERY, "id"))


def test_no_dependencies_singletons():
    m = _model("a", "b", "c")
    assert [s.ops for s in generate_sequences([], m)] == [("a",), ("b",), ("c",)]


def test_producer_first(petstore):
    dep = C.ProducerConsumer("placeOrder", "placeOrder.200.id", "deleteOrder", "deleteorder.path.orderId")
    seqs = {s.target_op: s for s in generate_sequences([dep], petstore)}
    assert seqs["deleteOrder"].ops == ("placeOrder", "deleteOrder")
    assert seqs["placeOrder"].ops == ("placeOrder",)


def test_chain():
    m = _model("createA", "createB", "c")
    seqs = {s.target_op: s for s in generate_sequences([_pc("createA", "createB"), _pc("createB", "c")], m)}
    assert seqs["c"].ops == ("createA", "createB", "c")


def test_cycle_edge_dropped():
    m = _model("x", "y")
    plan = plan_sequences([_pc("x", "y"), _pc("y", "x")], m)
    assert plan.dropped == [_pc("y", "x")] and plan.warnings
    assert {s.target_op: s.ops for s in plan.sequences} == {"x": ("x",), "y": ("x", "y")}


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=10), st.data())
def test_random_dag_orders(n, data):
    names = [f"op{i}" for i in range(n)]
    m = _model(*names)
    # edges only go from lower to higher index, so the graph is acyclic
    pairs = data.draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=15))
    consumers = {}
    for i, j in pairs:
        if i < j and j not in consumers:
            consumers[j] = i
    deps = [_pc(names[i], names[j]) for j, i in sorted(consumers.items())]
    for seq in generate_sequences(deps, m):
        assert len(seq.ops) == len(set(seq.ops)) and seq.ops[-1] == seq.target_op
        pos = {op: k for k, op in enumerate(seq.ops)}
        for d in seq.deps:
            assert pos[d.producer_op] < pos[d.consumer_op]
        # independent check: the ops are exactly the target's ancestors
        graph = {names[j]: {names[i]} for j, i in consumers.items()}
        need, stack = {seq.target_op}, [seq.target_op]
        while stack:
            for pred in graph.get(stack.pop(), ()):
                if pred not in need:
                    need.add(pred)
                    stack.append(pred)
        assert set(seq.ops) == need
        ts = graphlib.TopologicalSorter({k: graph.get(k, set()) & need for k in need})
        assert len(list(ts.static_order())) == len(seq.ops)
