import json

import pytest

from resprefine import constraints as C
from resprefine.analyzer.normalize import normalize_message
from resprefine.analyzer.verdict import Action
from resprefine.errors import ConnectivityError
from resprefine.failures import FailureRecord
from resprefine.fixtures import CATALOG, ground_truth_check
from resprefine.loader import load_spec
from resprefine.pipeline import PipelineConfig, analyze_failures, pipeline
from support import cached_run, run_fixture, shares


def _failure(op, status, message):
    return FailureRecord(op, status, message, normalize_message(message), {"params": {}})


def test_one_constraint_converges_in_two_iterations():
    spec, result = cached_run("one")
    assert result.iterations == 2 and result.stop_reason == "converged"
    assert ground_truth_check(result.learned(), spec.ground_truth).complete
    assert result.reports[-1].counts["4xx"] == 0


def test_all_ok_single_iteration():
    _, result = cached_run("all_ok")
    assert result.iterations == 1 and result.learned() == [] and result.failures == {}


def test_staged_discovery_strictly_reduces_4xx():
    spec, result = cached_run("staged")
    fours = [r.counts["4xx"] for r in result.reports]
    assert all(a > b for a, b in zip(fours, fours[1:])) and fours[-1] == 0
    assert result.iterations <= 4
    assert ground_truth_check(result.learned(), spec.ground_truth).complete


def test_analyze_nothing_leaves_model_alone(petstore):
    before = petstore.dumps()
    model, verdicts = analyze_failures(petstore, [])
    assert verdicts == [] and model.dumps() == before


def test_analyze_order_not_found(petstore):
    _, (v,) = analyze_failures(petstore, [_failure("deleteOrder", 404, "Order Not Found")])
    assert v.action is Action.ADD_CONSTRAINT
    assert petstore.extract_dependencies() == [
        C.ProducerConsumer("placeOrder", "placeOrder.200.id", "deleteOrder", "deleteorder.path.orderId")
    ]


def test_analysis_order_does_not_matter(petstore):
    fs = [_failure("deleteOrder", 404, "Order Not Found"), _failure("getPetById", 404, "Pet not found")]
    a, _ = analyze_failures(load_spec(json.loads(petstore.dumps())), fs)
    b, _ = analyze_failures(load_spec(json.loads(petstore.dumps())), list(reversed(fs)))
    assert a.dumps() == b.dumps()


def test_unknown_parameter_removed():
    spec, result = cached_run("unknown")
    (pid,) = [p.id for op in result.model.operations.values() for p in op.inputs if p.deleted]
    assert pid.endswith(".url")
    assert result.reports[-1].counts["4xx"] == 0


@pytest.mark.parametrize("budget", [1, 5, 13])
def test_hit_budget_never_exceeded(budget):
    _, result = run_fixture("staged", hit_budget=budget)
    assert result.hits <= budget
    assert sum(r.issued for r in result.reports) == result.hits


@pytest.mark.parametrize("name", sorted(n for n in CATALOG if n != "noisy"))
def test_4xx_share_never_grows(name):
    _, result = cached_run(name)
    s = shares(result, "4xx")
    assert all(b <= a for a, b in zip(s, s[1:])), s


def test_runs_are_reproducible():
    _, a = run_fixture("langtool", seed=3)
    _, b = run_fixture("langtool", seed=3)
    assert [r.to_dict() for r in a.reports] == [r.to_dict() for r in b.reports]


def test_removed_operation_not_retested():
    _, result = cached_run("unsupported")
    assert result.model.operations.keys() < set(result.model.original_operations)
    last = result.reports[-1].execution
    assert all(rec.op_id in result.model.operations for rec in last.records)


def test_missing_headers_excludes_operation():
    spec, result = run_fixture("auth", headers={})
    assert result.iterations == 2
    (verdict,) = [v for v in result.reports[0].verdicts if v.failure.status == 401]
    assert verdict.action is Action.REQUEST_USER_INPUT


def test_unreachable_service():
    with pytest.raises(ConnectivityError):
        pipeline(PipelineConfig(CATALOG["all_ok"]().document, "http://127.0.0.1:1", timeout_s=0.5))


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        PipelineConfig({}, "http://x", max_iterations=0)
    params = tmp_path / "exec.json"
    params.write_text(json.dumps({"base_url": "http://x", "seed": 4, "extra": 1}))
    cfg = PipelineConfig.from_files("spec.json", params, seed=9)
    assert cfg.seed == 9 and cfg.base_url == "http://x"
    with pytest.raises(ValueError):
        PipelineConfig.from_files("spec.json", {"seed": 1})
