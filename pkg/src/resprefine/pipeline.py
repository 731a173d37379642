"""The iterative generate -> execute -> analyze -> refine loop."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import httpx

from resprefine import constraints as C
from resprefine.analyzer.backend import InferenceService
from resprefine.analyzer.verdict import Action, Analyzer, AnalyzerVerdict, apply_verdict
from resprefine.engine import DEFAULT_TIMEOUT, ExecutionReport, Executor, TestCase, generate_tests, producer_path
from resprefine.errors import InfeasibleMandatory, RefineError, UnsatisfiableData
from resprefine.failures import FailureRecord
from resprefine.loader import load_spec
from resprefine.model import SpecModel
from resprefine.scenarios.data import DEFAULT_K, DataScenario, DefaultProvider, UsedValues, gather_data_constraints, generate_data
from resprefine.scenarios.selection import MAXIMAL_CAP, ParameterScenario, encode_selection_constraints, solve_parameter_scenarios
from resprefine.scenarios.sequences import SequenceScenario, plan_sequences

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 10


@dataclass
class PipelineConfig:
    spec: Union[str, Path, dict]
    base_url: str
    headers: dict[str, str] = field(default_factory=dict)
    timeout_s: float = DEFAULT_TIMEOUT
    hit_budget: Optional[int] = None
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    seed: int = 0
    k_data_scenarios: int = DEFAULT_K
    maximal_cap: int = MAXIMAL_CAP
    inference_url: Optional[str] = None
    backends: Sequence[Any] = ()
    # test hook: a prepared httpx client (e.g. with a mock transport)
    client: Optional[httpx.Client] = None
    probe: bool = True

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.k_data_scenarios < 1:
            raise ValueError("k_data_scenarios must be >= 1")

    @classmethod
    def from_files(cls, spec: Union[str, Path], exec_params: Union[str, Path, dict], **overrides) -> "PipelineConfig":
        params = exec_params if isinstance(exec_params, dict) else json.loads(Path(exec_params).read_text())
        known = {
            "base_url", "headers", "timeout_s", "hit_budget", "max_iterations", "seed", "k_data_scenarios",
            "maximal_cap", "inference_url",
        }
        unknown = set(params) - known
        if unknown:
            log.warning("ignoring unknown execution parameters: %s", sorted(unknown))
        kwargs = {k: v for k, v in params.items() if k in known}
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        if "base_url" not in kwargs:
            raise ValueError("execution parameters must include base_url")
        return cls(spec=spec, **kwargs)


@dataclass
class IterationReport:
    iteration: int
    counts: dict[str, int]
    issued: int
    skipped: int
    tests: int
    new_constraints: list = field(default_factory=list)
    new_failures: list[FailureRecord] = field(default_factory=list)
    cumulative_failures: int = 0
    verdicts: list[AnalyzerVerdict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    execution: Optional[ExecutionReport] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "counts": dict(self.counts),
            "issued": self.issued,
            "skipped": self.skipped,
            "tests": self.tests,
            "new_constraints": [C.to_dict(c) for c in self.new_constraints],
            "new_failures": [f.to_dict() for f in self.new_failures],
            "cumulative_failures": self.cumulative_failures,
            "verdicts": [v.to_dict() | {"op_id": v.failure.op_id if v.failure else None} for v in self.verdicts],
            "warnings": list(self.warnings),
        }


@dataclass
class PipelineResult:
    model: SpecModel
    reports: list[IterationReport]
    failures: dict[tuple, FailureRecord]
    stop_reason: str
    hits: int

    @property
    def iterations(self) -> int:
        return len(self.reports)

    def executions(self) -> list[ExecutionReport]:
        return [r.execution for r in self.reports if r.execution is not None]

    def learned(self) -> list:
        return list(self.model.constraints())


# -- per-iteration planning -------------------------------------------------


@dataclass
class TestPlan:
    tests: list[TestCase]
    sequences: list[SequenceScenario]
    warnings: list[str]


def _newest(constraints: list, types: tuple) -> Optional[Any]:
    for c in reversed(constraints):
        if isinstance(c, types):
            return c
    return None


def _forced_params(op_name: str, sequences: Sequence[SequenceScenario]) -> set[str]:
    forced = set()
    for seq in sequences:
        for d in seq.deps:
            if d.consumer_op == op_name:
                forced.add(d.consumer_param)
            # a producer that hands over one of its own inputs must send it
            if d.producer_op == op_name and producer_path(d)[0] == "input":
                forced.add(d.producer_param)
    return forced


def plan_iteration(model: SpecModel, cfg: PipelineConfig, used: UsedValues) -> TestPlan:
    """Sequences, parameter scenarios and data for every live operation.

    Contradictions found here are resolved on ``model`` by quarantining the
    newest offending constraint, before any request is sent.
    """
    warnings: list[str] = []
    seq_plan = plan_sequences(model.extract_dependencies(), model)
    warnings.extend(seq_plan.warnings)
    sequences = seq_plan.sequences
    provider = DefaultProvider(model.schemas)
    param_scenarios: dict[str, list[ParameterScenario]] = {}
    data_scenarios: dict[str, list[list[DataScenario]]] = {}
    prerequisites: dict[str, tuple[ParameterScenario, DataScenario]] = {}
    needed_as_prereq = {op for s in sequences for op in s.ops[:-1]}

    for seq in sequences:
        name = seq.target_op
        op = model.operations[name]
        forced = _forced_params(name, sequences)
        while True:
            problem = encode_selection_constraints(op, forced)
            try:
                scenarios = solve_parameter_scenarios(problem, False, cap=cfg.maximal_cap)
                prereq = solve_parameter_scenarios(problem, True)[0]
                break
            except InfeasibleMandatory:
                victim = _newest(op.local_constraints, C.SELECTION_TYPES + (C.DataInfluencedParamSelection,))
                if victim is None:
                    warnings.append(f"{name}: no feasible parameter scenario")
                    scenarios, prereq = [], None
                    break
                model.quarantine(victim, "makes the mandatory parameters infeasible")
                warnings.append(f"{name}: quarantined {C.describe(victim)} (infeasible selection)")
        regen = model.regenerate.get(name, 0)
        kept: list[ParameterScenario] = []
        per_scenario: list[list[DataScenario]] = []
        for ps in scenarios:
            data = _data_for(model, op, ps, cfg.k_data_scenarios, forced, cfg, provider, used, regen, warnings)
            if data:
                kept.append(ps)
                per_scenario.append(data)
        if prereq is not None and name in needed_as_prereq:
            data = _data_for(model, op, prereq, 1, forced, cfg, provider, used, regen, warnings)
            if data:
                prerequisites[name] = (prereq, data[0])
        param_scenarios[name] = kept
        data_scenarios[name] = per_scenario

    tests, test_warnings = generate_tests(
        model, model.extract_dependencies(), sequences, param_scenarios, data_scenarios, prerequisites
    )
    warnings.extend(test_warnings)
    return TestPlan(tests, sequences, warnings)


def _data_for(model, op, ps, k, forced, cfg, provider, used, regen, warnings) -> list[DataScenario]:
    for attempt in range(2):
        constraints = gather_data_constraints(ps, op)
        try:
            return generate_data(
                ps,
                constraints,
                k,
                op,
                seed=cfg.seed,
                provider=provider,
                used=used,
                use_examples=regen == 0,
                generation=regen,
                masked=forced,
            )
        except UnsatisfiableData as exc:
            victim = _newest(op.local_constraints, C.DATA_TYPES + C.NESTED_TYPES)
            if attempt == 1 or victim is None:
                warnings.append(f"{op.opname}: {exc}")
                return []
            model.quarantine(victim, "data constraints unsatisfiable")
            warnings.append(f"{op.opname}: quarantined {C.describe(victim)} (unsatisfiable data)")
    return []


# -- analysis ---------------------------------------------------------------


def analyze_failures(
    model: SpecModel, run_failures: Sequence[FailureRecord], analyzer: Optional[Analyzer] = None
) -> tuple[SpecModel, list[AnalyzerVerdict]]:
    """Classify each failure and apply the resulting action, in a fixed order."""
    analyzer = analyzer or Analyzer()
    verdicts: list[AnalyzerVerdict] = []
    for f in sorted(run_failures, key=lambda r: (r.op_id, r.status, r.normalized_message)):
        verdict = analyzer.analyze(f, model)
        try:
            apply_verdict(model, verdict)
        except RefineError as exc:
            log.info("verdict for %s not applied: %s", f.op_id, exc)
            verdict = AnalyzerVerdict(verdict.category, None, Action.REPORT_DEFECT, note=str(exc), failure=f)
        verdicts.append(verdict)
    return model, verdicts


# -- the loop ---------------------------------------------------------------


def _analyzer_for(cfg: PipelineConfig) -> Analyzer:
    backends = list(cfg.backends)
    service = InferenceService.from_env(cfg.inference_url)
    if service is not None:
        backends.append(service)
    return Analyzer(backends)


def pipeline(cfg: PipelineConfig) -> PipelineResult:
    model = load_spec(cfg.spec) if not isinstance(cfg.spec, SpecModel) else cfg.spec
    analyzer = _analyzer_for(cfg)
    executor = Executor(
        model,
        cfg.base_url,
        headers=cfg.headers,
        timeout=cfg.timeout_s,
        hit_budget=cfg.hit_budget,
        client=cfg.client,
        probe=cfg.probe,
    )
    used = UsedValues()
    failures: dict[tuple, FailureRecord] = {}
    reports: list[IterationReport] = []
    stop = "max_iterations"
    try:
        for iteration in range(1, cfg.max_iterations + 1):
            plan = plan_iteration(model, cfg, used)
            snapshot = model.snapshot()
            executor.model = snapshot
            report, run_failures = executor.execute_tests(plan.tests, iteration)
            new_keys = [k for k in run_failures if k not in failures]
            learn = bool(new_keys)
            failures.update(run_failures)
            before = list(model.constraints())
            _, verdicts = analyze_failures(model, list(run_failures.values()), analyzer)
            added = [c for c in model.constraints() if c not in before]
            reports.append(
                IterationReport(
                    iteration=iteration,
                    counts=report.counts(),
                    issued=report.issued,
                    skipped=report.skipped,
                    tests=report.tests,
                    new_constraints=added,
                    new_failures=[run_failures[k] for k in new_keys],
                    cumulative_failures=len(failures),
                    verdicts=verdicts,
                    warnings=plan.warnings,
                    execution=report,
                )
            )
            log.info(
                "iteration %d: %d requests %s, %d new failures, %d new constraints",
                iteration, report.issued, report.counts(), len(new_keys), len(added),
            )
            if not learn:
                stop = "converged"
                break
            if executor.exhausted:
                stop = "hit_budget"
                break
    finally:
        if cfg.client is None:
            executor.close()
    return PipelineResult(model, reports, failures, stop, executor.issued)
