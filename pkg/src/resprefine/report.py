"""Coverage metrics, defect listing and run-directory artifacts."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

from resprefine.engine import ExecutionReport
from resprefine.failures import FailureRecord
from resprefine.model import SpecModel

REPORT_VERSION = 1
CLASSES = ("2xx", "3xx", "4xx", "5xx", "other")

_FRAME = re.compile(r"^\s*at\s+[\w$.<>/-]+\(.*\)", re.MULTILINE)


def has_stack_trace(body: str) -> bool:
    if not body:
        return False
    return len(_FRAME.findall(body)) >= 2 or "Traceback" in body or "Exception" in body


@dataclass
class DefectRecord:
    op_id: str
    status: int
    normalized_message: str
    has_stack_trace: bool
    request: dict = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.op_id, self.status, self.normalized_message)


@dataclass
class IterationStats:
    iteration: int
    issued: int
    counts: dict[str, int]

    def share(self, cls: str) -> float:
        return self.counts.get(cls, 0) / self.issued if self.issued else 0.0


@dataclass
class Metrics:
    operations: int
    oc: float
    oc_2xx: float
    hits: int
    iterations: list[IterationStats] = field(default_factory=list)
    defects: list[DefectRecord] = field(default_factory=list)
    covered: list[str] = field(default_factory=list)
    covered_2xx: list[str] = field(default_factory=list)
    report_version: int = REPORT_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "Metrics":
        version = doc.get("report_version")
        if version != REPORT_VERSION:
            raise ValueError(f"unsupported report_version {version!r}")
        data = dict(doc)
        data["iterations"] = [IterationStats(**it) for it in doc.get("iterations", [])]
        data["defects"] = [DefectRecord(**d) for d in doc.get("defects", [])]
        return cls(**data)

    def invariant_violations(self) -> list[str]:
        out = []
        if not 0 <= self.oc_2xx <= self.oc <= 100:
            out.append(f"expected 0 <= oc_2xx ({self.oc_2xx}) <= oc ({self.oc}) <= 100")
        issued = sum(it.issued for it in self.iterations)
        if issued != self.hits:
            out.append(f"hits {self.hits} differ from issued requests {issued}")
        for it in self.iterations:
            if sum(it.counts.values()) != it.issued:
                out.append(f"iteration {it.iteration}: counts do not add up to {it.issued}")
        keys = [d.key for d in self.defects]
        if len(keys) != len(set(keys)):
            out.append("duplicate defect records")
        return out


def _pct(n: int, d: int) -> float:
    return round(100.0 * n / d, 2) if d else 0.0


def compute_metrics(reports: Sequence[ExecutionReport], model: SpecModel) -> Metrics:
    """Coverage over the operations the document started with, deleted ones included."""
    total = len(model.original_operations) or len(model.operations)
    ok: set[str] = set()
    reached: set[str] = set()
    defects: dict[tuple, DefectRecord] = {}
    iterations = []
    for rep in reports:
        iterations.append(IterationStats(rep.iteration, rep.issued, rep.counts()))
        for r in rep.records:
            if 200 <= r.status < 300:
                ok.add(r.op_id)
                reached.add(r.op_id)
            elif 500 <= r.status < 600:
                reached.add(r.op_id)
                f = FailureRecord.from_response(r.op_id, r.status, r.body, r.request)
                if f.key not in defects:
                    defects[f.key] = DefectRecord(
                        r.op_id, r.status, f.normalized_message, has_stack_trace(r.body), dict(r.request)
                    )
    return Metrics(
        operations=total,
        oc=_pct(len(reached), total),
        oc_2xx=_pct(len(ok), total),
        hits=sum(rep.issued for rep in reports),
        iterations=iterations,
        defects=sorted(defects.values(), key=lambda d: d.key),
        covered=sorted(reached),
        covered_2xx=sorted(ok),
    )


def render_text(m: Metrics) -> str:
    lines = [
        f"operations: {m.operations}",
        f"oc: {m.oc:.2f}%   oc_2xx: {m.oc_2xx:.2f}%   hits: {m.hits}",
        "",
        f"{'iter':>4} {'issued':>7} {'2xx':>5} {'3xx':>5} {'4xx':>5} {'5xx':>5} {'other':>5} {'%2xx':>7} {'%4xx':>7} {'%5xx':>7}",
    ]
    for it in m.iterations:
        c = it.counts
        lines.append(
            f"{it.iteration:>4} {it.issued:>7} "
            + " ".join(f"{c.get(k, 0):>5}" for k in CLASSES)
            + " "
            + " ".join(f"{100 * it.share(k):>6.1f}%" for k in ("2xx", "4xx", "5xx"))
        )
    lines.append("")
    lines.append(f"defects: {len(m.defects)} unique 5xx ({sum(d.has_stack_trace for d in m.defects)} with a stack trace)")
    for d in m.defects:
        trace = " [trace]" if d.has_stack_trace else ""
        lines.append(f"  {d.op_id} {d.status}: {d.normalized_message[:100]}{trace}")
    return "\n".join(lines) + "\n"


def emit_report(m: Metrics, format: str = "json", path: Union[str, Path, None] = None) -> str:
    """Render ``m`` as JSON or text; also written to ``path`` when given."""
    if format == "json":
        out = json.dumps(m.to_dict(), indent=2, sort_keys=True) + "\n"
    elif format == "text":
        out = render_text(m)
    else:
        raise ValueError(f"unknown report format {format!r}")
    if path is not None:
        Path(path).write_text(out)
    return out


def parse_report(text: str) -> Metrics:
    return Metrics.from_dict(json.loads(text))


# -- run directories ---------------------------------------------------------

METRICS_FILE = "metrics.json"
SUMMARY_FILE = "summary.txt"
REQUESTS_FILE = "requests.jsonl"
SPEC_FILE = "refined_spec.json"
DEFECTS_FILE = "defects.json"
ITERATIONS_DIR = "iterations"


def write_run(result: Any, out_dir: Union[str, Path], metrics: Optional[Metrics] = None) -> Metrics:
    """Persist a pipeline result; returns the metrics that were written."""
    out = Path(out_dir)
    (out / ITERATIONS_DIR).mkdir(parents=True, exist_ok=True)
    executions = result.executions()
    metrics = metrics or compute_metrics(executions, result.model)
    (out / SPEC_FILE).write_text(result.model.dumps())
    for rep in result.reports:
        doc = rep.to_dict()
        if rep.execution is not None:
            doc["execution"] = rep.execution.summary()
        (out / ITERATIONS_DIR / f"iteration_{rep.iteration:02d}.json").write_text(json.dumps(doc, indent=2, default=str))
    with (out / REQUESTS_FILE).open("w") as fh:
        for rep in executions:
            for r in rep.records:
                fh.write(json.dumps(r.to_dict(), default=str) + "\n")
    (out / DEFECTS_FILE).write_text(json.dumps([asdict(d) for d in metrics.defects], indent=2))
    run = {"stop_reason": result.stop_reason, "iterations": result.iterations, "hits": result.hits}
    (out / "run.json").write_text(json.dumps(run, indent=2))
    emit_report(metrics, "json", out / METRICS_FILE)
    emit_report(metrics, "text", out / SUMMARY_FILE)
    return metrics


def load_run(run_dir: Union[str, Path]) -> Metrics:
    return parse_report((Path(run_dir) / METRICS_FILE).read_text())


def run_violations(run_dir: Union[str, Path]) -> list[str]:
    """Metric invariants, plus agreement between the metrics and the request log."""
    run_dir = Path(run_dir)
    m = load_run(run_dir)
    out = m.invariant_violations()
    log_path = run_dir / REQUESTS_FILE
    if log_path.exists():
        with log_path.open() as fh:
            logged = sum(1 for line in fh if line.strip())
        if logged != m.hits:
            out.append(f"request log holds {logged} entries but hits is {m.hits}")
    return out


def iteration_shares(m: Metrics, cls: str) -> list[float]:
    return [it.share(cls) for it in m.iterations]


def defects_from(records: Iterable[FailureRecord]) -> list[DefectRecord]:
    out: dict[tuple, DefectRecord] = {}
    for f in records:
        if 500 <= f.status < 600 and f.key not in out:
            out[f.key] = DefectRecord(f.op_id, f.status, f.normalized_message, has_stack_trace(f.raw_body), f.request_snapshot)
    return sorted(out.values(), key=lambda d: d.key)
