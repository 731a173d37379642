"""Command-line entry point: ``run``, ``report`` and ``fixtures``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from resprefine.errors import ConnectivityError, RefineError
from resprefine.fixtures import CATALOG, get_fixture, serve_fixture
from resprefine.pipeline import PipelineConfig, pipeline
from resprefine.report import emit_report, load_run, run_violations, write_run

log = logging.getLogger("resprefine")


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = PipelineConfig.from_files(
        args.spec,
        args.exec_params,
        seed=args.seed,
        hit_budget=args.hit_budget,
        max_iterations=args.max_iterations,
        inference_url=args.inference_url,
    )
    try:
        result = pipeline(cfg)
    except ConnectivityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out or f"runs/run-{time.strftime('%Y%m%d-%H%M%S')}")
    metrics = write_run(result, out)
    sys.stdout.write(emit_report(metrics, "text"))
    print(f"stop: {result.stop_reason} after {result.iterations} iteration(s); artifacts in {out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        metrics = load_run(args.run_dir)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read run directory {args.run_dir}: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(emit_report(metrics, args.format))
    problems = run_violations(args.run_dir)
    for p in problems:
        print(f"invariant violated: {p}", file=sys.stderr)
    return 2 if problems else 0


def _cmd_fixtures_list(args: argparse.Namespace) -> int:
    for name in sorted(CATALOG):
        spec = get_fixture(name)
        cats = ",".join(str(c.value) for c in sorted(spec.categories, key=lambda c: c.value)) or "-"
        print(f"{name:<12} ops={spec.operation_count:<3} categories={cats:<8} {spec.description}")
    return 0


def _cmd_fixtures_serve(args: argparse.Namespace) -> int:
    spec = get_fixture(args.name)
    if args.write_spec:
        Path(args.write_spec).write_text(json.dumps(spec.document, indent=2))
    handle = serve_fixture(spec, args.port)
    print(f"fixture {spec.name} listening on {handle.url} (Ctrl-C to stop)", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        handle.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resprefine", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="iteratively test an API and refine its specification")
    run.add_argument("--spec", required=True, help="OpenAPI 2.0/3.x document (JSON or YAML)")
    run.add_argument("--exec-params", required=True, help="JSON file with base_url, headers, timeout_s, ...")
    run.add_argument("--seed", type=int)
    run.add_argument("--hit-budget", type=int)
    run.add_argument("--max-iterations", type=int)
    run.add_argument("--inference-url")
    run.add_argument("--out", help="run directory (default: runs/run-<timestamp>)")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="render a saved run directory")
    rep.add_argument("run_dir")
    rep.add_argument("--format", choices=("text", "json"), default="text")
    rep.set_defaults(func=_cmd_report)

    fx = sub.add_parser("fixtures", help="scripted mock services")
    fsub = fx.add_subparsers(dest="fixtures_command", required=True)
    fsub.add_parser("list").set_defaults(func=_cmd_fixtures_list)
    serve = fsub.add_parser("serve")
    serve.add_argument("name", choices=sorted(CATALOG))
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--write-spec", help="also write the fixture's OpenAPI document here")
    serve.set_defaults(func=_cmd_fixtures_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (RefineError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
