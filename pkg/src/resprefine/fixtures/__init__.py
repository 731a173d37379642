"""Hermetic mock services with known constraints, for end-to-end runs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from resprefine import constraints as C
from resprefine.fixtures.catalog import CATALOG, FixtureSpec, get_fixture
from resprefine.fixtures.server import Request, Response, Route, ServiceHandle, reply, start_server


def serve_fixture(spec: FixtureSpec | str, port: int = 0) -> ServiceHandle:
    """Start ``spec`` on ``port`` (0 picks a free one) with fresh state."""
    if isinstance(spec, str):
        spec = get_fixture(spec)
    return start_server(spec.routes(), port, spec.name)


@dataclass
class MatchReport:
    equivalent: list = field(default_factory=list)
    missing: list = field(default_factory=list)
    extra: list = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.missing

    def to_dict(self) -> dict:
        return {k: [C.to_dict(c) for c in getattr(self, k)] for k in ("equivalent", "missing", "extra")}


def ground_truth_check(learned: Iterable, truth: Iterable) -> MatchReport:
    """Compare constraint sets; group arguments are already order-free."""
    learned_set = list(dict.fromkeys(learned))
    truth_set = list(dict.fromkeys(truth))
    report = MatchReport()
    for t in truth_set:
        (report.equivalent if t in learned_set else report.missing).append(t)
    report.extra = [c for c in learned_set if c not in truth_set]
    return report


__all__ = [
    "CATALOG",
    "FixtureSpec",
    "MatchReport",
    "Request",
    "Response",
    "Route",
    "ServiceHandle",
    "get_fixture",
    "ground_truth_check",
    "reply",
    "serve_fixture",
]
