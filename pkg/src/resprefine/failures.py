"""Failure records: what the executor logs and the analyzer consumes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from resprefine.analyzer.normalize import extract_message, normalize_message


@dataclass(frozen=True)
class FailureRecord:
    op_id: str
    status: int
    message: str
    normalized_message: str
    request_snapshot: dict = field(default_factory=dict, compare=False, hash=False)
    raw_body: str = field(default="", compare=False, hash=False)

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.op_id, self.status, self.normalized_message)

    @property
    def is_blank(self) -> bool:
        return not self.message.strip()

    @classmethod
    def from_response(cls, op_id: str, status: int, body: str, snapshot: dict | None = None) -> "FailureRecord":
        message = extract_message(body)
        return cls(op_id, status, message, normalize_message(message), dict(snapshot or {}), body)

    def to_dict(self) -> dict[str, Any]:
        return {
            "op_id": self.op_id,
            "status": self.status,
            "message": self.message,
            "normalized_message": self.normalized_message,
            "request": self.request_snapshot,
        }
