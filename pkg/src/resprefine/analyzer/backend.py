"""Pluggable analysis backends.

The rule-based backend is always first in the chain. An inference service
(any HTTP endpoint speaking the small JSON contract below) is consulted only
when the rules give up.

Request body::

    {"task": "classify" | "extract_entities" | "extract_relation" |
             "producer_consumer" | "generate_values",
     "message": ..., "status": ..., "context": {...}}

Response body carries one of ``category``, ``entities``, ``relation``,
``pair`` or ``values``.
"""

from __future__ import annotations

import logging
import os
import time
from typing import Any, Optional, Protocol, Sequence

import httpx

from resprefine import constraints as C
from resprefine.analyzer import entities as E
from resprefine.analyzer.rules import classify_text
from resprefine.constraints import ConstraintCategory as Cat
from resprefine.errors import BackendUnavailable
from resprefine.model import InputParameter

log = logging.getLogger(__name__)

URL_ENV = "RESPREFINE_INFERENCE_URL"
KEY_ENV = "RESPREFINE_INFERENCE_KEY"


class AnalyzerBackend(Protocol):
    name: str

    def classify(self, message: str, status: int, context: dict) -> Optional[Cat]: ...

    def extract_entities(self, message: str, candidates: Sequence[InputParameter]) -> list[str]: ...

    def extract_relation(self, message: str, targets: Sequence[str], candidates: Sequence[InputParameter]) -> Any: ...

    def producer_consumer(self, message: str, context: dict) -> Optional[C.ProducerConsumer]: ...


class RuleBased:
    name = "rules"

    def classify(self, message: str, status: int, context: dict | None = None) -> Cat:
        return classify_text(message, status)[0]

    def extract_entities(self, message: str, candidates: Sequence[InputParameter]) -> list[str]:
        matches = E.match_parameters(message, candidates)
        matches.sort(key=lambda m: (-m.score, m.param.id))
        return [m.param.id for m in matches]

    def extract_relation(self, message, targets, candidates):
        return E.extract_relational_constraint(message, targets, candidates)

    def producer_consumer(self, message: str, context: dict) -> Optional[C.ProducerConsumer]:
        return None


class InferenceService:
    """Client for an external text-generation endpoint."""

    name = "inference"

    def __init__(
        self,
        url: str,
        api_key: Optional[str] = None,
        timeout: float = 10.0,
        retries: int = 2,
        client: Optional[httpx.Client] = None,
    ) -> None:
        self.url = url
        self.api_key = api_key
        self.timeout = timeout
        self.retries = retries
        self._client = client or httpx.Client(timeout=timeout)

    @classmethod
    def from_env(cls, url: Optional[str] = None, **kwargs) -> Optional["InferenceService"]:
        url = url or os.environ.get(URL_ENV)
        if not url:
            return None
        return cls(url, api_key=os.environ.get(KEY_ENV), **kwargs)

    def _post(self, task: str, message: str, status: int = 0, context: dict | None = None) -> dict:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        body = {"task": task, "message": message, "status": status, "context": context or {}}
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.post(self.url, json=body, headers=headers, timeout=self.timeout)
                resp.raise_for_status()
                data = resp.json()
                if not isinstance(data, dict):
                    raise ValueError("inference response is not an object")
                return data
            except (httpx.HTTPError, ValueError) as exc:
                last = exc
                log.debug("inference %s attempt %d failed: %s", task, attempt + 1, exc)
                if attempt < self.retries:
                    time.sleep(min(0.2 * 2**attempt, 2.0))
        raise BackendUnavailable(f"{self.url}: {last}")

    def classify(self, message: str, status: int, context: dict | None = None) -> Optional[Cat]:
        value = self._post("classify", message, status, context).get("category")
        if value is None:
            return None
        if isinstance(value, int) or (isinstance(value, str) and value.isdigit()):
            return Cat(int(value))
        key = str(value).upper().replace("-", "_").replace(" ", "_")
        return Cat[key] if key in Cat.__members__ else None

    def extract_entities(self, message: str, candidates: Sequence[InputParameter]) -> list[str]:
        ctx = {"candidates": [{"id": p.id, "name": p.pname, "type": p.ptype} for p in candidates]}
        known = {p.id for p in candidates}
        ents = self._post("extract_entities", message, context=ctx).get("entities") or []
        return [e for e in ents if e in known]

    def extract_relation(self, message, targets, candidates):
        ctx = {"targets": list(targets), "candidates": [p.id for p in candidates]}
        rel = self._post("extract_relation", message, context=ctx).get("relation")
        return C.from_dict(rel) if rel else None

    def producer_consumer(self, message: str, context: dict) -> Optional[C.ProducerConsumer]:
        pair = self._post("producer_consumer", message, context=context).get("pair")
        if not pair:
            return None
        return C.ProducerConsumer(
            pair["producer_op"], pair["producer_param"], pair["consumer_op"], pair["consumer_param"]
        )

    def generate_values(self, parameters: list[dict], constraints: list[str], count: int) -> list[dict]:
        ctx = {"parameters": parameters, "constraints": constraints, "count": count}
        values = self._post("generate_values", "", context=ctx).get("values") or []
        return [v for v in values if isinstance(v, dict)]
