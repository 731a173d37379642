"""Mask literal values in error messages so equal failures compare equal."""

from __future__ import annotations

import html
import json
import re

_UUID = re.compile(r"\b[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}\b")
_EMAIL = re.compile(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}")
_QUOTED = re.compile(
    r"""(?<![\w])'[^'\n]*'(?![\w])"""
    r"""|"[^"\n]*\""""
    r"""|`[^`'\n]*[`']"""
    r"""|‘[^’\n]*’|“[^”\n]*”"""
)
_NUMBER = re.compile(r"(?<![\w⟩.])[-+]?\d+(?:\.\d+)?(?![\w.]\w)")
_TAG = re.compile(r"<[^>]+>")
_SPACE = re.compile(r"\s+")

MESSAGE_KEYS = ("message", "error", "detail", "details", "description", "title", "msg", "error_description", "errors")


def strip_html(text: str) -> str:
    if "<" not in text or ">" not in text:
        return text
    text = re.sub(r"(?is)<(script|style)\b.*?</\1>", " ", text)
    return html.unescape(_TAG.sub(" ", text))


def _collect(value, out: list[str]) -> None:
    if isinstance(value, str):
        out.append(value)
    elif isinstance(value, list):
        for v in value:
            _collect(v, out)
    elif isinstance(value, dict):
        picked = False
        for key in MESSAGE_KEYS:
            if key in value:
                _collect(value[key], out)
                picked = True
        if not picked:
            for v in value.values():
                if isinstance(v, (str, dict, list)):
                    _collect(v, out)


def extract_message(body: str) -> str:
    """Human-readable message text from a response body (JSON, HTML or plain)."""
    body = body or ""
    stripped = body.strip()
    if stripped[:1] in "{[":
        try:
            data = json.loads(stripped)
        except ValueError:
            pass
        else:
            parts: list[str] = []
            _collect(data, parts)
            if parts:
                return _SPACE.sub(" ", " ".join(parts)).strip()
    return _SPACE.sub(" ", strip_html(body)).strip()


def normalize_message(message: str) -> str:
    """Replace UUIDs, emails, quoted literals and numbers with typed placeholders."""
    text = _UUID.sub("⟨UUID⟩", message or "")
    text = _EMAIL.sub("⟨EMAIL⟩", text)
    text = _QUOTED.sub("⟨STR⟩", text)
    text = _NUMBER.sub("⟨NUM⟩", text)
    return _SPACE.sub(" ", text).strip()
