"""Deterministic pattern rules mapping (message, status) to a constraint category."""

from __future__ import annotations

import re
from typing import Optional

from resprefine.analyzer import entities as E
from resprefine.constraints import ConstraintCategory as Cat
from resprefine.errors import NoConditionalMarker


def _rx(*alternatives: str) -> re.Pattern:
    return re.compile("|".join(f"(?:{a})" for a in alternatives), re.I)


AUTH = _rx(
    r"\bapi[ _-]?key\b",
    r"\bunauthori[sz]ed\b",
    r"\bunauthenticated\b",
    r"\bcredentials?\b",
    r"\b(?:access|auth|bearer|oauth)[ _-]?token\b",
    r"\bforbidden\b",
    r"\bauthenticat\w*\b",
    r"\bpermission denied\b",
    r"\blog ?in required\b",
    r"\bnot authori[sz]ed\b",
)
UNSUPPORTED = _rx(
    r"\bmethod not allowed\b",
    r"\brequest method\b.*\bnot supported\b",
    r"\bmethod\b.*\bis not supported\b",
    r"\bunsupported (?:operation|method)\b",
    r"\boperation (?:is )?not supported\b",
)
UNKNOWN_PARAM = _rx(
    r"\bunknown (?:query |body |request )?(?:parameter|field|property|argument|attribute)s?\b",
    r"\bunrecogni[sz]ed (?:query |body )?(?:parameter|field|property|argument|attribute)s?\b",
    r"\bunexpected (?:parameter|field|property|argument)s?\b",
    r"\badditional propert(?:y|ies)\b.*\bnot allowed\b",
    r"\b(?:parameter|field|property)\b.*\bis not (?:recogni[sz]ed|supported|allowed|permitted)\b",
    r"\binvalid (?:parameter|field|property) name\b",
    r"\bnot a (?:recogni[sz]ed|known|valid) (?:parameter|field|property|argument)\b",
)
ONE = _rx(
    r"\bnot both\b",
    r"\bonly one of\b",
    r"\bexactly one of\b",
    r"\bmutually exclusive\b",
    r"\bat most one of\b",
    r"\bcannot (?:be )?(?:used|specified|provided|combined) together\b",
    r"\bcannot (?:specify|provide|use) both\b",
    r"\bone and only one\b",
)
OR = _rx(
    r"\beither\b.+\bor\b",
    r"\bat least one of\b",
    r"\bone of\b.+\b(?:is|are|must be) (?:required|specified|provided|present)\b",
    r"\b(?:must|should) (?:specify|provide|include|supply) (?:one of|either)\b",
    r"\bneither\b.+\bnor\b",
)
ALL_OR_NONE = _rx(
    r"\b(?:should|must|has to|needs to) be (?:specified|provided|given|sent|supplied) (?:along )?with\b",
    r"\b(?:must|should) be (?:specified|provided|used|given|sent) together\b",
    r"\ball or none\b",
    r"\b(?:all|both) of\b.+\bor none\b",
    r"\brequires? all of\b",
)
MANDATORY = _rx(
    r"\bis a required (?:parameter|field|property|argument)\b",
    r"\b(?:is|are) (?:required|mandatory)\b",
    r"\brequired (?:parameter|field|property|argument)\b.*\b(?:missing|not (?:present|provided|specified|given))\b",
    r"\bmissing (?:required )?(?:parameter|field|property|argument|value)\b",
    r"\b(?:is|are) missing\b",
    r"\b(?:must|should) (?:be (?:specified|provided|present|given|supplied)|not be (?:empty|blank|null))\b",
    r"\b(?:cannot|can't|may not) be (?:empty|blank|null|omitted)\b",
    r"\bno (?:value|\w+) (?:was )?(?:provided|specified|given|supplied)\b",
    r"\brequired\b$",
)
NOT_FOUND = _rx(
    r"\bnot ?found\b",
    r"NotFound\b",
    r"\bcould not be found\b",
    r"\b(?:does not|doesn't) exist\b",
    r"\bno such\b",
    r"\bunknown \w+ id\b",
)
DATA_NON_ARITH = _rx(
    r"\bis not a valid\b",
    r"\bnot a valid\b",
    r"\binvalid (?:value|format|\w+ (?:format|address|value))\b",
    r"\b(?:must|should) be a valid\b",
    r"\b(?:supported|allowed|accepted|permitted|possible) values?\b",
    r"\b(?:must|should) be one of\b",
    r"\bexpected one of\b",
    r"\balready (?:in use|exists?|taken|registered|used)\b",
    r"\b(?:must|should) be unique\b",
    r"\bduplicate\b",
    r"\bdoes not match (?:the )?(?:pattern|format|regex)\b",
    r"\bwrong format\b",
)
CONDITIONAL_START = re.compile(r"^\s*(?:if|when|whenever|in case)\b", re.I)
CONDITIONAL_INNER = re.compile(r"\s(?:if|when)\s+\S+.*\b(?:is|are)?\s*(?:specified|provided|present|given|set|absent|missing|used|\S+['\"`’])", re.I)
REQUIRES = re.compile(r"^\s*[\"'`‘“]?[A-Za-z_][\w.]*[\"'`’”]?\s+(?:parameter\s+)?requires?\s+(?!auth|a valid|an? )", re.I)


def _is_conditional(message: str) -> bool:
    return bool(CONDITIONAL_START.match(message) or CONDITIONAL_INNER.search(message) or REQUIRES.match(message))


def nested_category(message: str) -> Cat:
    """8, 12 or 13 for a conditional message, from the shape of its two halves."""
    try:
        ante, cons = E.split_conditional(message)
    except NoConditionalMarker:
        return Cat.CONDITIONAL_PARAMETER_REQUIRED
    ante_data = bool(E._DATA_EQ.search(ante)) or (E.find_comparator(ante) is not None)
    if ante_data and not re.search(r"\bpresent\b", ante, re.I):
        return Cat.DATA_INFLUENCED_PARAM_SELECTION
    if E._MUST_VALUE.search(cons) or E.find_comparator(cons) is not None or DATA_NON_ARITH.search(cons):
        return Cat.PARAMETER_INFLUENCED_DATA_VALUES
    return Cat.CONDITIONAL_PARAMETER_REQUIRED


def data_category(message: str) -> Optional[Cat]:
    if DATA_NON_ARITH.search(message):
        return Cat.DATA_NON_ARITHMETIC
    if E.find_comparator(message) is not None:
        return Cat.DATA_ARITHMETIC
    return None


def classify_text(message: str, status: int) -> tuple[Cat, str]:
    """(category, rule name). Never raises; unmatched input is Unhandled."""
    text = (message or "").strip()
    if status in (401, 403):
        return Cat.CONFIGURATION_AUTHENTICATION, "status-auth"
    if status == 405 or UNSUPPORTED.search(text):
        return Cat.UNSUPPORTED_OPERATION, "unsupported"
    if AUTH.search(text):
        return Cat.CONFIGURATION_AUTHENTICATION, "auth-words"
    if status >= 500 or status == 0:
        cat = data_category(text) if status >= 500 else None
        return (cat, "5xx-data") if cat else (Cat.UNHANDLED, "server-error")
    if not text:
        return Cat.UNHANDLED, "blank"
    if status == 404:
        return Cat.PRODUCER_CONSUMER, "status-404"
    if UNKNOWN_PARAM.search(text):
        return Cat.PARAMETER_UNKNOWN, "unknown-param"
    if _is_conditional(text):
        return nested_category(text), "conditional"
    if ONE.search(text):
        return Cat.ONE, "one"
    if OR.search(text):
        return Cat.OR, "or"
    if ALL_OR_NONE.search(text):
        return Cat.ALL_OR_NONE, "all-or-none"
    cat = data_category(text)
    if cat is Cat.DATA_NON_ARITHMETIC:
        return cat, "data-non-arith"
    if MANDATORY.search(text):
        return Cat.ADDITIONAL_MANDATORY, "mandatory"
    if cat is Cat.DATA_ARITHMETIC:
        return cat, "data-arith"
    if NOT_FOUND.search(text):
        return Cat.PRODUCER_CONSUMER, "not-found"
    return Cat.UNHANDLED, "fallthrough"
