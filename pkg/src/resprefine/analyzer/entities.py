"""Entity extraction: which parameters, operations and values a message talks about."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from resprefine import constraints as C
from resprefine.analyzer.text import (
    NUMBER_WORDS,
    message_words,
    norm,
    overlap,
    singular,
    split_identifier,
)
from resprefine.errors import AmbiguousRelation, NoConditionalMarker, NoProducerFound, NoTargetFound
from resprefine.model import InputParameter, Loc, Operation, SpecModel

SIMILARITY_THRESHOLD = 0.6


@dataclass(frozen=True)
class Match:
    param: InputParameter
    score: float
    pos: int


def _names(p: InputParameter) -> list[str]:
    leaf = p.pname.rsplit(".", 1)[-1]
    return [p.pname] if leaf == p.pname else [p.pname, leaf]


def _exact_pos(message: str, name: str, flags: int = 0) -> int:
    m = re.search(rf"(?<![A-Za-z0-9_]){re.escape(name)}(?![A-Za-z0-9_])", message, flags)
    return m.start() if m else -1


def _normalized_pos(message: str, name: str) -> int:
    target = norm(name)
    if not target:
        return -1
    words = [(w.group(0), w.start()) for w in re.finditer(r"[A-Za-z0-9_]+", message)]
    for i in range(len(words)):
        joined = ""
        for j in range(i, min(i + 3, len(words))):
            joined += norm(words[j][0])
            if joined == target:
                return words[i][1]
    return -1


def match_parameters(message: str, candidates: Sequence[InputParameter]) -> list[Match]:
    """Score candidates against the message, tier by tier.

    Tier 1 is exact or case/underscore-insensitive name occurrence; tier 2 is
    token overlap at or above the similarity threshold. The first tier with
    any hit wins.
    """
    tier1: list[Match] = []
    for p in candidates:
        best: Optional[Match] = None
        for name in _names(p):
            pos = _exact_pos(message, name)
            if pos >= 0:
                best = Match(p, 1.0, pos)
                break
            pos = _exact_pos(message, name, re.IGNORECASE)
            if pos < 0:
                pos = _normalized_pos(message, name)
            if pos >= 0 and best is None:
                best = Match(p, 0.95, pos)
        if best is not None:
            tier1.append(best)
    if tier1:
        return tier1
    words = message_words(message)
    plain = [w for w, _ in words]
    tier2: list[Match] = []
    for p in candidates:
        score = max(overlap(name, plain) for name in _names(p))
        if score >= SIMILARITY_THRESHOLD:
            toks = split_identifier(p.pname)
            pos = next((i for w, i in words if any(singular(t) == w or w.startswith(singular(t)) for t in toks)), 0)
            tier2.append(Match(p, 0.9 * score, pos))
    return tier2


def identify_target_parameters(message: str, candidates: Sequence[InputParameter], backend=None) -> list[str]:
    """Candidate ids referred to by ``message``, best first (ties: lexicographic id)."""
    if not candidates:
        raise NoTargetFound("no candidate parameters")
    matches = match_parameters(message, candidates)
    if not matches and backend is not None:
        ids = backend.extract_entities(message, list(candidates))
        if ids:
            return ids
    if not matches:
        raise NoTargetFound(message)
    matches.sort(key=lambda m: (-m.score, m.param.id))
    return [m.param.id for m in matches]


# -- relational constraints --------------------------------------------------

_COMPARATORS: list[tuple[str, str]] = [
    (r"(?:greater|more|larger|higher|bigger|later) than or equal(?: to)?", ">="),
    (r"(?:less|lower|smaller|fewer|earlier) than or equal(?: to)?", "<="),
    (r"at least|no less than|not less than|minimum of", ">="),
    (r"at most|no more than|not more than|maximum of", "<="),
    (r"(?:greater|more|larger|higher|bigger|later) than|surpass\w*|exceed\w*|above|after", ">"),
    (r"(?:less|lower|smaller|fewer|earlier) than|below|before|precede\w*", "<"),
    (r"not equal(?: to)?|unequal(?: to)?|differ\w*(?: from)?", "!="),
    (r"equal(?:s)?(?: to)?|same as|match(?:es)?", "="),
]
_COMPARATOR_RE = re.compile("|".join(f"(?P<c{i}>\\b(?:{p})\\b)" for i, (p, _) in enumerate(_COMPARATORS)), re.I)
_NEGATION = re.compile(r"\b(?:cannot|can't|can not|must not|mustn't|should not|shouldn't|may not|not)\s+(?:be\s+)?$", re.I)

_QUOTED_VALUE = re.compile(r"""['"`‘“]([^'"`’”]*)['"`’”]""")
_NUMBER = re.compile(r"[-+]?\d+(?:\.\d+)?")


def find_comparator(message: str) -> Optional[tuple[str, int, int]]:
    """First comparison phrase as (relop, start, end), negation folded in."""
    m = _COMPARATOR_RE.search(message)
    if not m:
        return None
    idx = int(m.lastgroup[1:])
    relop = _COMPARATORS[idx][1]
    if _NEGATION.search(message[: m.start()]):
        relop = C.NEGATED_RELOP[relop]
    return relop, m.start(), m.end()


def _constant_after(text: str):
    q = _QUOTED_VALUE.search(text)
    n = _NUMBER.search(text)
    if q and (not n or q.start() < n.start()):
        return q.group(1)
    if n:
        v = n.group(0)
        return float(v) if "." in v else int(v)
    for w in re.findall(r"[A-Za-z]+", text):
        if w.lower() in NUMBER_WORDS:
            return NUMBER_WORDS[w.lower()]
    return None


CATEGORICAL_MARKERS = re.compile(
    r"(?:supported|allowed|valid|accepted|possible|permitted) values?(?: are| is|:)?|must be one of|should be one of"
    r"|one of the following|expected one of|is not one of",
    re.I,
)
UNIQUE_MARKERS = re.compile(
    r"already (?:in use|exists?|taken|registered|used)|must be unique|should be unique|duplicate", re.I
)
FORMAT_WORDS = {
    "email": "email",
    "e-mail": "email",
    "url": "uri",
    "uri": "uri",
    "uuid": "uuid",
    "date": "date",
    "datetime": "date-time",
    "date-time": "date-time",
    "timestamp": "date-time",
    "ipv4": "ipv4",
    "ip": "ipv4",
}
_FORMAT_RE = re.compile(
    r"(?:must|should) be a valid (?P<a>[\w-]+)|invalid (?P<b>[\w-]+) (?:format|address)|not a valid (?P<c>[\w-]+)", re.I
)


def _value_list(text: str) -> list:
    quoted = _QUOTED_VALUE.findall(text)
    if quoted:
        return [q for q in quoted]
    text = re.split(r"[.;]\s", text, maxsplit=1)[0]
    text = text.strip(" :[](){}.")
    items = re.split(r"\s*(?:,|\bor\b|\band\b|\|)\s*", text)
    return [i.strip(" '\"[]") for i in items if i.strip(" '\"[]")]


def extract_relational_constraint(message: str, targets: Sequence[str], candidates: Sequence[InputParameter] = ()):
    """Build a data constraint from a message whose targets are already known.

    ``targets`` may be given in any order; operand positions come from where
    each parameter is mentioned relative to the comparison phrase.
    """
    if not targets:
        raise AmbiguousRelation("no target parameters")
    by_id = {p.id: p for p in candidates}
    comp = find_comparator(message)
    cat = CATEGORICAL_MARKERS.search(message)
    if comp and not cat and not UNIQUE_MARKERS.search(message):
        relop, start, end = comp
        positioned = []
        for pid in targets:
            p = by_id.get(pid)
            pos = _position(message, p) if p is not None else _position_by_name(message, pid)
            positioned.append((pos, pid))
        positioned.sort()
        before = [pid for pos, pid in positioned if 0 <= pos < start]
        after = [pid for pos, pid in positioned if pos >= end]
        if before and after:
            return C.DataArithmetic(before[-1], relop, after[0], rhs_is_param=True)
        lhs = before[-1] if before else (after[0] if after else None)
        if lhs is None:
            raise AmbiguousRelation(message)
        const = _constant_after(message[end:])
        if const is None:
            raise AmbiguousRelation(message)
        return C.DataArithmetic(lhs, relop, const)
    target = targets[0]
    if cat:
        values = _value_list(message[cat.end():])
        if values:
            return C.DataNonArithmetic(target, "categorical", tuple(values))
    if UNIQUE_MARKERS.search(message):
        return C.DataNonArithmetic(target, "unique", ())
    fm = _FORMAT_RE.search(message)
    if fm:
        word = (fm.group("a") or fm.group("b") or fm.group("c") or "").lower()
        if word in FORMAT_WORDS:
            return C.DataNonArithmetic(target, "format", (FORMAT_WORDS[word],))
    p = by_id.get(target)
    if p is not None and p.pc.get("format") and re.search(r"\bformat\b", message, re.I):
        return C.DataNonArithmetic(target, "format", (p.pc["format"],))
    raise AmbiguousRelation(message)


def _position(message: str, p: InputParameter) -> int:
    found = match_parameters(message, [p])
    return found[0].pos if found else -1


def _position_by_name(message: str, pid: str) -> int:
    name = pid.rsplit(".", 1)[-1]
    pos = _exact_pos(message, name, re.IGNORECASE)
    return pos if pos >= 0 else _normalized_pos(message, name)


# -- nested (conditional) constraints -----------------------------------------

_IF_THEN = re.compile(r"^\s*(?:if|when|whenever|in case)\s+(?P<a>.+?)(?:\s*,?\s*then\s+|\s*,\s*)(?P<c>.+?)\s*\.?\s*$", re.I)
_IF_NO_COMMA = re.compile(
    r"^\s*(?:if|when|whenever)\s+(?P<a>.+?\b(?:specified|provided|present|given|set|supplied|sent|absent|missing))\s+(?P<c>.+?)\s*\.?\s*$",
    re.I,
)
_SUFFIX_IF = re.compile(r"^\s*(?P<c>.+?)\s+(?:if|when)\s+(?P<a>.+?)\s*\.?\s*$", re.I)
_REQUIRES = re.compile(r"^\s*(?P<a>.+?)\s+requires?\s+(?P<c>.+?)\s*\.?\s*$", re.I)

_PRESENCE_POS = re.compile(r"\b(?:is\s+|are\s+)?(?:specified|provided|present|given|set|supplied|sent|used|included)\b", re.I)
_PRESENCE_NEG = re.compile(
    r"\b(?:is\s+|are\s+)?(?:absent|missing|omitted|not\s+(?:specified|provided|present|given|set|supplied|sent|included))\b",
    re.I,
)
_DATA_EQ = re.compile(r"\b(?:is|equals|is equal to|is set to|==|=|has value|has the value)\s+(?P<v>['\"`‘“][^'\"`’”]*['\"`’”]|[-+]?\d+(?:\.\d+)?)", re.I)
_MUST_VALUE = re.compile(
    r"\b(?:must|should|has to|needs to)\s+(?:be|equal)\s+(?:set to\s+|equal to\s+)?(?P<v>['\"`‘“][^'\"`’”]*['\"`’”]|[-+]?\d+(?:\.\d+)?)",
    re.I,
)
_ONLY_ONE = re.compile(r"\bonly one\b|\bexactly one\b|\bnot both\b|\bmutually exclusive\b|\bat most one\b", re.I)
_AT_LEAST_ONE = re.compile(r"\bat least one\b|\beither\b|\bone of\b", re.I)
_ALL_OR_NONE = re.compile(r"\ball or none\b|\btogether\b|\bspecified with\b", re.I)
_REQUIRED_TOO = re.compile(
    r"\b(?:should|must|needs? to|has to)\s+(?:be\s+)?(?:too|also|as well)\b|\btoo\b|\bas well\b|\bis (?:also )?required\b|\bare (?:also )?required\b"
    r"|\bmust (?:also )?be (?:specified|provided|present|given|set)\b|\brequired\b",
    re.I,
)
_FORBIDDEN = re.compile(
    r"\b(?:must|should|can)\s*not\s+be\s+(?:specified|provided|present|given|set|used)\b|\bcannot be (?:specified|provided|used)\b|\bnot allowed\b",
    re.I,
)
_OTHER = re.compile(r"\b(?:the\s+)?other(?:\s+(?P<n>\w+))?\s+(?:parameters?|fields?|options?)\b", re.I)


def _strip_quotes(v: str):
    v = v.strip()
    if v[:1] in "'\"`‘“":
        return v[1:-1]
    return float(v) if "." in v else int(v)


def split_conditional(message: str) -> tuple[str, str]:
    """(antecedent, consequent) halves of a conditional sentence."""
    for pattern in (_IF_THEN, _IF_NO_COMMA, _REQUIRES, _SUFFIX_IF):
        m = pattern.match(message)
        if m:
            return m.group("a"), m.group("c")
    raise NoConditionalMarker(message)


def has_conditional_marker(message: str) -> bool:
    return bool(re.match(r"^\s*(?:if|when|whenever|in case)\b", message, re.I)) or bool(
        re.search(r"\s(?:if|when)\s", message, re.I)
    ) or bool(_REQUIRES.match(message) and not re.search(r"\bis required\b|\bare required\b", message, re.I))


def _antecedent(text: str, candidates: Sequence[InputParameter]):
    """Either a data test (DataArithmetic) or a presence test (Present)."""
    matches = match_parameters(text, candidates)
    if not matches:
        raise NoConditionalMarker(f"no parameter in antecedent {text!r}")
    matches.sort(key=lambda m: (m.pos, -m.score))
    p = matches[0].param
    eq = _DATA_EQ.search(text)
    if eq and "present" not in text.lower():
        return C.DataArithmetic(p.id, "=", _strip_quotes(eq.group("v")))
    comp = find_comparator(text)
    if comp:
        try:
            return extract_relational_constraint(text, [m.param.id for m in matches], candidates)
        except AmbiguousRelation:
            pass
    if _PRESENCE_NEG.search(text):
        return C.Present(p.id, False)
    return C.Present(p.id, True)


def _rest_parameters(text: str, op: Operation, exclude: set[str]) -> list[str]:
    others = [p for p in op.live_inputs if p.id not in exclude]
    optional = [p for p in others if not p.is_required]
    m = _OTHER.search(text)
    count = None
    if m and m.group("n"):
        word = m.group("n").lower()
        count = int(word) if word.isdigit() else {"two": 2, "three": 3, "four": 4}.get(word)
    pool = optional if optional and (count is None or len(optional) == count) else others
    return sorted(p.id for p in pool)


def _consequent(text: str, op: Operation, antecedent_ids: set[str]):
    """Either a selection constraint or a data constraint over the op's params."""
    candidates = [p for p in op.live_inputs]
    value = _MUST_VALUE.search(text)
    matches = match_parameters(text, [p for p in candidates if p.id not in antecedent_ids])
    matches.sort(key=lambda m: (m.pos, -m.score))
    ids = [m.param.id for m in matches]
    if value and ids:
        return C.DataArithmetic(ids[0], "=", _strip_quotes(value.group("v")))
    if _OTHER.search(text) and not ids:
        ids = _rest_parameters(text, op, antecedent_ids)
    if _ONLY_ONE.search(text):
        if len(ids) >= 2:
            return C.One(tuple(ids))
    elif _ALL_OR_NONE.search(text) and len(ids) >= 2:
        return C.AllOrNone(tuple(ids))
    elif _AT_LEAST_ONE.search(text) and len(ids) >= 2:
        return C.Or(tuple(ids))
    if len(ids) == 1:
        present = not _FORBIDDEN.search(text)
        return C.Present(ids[0], present)
    comp = find_comparator(text)
    if comp and ids:
        return extract_relational_constraint(text, ids, candidates)
    raise NoConditionalMarker(f"cannot interpret consequent {text!r}")


def split_nested_constraint(message: str, op: Operation):
    """Interpret a conditional message as category 8, 12 or 13."""
    ante_text, cons_text = split_conditional(message)
    ante = _antecedent(ante_text, op.live_inputs)
    cons = _consequent(cons_text, op, set(ante.param_ids()))
    if isinstance(ante, C.Present) and isinstance(cons, C.Present):
        return C.ConditionalParameterRequired(cons.param, cons.present, ante.param, ante.present)
    if isinstance(ante, C.Present) and isinstance(cons, C.DataArithmetic):
        return C.ParameterInfluencedDataValues(ante, cons)
    if isinstance(ante, C.DataArithmetic) and isinstance(cons, C.SELECTION_TYPES):
        if isinstance(cons, C.Present):
            cons = C.AdditionalMandatory(cons.param) if cons.present else cons
        return C.DataInfluencedParamSelection(ante, cons)
    raise NoConditionalMarker(f"unsupported conditional shape in {message!r}")


# -- producer / consumer ----------------------------------------------------

_NOUN_PATTERNS = [
    re.compile(r"\b(?P<n>[A-Za-z]+?)NotFound\b"),
    re.compile(r"\bthe (?P<n>[A-Za-z]+)(?: with [^.]*?)? (?:could not|cannot|can't|was not|wasn't) be found", re.I),
    re.compile(r"\b(?P<n>[A-Za-z]+)(?:\s+with\s+(?:the\s+)?id\s+\S+)?\s+(?:was\s+|is\s+)?not\s*found\b", re.I),
    re.compile(r"\bno (?:such )?(?P<n>[A-Za-z]+)\b", re.I),
    re.compile(r"\b(?P<n>[A-Za-z]+)\s+(?:\S+\s+)?(?:does not|doesn't) exist", re.I),
    re.compile(r"\bunknown (?P<n>[A-Za-z]+)", re.I),
    re.compile(r"\binvalid (?P<n>[A-Za-z]+?)\s*id\b", re.I),
]
_NOUN_STOP = frozenset({"resource", "item", "entity", "record", "object", "id", "the", "a", "an", "with", "is", "was", "not", "data", "page", "value", "such", "it"})


def resource_noun(message: str) -> Optional[str]:
    for pat in _NOUN_PATTERNS:
        for m in pat.finditer(message):
            noun = m.group("n")
            toks = split_identifier(noun)
            if not toks:
                continue
            word = singular(toks[-1])
            if word not in _NOUN_STOP:
                return word
    return None


def is_identifier_like(p: InputParameter) -> bool:
    toks = split_identifier(p.pname.rsplit(".", 1)[-1])
    return bool(toks) and toks[-1] in ("id", "ids", "uuid", "key")


def _noun_score(noun: str, name: str) -> int:
    toks = [singular(t) for t in split_identifier(name)]
    return 1 if any(t == noun or t.startswith(noun) for t in toks) else 0


def pick_consumer_param(op: Operation, noun: Optional[str]) -> Optional[InputParameter]:
    """Identifier-like input of ``op`` most associated with ``noun``."""
    scored = []
    for p in op.live_inputs:
        idlike = is_identifier_like(p)
        assoc = _noun_score(noun, p.pname) if noun else 0
        if not idlike and not (p.loc is Loc.PATH):
            continue
        depth = p.pname.count(".")
        # a missing resource is usually the one the path addresses
        scored.append(((assoc, p.loc is Loc.PATH, idlike, -depth), p.id, p))
    if not scored:
        return None
    scored.sort(key=lambda t: (tuple(-int(x) for x in t[0]), t[1]))
    return scored[0][2]


def _producer_score(noun: str, op: Operation) -> int:
    score = 0
    if noun in [singular(t) for t in split_identifier(op.opname)]:
        score += 2
    literals = [s for s in op.path.strip("/").split("/") if s and not s.startswith("{")]
    if literals and noun in [singular(t) for t in split_identifier(literals[-1])]:
        score += 2
    elif any(noun in [singular(t) for t in split_identifier(s)] for s in literals):
        score += 1
    for code, ref in op.response_schemas.items():
        if code.startswith("2") and ref and singular(ref.rsplit(".", 1)[-1].lower()) == noun:
            score += 2
            break
    return score


def _single_resource(op: Operation) -> bool:
    shapes = [s for c, s in op.response_shapes.items() if c.startswith("2") or c == "default"]
    return any(s == "object" for s in shapes) or not any(s == "array" for s in shapes)


def pick_producer_param(producer: Operation, noun: str, consumer_param: Optional[InputParameter]) -> Optional[str]:
    outputs = [o for o in producer.outputs if o.responsecode.startswith("2") or o.responsecode == "default"]

    def rank(name: str) -> tuple:
        leaf = name.rsplit(".", 1)[-1]
        toks = [singular(t) for t in split_identifier(leaf)]
        cons_leaf = consumer_param.pname.rsplit(".", 1)[-1] if consumer_param else None
        return (
            leaf.lower() == "id",
            norm(leaf) == norm(noun + "id"),
            cons_leaf is not None and norm(leaf) == norm(cons_leaf),
            "id" in toks,
            -name.count("."),
        )

    cands = [o for o in outputs if rank(o.pname)[:4] != (False, False, False, False)]
    if cands:
        cands.sort(key=lambda o: tuple(-int(x) for x in rank(o.pname)) + (o.id,))
        return cands[0].id
    # no output field: fall back to an input the producer itself sends
    if consumer_param is not None:
        leaf = consumer_param.pname.rsplit(".", 1)[-1]
        for p in producer.live_inputs:
            if norm(p.pname.rsplit(".", 1)[-1]) == norm(leaf):
                return p.id
    return None


def infer_producer_consumer(message: str, consumer: Operation, model: SpecModel) -> C.ProducerConsumer:
    noun = resource_noun(message)
    cparam = pick_consumer_param(consumer, noun)
    if noun is None and cparam is not None:
        toks = [t for t in split_identifier(cparam.pname.rsplit(".", 1)[-1]) if t not in ("id", "ids", "uuid", "key")]
        noun = singular(toks[-1]) if toks else None
        cparam = pick_consumer_param(consumer, noun)
    if noun is None or cparam is None:
        raise NoProducerFound(f"no resource noun or identifier input for {consumer.opname}")
    pool = []
    for op in model.live_operations():
        if op.method != "POST" or op.opname == consumer.opname:
            continue
        score = _producer_score(noun, op)
        if score > 0:
            pool.append((-score, not _single_resource(op), op.opname, op))
    pool.sort(key=lambda t: t[:3])
    for _, _, _, producer in pool:
        pparam = pick_producer_param(producer, noun, cparam)
        if pparam is not None:
            return C.ProducerConsumer(producer.opname, pparam, consumer.opname, cparam.id)
    raise NoProducerFound(f"no producer for {noun!r}")
