"""Tokenization and name-similarity helpers for matching messages to parameters."""

from __future__ import annotations

import re

_CAMEL = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")
_WORD = re.compile(r"[A-Za-z0-9_]+")

STOPWORDS = frozenset(
    """a an the is are was were be been being of or and to in on at for with by from as this that
    these those it its not no must should shall may can cannot could would will only one either
    both required parameter parameters field fields value values please pass valid invalid""".split()
)

# tokens that say "identifier" without naming the resource
GENERIC_TOKENS = frozenset({"id", "ids", "key", "no", "num"})

NUMBER_WORDS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10, "hundred": 100,
}


def split_identifier(name: str) -> list[str]:
    """``storageCap`` -> ``['storage', 'cap']``; also handles snake, kebab and dotted names."""
    out: list[str] = []
    for chunk in re.split(r"[^A-Za-z0-9]+", name):
        out.extend(m.group(0).lower() for m in _CAMEL.finditer(chunk))
    return out


def singular(word: str) -> str:
    w = word.lower()
    if len(w) > 4 and w.endswith("ies"):
        return w[:-3] + "y"
    if len(w) > 4 and w.endswith(("ses", "xes", "zes", "ches", "shes")):
        return w[:-2]
    if len(w) > 3 and w.endswith("s") and not w.endswith(("ss", "us", "is")):
        return w[:-1]
    return w


def message_words(message: str) -> list[tuple[str, int]]:
    """Lower-cased, singular-folded word tokens with their character offsets."""
    out = []
    for m in _WORD.finditer(message):
        for tok in _CAMEL.finditer(m.group(0)):
            out.append((singular(tok.group(0)), m.start() + tok.start()))
    return out


def norm(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower())


def token_match(param_token: str, word: str) -> bool:
    """A parameter token matches a message word when equal after folding, or when
    the parameter token abbreviates the word (``cap`` ~ ``capacity``)."""
    t, w = singular(param_token), singular(word)
    if t == w:
        return True
    return len(t) >= 3 and w.startswith(t)


def core_tokens(name: str) -> list[str]:
    toks = split_identifier(name)
    core = [t for t in toks if t not in GENERIC_TOKENS]
    return core or toks


def overlap(name: str, words: list[str]) -> float:
    """Fraction of the name's core tokens that appear among ``words``."""
    toks = core_tokens(name)
    if not toks:
        return 0.0
    content = [w for w in words if w not in STOPWORDS]
    hits = sum(1 for t in toks if any(token_match(t, w) for w in content))
    return hits / len(toks)
