"""Shared text utilities: tokenization, stop words, citation parsing.

The stop-word list is fixed and shared by the text encoder, the grounding
verifier, and the benchmark metrics so that "content tokens" means the same
thing everywhere.
"""

from __future__ import annotations

import re

# 50 common English function words. Frozen: changing this list changes
# every token-overlap metric in the engine.
STOP_WORDS = frozenset(
    """
    a an the and or but if then else of at by for with about into through
    to from in on is are was were be been being it its this that these
    those as not no nor so too very can will just do does did has have had
    """.split()
)

assert len(STOP_WORDS) == 50

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_CITATION_RE = re.compile(r"\[Evidence\s+(\d+)\]")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


def content_tokens(text: str) -> set[str]:
    """Unique tokens with stop words removed."""
    return {t for t in tokenize(text) if t not in STOP_WORDS}


def parse_citations(text: str) -> set[int]:
    """Return all N from ``[Evidence N]`` markers in the text."""
    return {int(m) for m in _CITATION_RE.findall(text)}


def strip_citations(text: str) -> str:
    """Remove ``[Evidence N]`` markers, collapsing leftover whitespace."""
    stripped = _CITATION_RE.sub(" ", text)
    return re.sub(r"\s+", " ", stripped).strip()


def split_sentences(text: str) -> list[str]:
    """Split on sentence terminators; drops empty fragments."""
    parts = re.split(r"(?<=[.!?])\s+|\n+", text)
    return [p.strip() for p in parts if p.strip(" .!?")]
