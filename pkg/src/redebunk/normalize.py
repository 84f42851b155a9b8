"""Alias canonicalization and tokenization of claim text."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable

CANONICAL = "coronavirus"

DEFAULT_ALIASES: tuple[str, ...] = (
    "sars-cov-2",
    "sars-cov2",
    "sarscov2",
    "covid-19",
    "covid19",
    "covid",
    "2019-ncov",
    "ncov",
    "corona virus",
)

_EDGE_CHARS = "-'’"


@dataclass(frozen=True)
class NormalizedClaim:
    record_id: str
    canonical_text: str
    tokens: tuple[str, ...]


def load_aliases(path: str | Path | None = None) -> tuple[str, ...]:
    """Read an alias file: one alias per line, ``#`` starts a comment.

    With no path the bundled default list is returned.
    """
    if path is None:
        text = resources.files("redebunk").joinpath("data/aliases.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    aliases = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            aliases.append(line)
    return tuple(aliases)


@lru_cache(maxsize=32)
def _alias_pattern(aliases: tuple[str, ...]) -> re.Pattern[str] | None:
    if not aliases:
        return None
    # longest first so "covid-19" wins over "covid"
    ordered = sorted({a.strip().lower() for a in aliases if a.strip()}, key=lambda a: (-len(a), a))
    parts = [r"\s+".join(re.escape(w) for w in a.split()) for a in ordered]
    return re.compile("|".join(parts), re.IGNORECASE)


def _inside_word(text: str, start: int, end: int) -> bool:
    """True if text[start:end] is glued to a neighbouring word, using the
    same notion of a word as tokenize()."""
    if start > 0:
        prev = text[start - 1]
        if _is_word_char(prev):
            return True
        if prev in _EDGE_CHARS and start > 1 and _is_word_char(text[start - 2]):
            return True
    if end < len(text):
        nxt = text[end]
        if _is_word_char(nxt):
            return True
        if nxt in _EDGE_CHARS and end + 1 < len(text) and _is_word_char(text[end + 1]):
            return True
    return False


def canonicalize_aliases(text: str, aliases: Iterable[str] | None = None) -> str:
    """Replace every word-delimited COVID alias in *text* with ``coronavirus``.

    An alias glued to other word characters, directly or through an
    intra-word hyphen or apostrophe ("covidence", "covid-19s"), is left alone.
    """
    pattern = _alias_pattern(DEFAULT_ALIASES if aliases is None else tuple(aliases))
    if pattern is None:
        return text
    out = []
    pos = 0
    for m in pattern.finditer(text):
        if _inside_word(text, m.start(), m.end()):
            continue
        out.append(text[pos : m.start()])
        out.append(CANONICAL)
        pos = m.end()
    out.append(text[pos:])
    return "".join(out)


def _is_word_char(ch: str) -> bool:
    # letters, digits and combining marks (Devanagari vowel signs are marks)
    return unicodedata.category(ch)[0] in "LNM"


def tokenize(text: str) -> list[str]:
    """Split *text* into lowercase tokens.

    Runs of anything other than letters, digits, marks, hyphens and
    apostrophes separate tokens; hyphens and apostrophes survive only
    inside a token. No stemming or stopword removal.
    """
    text = unicodedata.normalize("NFC", text).lower()
    tokens: list[str] = []
    buf: list[str] = []
    for ch in text:
        if _is_word_char(ch) or ch in _EDGE_CHARS:
            buf.append(ch)
            continue
        if buf:
            tokens.append("".join(buf))
            buf = []
    if buf:
        tokens.append("".join(buf))
    out = []
    for tok in tokens:
        tok = tok.strip(_EDGE_CHARS)
        if tok:
            out.append(tok)
    return out


def canonical_text(text: str, aliases: Iterable[str] | None = None) -> str:
    """Alias-replaced, NFC-normalized, lowercased form of *text*."""
    folded = unicodedata.normalize("NFC", unicodedata.normalize("NFC", text).lower())
    return canonicalize_aliases(folded, aliases)


def normalize_claim(record, aliases: Iterable[str] | None = None) -> NormalizedClaim:
    canon = canonical_text(record.claim_text, aliases)
    return NormalizedClaim(record.id, canon, tuple(tokenize(canon)))
