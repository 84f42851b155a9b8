"""Ordered keyword rules shared by the category and modality classifiers.

Rule file format, one rule per line::

    LABEL: pattern one | pattern two | prefix*

``#`` starts a comment. Patterns match case-insensitively as whole words or
phrases; a trailing ``*`` turns the last word into a prefix match. Rules are
evaluated in file order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Collection


class RuleFileError(ValueError):
    def __init__(self, source: str, line: int, reason: str):
        super().__init__(f"{source}:{line}: {reason}")
        self.source = source
        self.line = line
        self.reason = reason


@dataclass(frozen=True)
class Rule:
    label: str
    patterns: tuple[str, ...]
    regex: re.Pattern[str]

    def matches(self, text: str) -> bool:
        return self.regex.search(text) is not None


def compile_patterns(patterns: Collection[str]) -> re.Pattern[str]:
    parts = []
    for pat in patterns:
        prefix = pat.endswith("*")
        words = pat.rstrip("*").split()
        body = r"\s+".join(re.escape(w) for w in words)
        parts.append(body + (r"\w*" if prefix else ""))
    return re.compile(r"(?<!\w)(?:" + "|".join(parts) + r")(?!\w)", re.IGNORECASE)


def parse_rules(text: str, labels: Collection[str], source: str = "<rules>") -> list[Rule]:
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        label, sep, rest = line.partition(":")
        label = label.strip()
        if not sep:
            raise RuleFileError(source, lineno, "expected 'LABEL: pattern | pattern'")
        if label not in labels:
            raise RuleFileError(source, lineno, f"unknown label {label!r}")
        patterns = tuple(p.strip() for p in rest.split("|"))
        if not patterns or any(not p or p == "*" for p in patterns):
            raise RuleFileError(source, lineno, "empty pattern")
        rules.append(Rule(label, patterns, compile_patterns(patterns)))
    return rules


def load_rules(path: str | Path | None, labels: Collection[str], bundled: str) -> list[Rule]:
    if path is None:
        text = resources.files("redebunk").joinpath(f"data/{bundled}").read_text("utf-8")
        return parse_rules(text, labels, source=bundled)
    return parse_rules(Path(path).read_text("utf-8"), labels, source=str(path))


def first_match(text: str, rules: list[Rule]) -> str | None:
    for rule in rules:
        if rule.matches(text):
            return rule.label
    return None
