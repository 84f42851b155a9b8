"""Rule-based assignment of the ten COVID-19 misinformation categories."""

from __future__ import annotations

from pathlib import Path

from .rules import Rule, first_match, load_rules

CATEGORIES: tuple[str, ...] = (
    "PubAuthAction",
    "CommSpread",
    "GenMedAdv",
    "PromActs",
    "Consp",
    "VirTrans",
    "VirOrgn",
    "PubPrep",
    "Vacc",
    "None",
)


def load_category_rules(path: str | Path | None = None) -> list[Rule]:
    """Load category rules from *path*, or the bundled defaults."""
    return load_rules(path, CATEGORIES, "categories.txt")


_default_rules: list[Rule] | None = None


def default_rules() -> list[Rule]:
    global _default_rules
    if _default_rules is None:
        _default_rules = load_category_rules()
    return _default_rules


def classify_category(text: str, rules: list[Rule] | None = None) -> str:
    """Label *text* with the first matching rule's category, else ``"None"``."""
    label = first_match(text, default_rules() if rules is None else rules)
    return "None" if label is None else label
