"""Character-trigram language identification.

Profiles are trigram counts built from the sample prose bundled under
``data/langprofiles/<code>.txt``. A text is assigned the language whose
profile has the highest cosine similarity with the text's own trigram
counts.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from functools import lru_cache
from importlib import resources

UNDETERMINED = "und"
DEFAULT_FLOOR = 0.25
MIN_CHARS = 20
PROFILE_SIZE = 300
BUNDLED_LANGUAGES = ("en", "es", "fr", "hi", "pt")


def _letters_only(text: str) -> str:
    text = unicodedata.normalize("NFC", text).lower()
    chars = [ch if unicodedata.category(ch)[0] in "LM" else " " for ch in text]
    return " " + " ".join("".join(chars).split()) + " "


def trigrams(text: str) -> Counter[str]:
    padded = _letters_only(text)
    return Counter(padded[i : i + 3] for i in range(len(padded) - 2))


class Profile:
    def __init__(self, code: str, counts: Counter[str], size: int = PROFILE_SIZE):
        self.code = code
        self.counts = dict(counts.most_common(size))
        self.norm = math.sqrt(sum(v * v for v in self.counts.values()))

    @classmethod
    def from_text(cls, code: str, text: str, size: int = PROFILE_SIZE) -> "Profile":
        return cls(code, trigrams(text), size)

    def cosine(self, grams: Counter[str]) -> float:
        norm = math.sqrt(sum(v * v for v in grams.values()))
        if norm == 0 or self.norm == 0:
            return 0.0
        dot = sum(self.counts.get(g, 0) * c for g, c in grams.items())
        return dot / (norm * self.norm)


@lru_cache(maxsize=1)
def bundled_profiles() -> tuple[Profile, ...]:
    root = resources.files("redebunk").joinpath("data/langprofiles")
    return tuple(
        Profile.from_text(code, root.joinpath(f"{code}.txt").read_text("utf-8"))
        for code in BUNDLED_LANGUAGES
    )


def similarities(text: str, profiles: tuple[Profile, ...] | None = None) -> dict[str, float]:
    grams = trigrams(text)
    return {p.code: p.cosine(grams) for p in (profiles or bundled_profiles())}


def detect_language(
    text: str,
    *,
    floor: float = DEFAULT_FLOOR,
    profiles: tuple[Profile, ...] | None = None,
) -> str:
    """Return the ISO 639-1 code of the best profile, or ``"und"``.

    Texts shorter than 20 characters, or whose best similarity is below
    *floor*, are undetermined.
    """
    if len(text.strip()) < MIN_CHARS:
        return UNDETERMINED
    scores = similarities(text, profiles)
    # ties resolve to the alphabetically first code
    best = max(sorted(scores), key=lambda code: scores[code])
    if scores[best] < floor:
        return UNDETERMINED
    return best
