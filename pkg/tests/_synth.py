"""Seeded synthetic debunk corpora for the scale and determinism tests.

A share of the records are paraphrases of a recurring narrative so the
pipeline has real duplicates to find; the rest are one-off claims.
"""

from __future__ import annotations

import json
import random
from datetime import date, timedelta
from pathlib import Path

SYLLABLES = ("ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "pa", "do", "gu", "ri", "be", "fo", "ha")
COUNTRIES = (
    "India", "United States", "Spain", "Brazil", "France", "Indonesia", "Turkey", "Philippines",
    "Colombia", "Argentina", "Mexico", "Italy", "Germany", "Nigeria", "Kenya", "Pakistan",
)
LANGS = ("en", "es", "pt", "fr", "hi", "id", "tr", "de", "it")
PLATFORMS = ("facebook", "whatsapp", "twitter", "youtube", "instagram", "tiktok")
MODALITIES = ("text", "image", "video", "audio", "mixed", None)
FIRST = date(2020, 1, 15)


def _word(rng: random.Random) -> str:
    return "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 4)))


def synthetic_rows(n: int, seed: int = 7, narrative_share: float = 0.3) -> list[dict]:
    rng = random.Random(seed)
    vocab = sorted({_word(rng) for _ in range(4000)})
    orgs = [f"Checker {i:02d}" for i in range(60)]
    n_narr = max(1, int(n * narrative_share / 4))
    narratives = [[rng.choice(vocab) for _ in range(rng.randint(8, 12))] for _ in range(n_narr)]
    rows = []
    for i in range(n):
        if rng.random() < narrative_share:
            words = list(rng.choice(narratives))
            if rng.random() < 0.5:
                words[rng.randrange(len(words))] = rng.choice(vocab)
            if rng.random() < 0.3:
                words.insert(rng.randrange(len(words) + 1), "covid-19")
        else:
            words = [rng.choice(vocab) for _ in range(rng.randint(6, 14))]
        claim = " ".join(words).capitalize() + "."
        row = {
            "claim": claim,
            "org": rng.choice(orgs),
            "countries": rng.sample(COUNTRIES, rng.choice((1, 1, 1, 2))),
            "url": f"https://factcheck.example/{seed}/{i}",
            "lang": rng.choice(LANGS),
            "date": (FIRST + timedelta(days=rng.randrange(340))).isoformat(),
            "platforms": rng.sample(PLATFORMS, rng.choice((0, 1, 1, 2))),
        }
        modality = rng.choice(MODALITIES)
        if modality is not None:
            row["modality"] = modality
        rows.append(row)
    return rows


def write_rows(rows: list[dict], path: Path) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path
