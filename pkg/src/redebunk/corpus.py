"""Debunk records: the line-delimited JSON format, ids and metadata enrichment.

Each non-empty input line is one JSON object::

    {"id": "...", "claim": "...", "org": "...", "countries": ["India"],
     "url": "https://...", "lang": "en", "date": "2020-04-24",
     "platforms": ["facebook"], "modality": "image", "category": "GenMedAdv"}

``id``, ``lang``, ``platforms``, ``modality`` and ``category`` are optional.
Unknown keys are ignored.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import re
import unicodedata
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import BinaryIO, Iterable

from .categorize import CATEGORIES, classify_category
from .langid import detect_language
from .normalize import canonical_text
from .rules import Rule, load_rules

MODALITIES: tuple[str, ...] = ("text", "image", "video", "audio", "mixed", "unknown")

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_LANG_RE = re.compile(r"^(?:[a-z]{2}|und)$")
_CATEGORY_BY_FOLD = {c.lower(): c for c in CATEGORIES}


class CorpusReadError(Exception):
    """The input stream itself could not be read."""


class RecordError(ValueError):
    pass


@dataclass(frozen=True)
class DebunkRecord:
    id: str
    claim_text: str
    organisation: str
    countries: tuple[str, ...]
    url: str
    language: str | None
    debunk_date: date
    platforms: tuple[str, ...] = ()
    modality: str | None = None
    category: str | None = None

    @property
    def country(self) -> str | None:
        """First-listed country, used wherever one value per record is needed."""
        return self.countries[0] if self.countries else None

    @property
    def platform(self) -> str | None:
        return self.platforms[0] if self.platforms else None


@dataclass(frozen=True)
class ParseIssue:
    line: int
    reason: str


def assign_id(organisation: str, url: str, claim_text: str) -> str:
    """Stable record id: first 16 hex digits of SHA-256 over the
    unit-separator-joined ``organisation, url, claim_text`` (UTF-8)."""
    payload = "\x1f".join((organisation, url, claim_text)).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


def _clean(value: str) -> str:
    return unicodedata.normalize("NFC", value).strip()


def _required_str(obj: dict, key: str, name: str) -> str:
    if key not in obj or obj[key] is None:
        raise RecordError(f"missing {name}")
    value = obj[key]
    if not isinstance(value, str):
        raise RecordError(f"{name} must be a string")
    value = _clean(value)
    if not value:
        raise RecordError(f"empty {name}")
    return value


def _str_list(obj: dict, key: str, name: str) -> list[str]:
    value = obj.get(key)
    if value is None:
        return []
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise RecordError(f"{name} must be an array of strings")
    return [_clean(v) for v in value]


def record_from_dict(obj: dict) -> DebunkRecord:
    """Validate one decoded line and build a record; raises RecordError."""
    if not isinstance(obj, dict):
        raise RecordError("line is not a JSON object")
    claim = _required_str(obj, "claim", "claim")
    org = _required_str(obj, "org", "org")

    if "countries" not in obj or obj["countries"] is None:
        raise RecordError("missing countries")
    countries = _str_list(obj, "countries", "countries")
    if not countries:
        raise RecordError("countries must have at least one entry")
    if any(not c for c in countries):
        raise RecordError("empty country name")

    url = obj.get("url", "")
    if url is None:
        url = ""
    if not isinstance(url, str):
        raise RecordError("url must be a string")
    url = url.strip()

    raw_date = obj.get("date")
    if raw_date is None:
        raise RecordError("missing debunk_date")
    if not isinstance(raw_date, str) or not _DATE_RE.match(raw_date.strip()):
        raise RecordError(f"debunk_date {raw_date!r} is not YYYY-MM-DD")
    try:
        debunk_date = date.fromisoformat(raw_date.strip())
    except ValueError:
        raise RecordError(f"debunk_date {raw_date!r} is not a calendar date") from None

    lang = obj.get("lang")
    if lang is not None:
        if not isinstance(lang, str) or not _LANG_RE.match(lang.strip().lower()):
            raise RecordError(f"lang {lang!r} is not a 2-letter code or 'und'")
        lang = lang.strip().lower()

    platforms = [p.lower() for p in _str_list(obj, "platforms", "platforms") if p]

    modality = obj.get("modality")
    if modality is not None:
        if not isinstance(modality, str) or modality.strip().lower() not in MODALITIES:
            raise RecordError(f"modality {modality!r} not in {', '.join(MODALITIES)}")
        modality = modality.strip().lower()

    category = obj.get("category")
    if category is not None:
        if not isinstance(category, str) or category.strip().lower() not in _CATEGORY_BY_FOLD:
            raise RecordError(f"unknown category {category!r}")
        category = _CATEGORY_BY_FOLD[category.strip().lower()]

    rec_id = obj.get("id")
    if rec_id is None:
        rec_id = assign_id(org, url, claim)
    elif not isinstance(rec_id, str) or not rec_id.strip():
        raise RecordError("id must be a non-empty string")
    else:
        rec_id = rec_id.strip()

    return DebunkRecord(
        id=rec_id,
        claim_text=claim,
        organisation=org,
        countries=tuple(countries),
        url=url,
        language=lang,
        debunk_date=debunk_date,
        platforms=tuple(platforms),
        modality=modality,
        category=category,
    )


def record_to_dict(record: DebunkRecord) -> dict:
    out = {
        "id": record.id,
        "claim": record.claim_text,
        "org": record.organisation,
        "countries": list(record.countries),
        "url": record.url,
    }
    if record.language is not None:
        out["lang"] = record.language
    out["date"] = record.debunk_date.isoformat()
    out["platforms"] = list(record.platforms)
    if record.modality is not None:
        out["modality"] = record.modality
    if record.category is not None:
        out["category"] = record.category
    return out


def serialize_record(record: DebunkRecord) -> str:
    return json.dumps(record_to_dict(record), ensure_ascii=False)


def parse_records(stream: BinaryIO | bytes) -> tuple[list[DebunkRecord], list[ParseIssue]]:
    """Parse line-delimited records from a binary stream.

    Bad lines become ParseIssues and parsing continues. A failure of the
    stream itself raises CorpusReadError.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    records: list[DebunkRecord] = []
    issues: list[ParseIssue] = []
    seen: set[str] = set()
    lineno = 0
    try:
        for raw in stream:
            lineno += 1
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                issues.append(ParseIssue(lineno, f"invalid UTF-8: {exc.reason}"))
                continue
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                issues.append(ParseIssue(lineno, f"invalid JSON: {exc.msg}"))
                continue
            try:
                record = record_from_dict(obj)
            except RecordError as exc:
                issues.append(ParseIssue(lineno, str(exc)))
                continue
            if record.id in seen:
                issues.append(ParseIssue(lineno, f"duplicate id {record.id}"))
                continue
            seen.add(record.id)
            records.append(record)
    except OSError as exc:
        raise CorpusReadError(f"read failed after line {lineno}: {exc}") from exc
    return records, issues


def read_corpus(path: str | Path) -> tuple[list[DebunkRecord], list[ParseIssue]]:
    try:
        with open(path, "rb") as fh:
            return parse_records(fh)
    except OSError as exc:
        raise CorpusReadError(f"cannot read {path}: {exc.strerror or exc}") from exc


def write_records(records: Iterable[DebunkRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(serialize_record(record) + "\n")


def load_modality_rules(path: str | Path | None = None) -> list[Rule]:
    return load_rules(path, MODALITIES, "modality.txt")


_default_modality_rules: list[Rule] | None = None


def classify_modality(text: str, rules: list[Rule] | None = None) -> str:
    """Modality of a claim from keyword rules: one distinct match wins,
    several distinct modalities give ``mixed``, none gives ``text``."""
    global _default_modality_rules
    if rules is None:
        if _default_modality_rules is None:
            _default_modality_rules = load_modality_rules()
        rules = _default_modality_rules
    found = {rule.label for rule in rules if rule.matches(text)}
    if not found:
        return "text"
    if len(found) > 1:
        return "mixed"
    return found.pop()


def enrich(
    record: DebunkRecord,
    *,
    aliases: Iterable[str] | None = None,
    category_rules: list[Rule] | None = None,
    modality_rules: list[Rule] | None = None,
) -> DebunkRecord:
    """Fill language, modality and category where the record lacks them."""
    changes = {}
    if record.language is None:
        changes["language"] = detect_language(record.claim_text)
    if record.modality is None:
        changes["modality"] = classify_modality(record.claim_text, modality_rules)
    if record.category is None:
        changes["category"] = classify_category(canonical_text(record.claim_text, aliases), category_rules)
    return dataclasses.replace(record, **changes) if changes else record
