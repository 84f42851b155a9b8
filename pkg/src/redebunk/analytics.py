"""Spatiotemporal aggregates over duplicate links, and the report files.

Transition tables are keyed ``(query_value, duplicate_value)``: the
duplicate was debunked first, so ``"India <- United States"`` reads as a
claim moving from the United States to India.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .corpus import DebunkRecord
from .dedup import ClaimCluster, DuplicateLink, cluster, to_one_to_one

DIMENSIONS = ("country", "platform", "modality", "language")
TOP = 10


@dataclass
class TransitionTable:
    dimension: str
    counts: dict[tuple[str, str], int] = field(default_factory=dict)
    undefined: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class GapHistogram:
    bin_width_days: int
    bins: tuple[int, ...]

    def edges(self, i: int) -> tuple[int, int]:
        """Inclusive day range of 0-based bin *i*."""
        return self.bin_width_days * i + 1, self.bin_width_days * (i + 1)


@dataclass(frozen=True)
class TimelineEvent:
    date: date
    organisation: str
    language: str | None
    countries: tuple[str, ...]
    platforms: tuple[str, ...]
    modality: str | None
    record_id: str
    claim: str


def _links(links) -> list[DuplicateLink]:
    if isinstance(links, Mapping):
        return list(links.values())
    return list(links)


def gap_histogram(links: Iterable[DuplicateLink] | Mapping[str, DuplicateLink], bin_width: int = 7) -> GapHistogram:
    """Count day gaps in bins ``[w*(i-1)+1, w*i]``; trailing empty bins dropped."""
    if bin_width < 1:
        raise ValueError(f"bin width must be >= 1, got {bin_width}")
    counts: Counter[int] = Counter()
    for link in _links(links):
        if link.day_gap < 1:
            raise ValueError(f"day gap {link.day_gap} < 1 for {link.query_id}")
        counts[(link.day_gap - 1) // bin_width] += 1
    n_bins = max(counts) + 1 if counts else 0
    return GapHistogram(bin_width, tuple(counts.get(i, 0) for i in range(n_bins)))


def _country(r: DebunkRecord) -> str | None:
    return r.country


def _platform(r: DebunkRecord) -> str | None:
    return r.platform


def _modality(r: DebunkRecord) -> str | None:
    return None if r.modality in (None, "unknown") else r.modality


def _language(r: DebunkRecord) -> str | None:
    return None if r.language in (None, "und") else r.language


_GETTERS: dict[str, Callable[[DebunkRecord], str | None]] = {
    "country": _country,
    "platform": _platform,
    "modality": _modality,
    "language": _language,
}


def transitions(
    records: Mapping[str, DebunkRecord],
    links: Iterable[DuplicateLink] | Mapping[str, DuplicateLink],
    dimension: str,
) -> TransitionTable:
    """Tally (query value, duplicate value) over one-to-one links.

    Multi-valued fields use the first-listed value. Links with either side
    undefined go to ``undefined`` instead of a cell.
    """
    get = _GETTERS[dimension]
    table = TransitionTable(dimension)
    counts: Counter[tuple[str, str]] = Counter()
    for link in _links(links):
        to_val, from_val = get(records[link.query_id]), get(records[link.duplicate_id])
        if to_val is None or from_val is None:
            table.undefined += 1
        else:
            counts[(to_val, from_val)] += 1
    table.counts = dict(sorted(counts.items()))
    return table


def country_transitions(records, links) -> tuple[TransitionTable, TransitionTable]:
    """Split country transitions into same-country and cross-country tables.

    Both tables carry the same ``undefined`` tally, so
    ``same.total + diff.total + same.undefined`` equals the link count.
    """
    full = transitions(records, links, "country")
    same = TransitionTable("country", {k: v for k, v in full.counts.items() if k[0] == k[1]}, full.undefined)
    diff = TransitionTable("country", {k: v for k, v in full.counts.items() if k[0] != k[1]}, full.undefined)
    return same, diff


def platform_transitions(records, links) -> TransitionTable:
    return transitions(records, links, "platform")


def modality_transitions(records, links) -> TransitionTable:
    return transitions(records, links, "modality")


def language_pairs(records, links) -> TransitionTable:
    return transitions(records, links, "language")


def crosslingual_gap(
    links: Iterable[DuplicateLink],
    records: Mapping[str, DebunkRecord],
) -> tuple[int, list[str]]:
    """Queries with no duplicate in their own debunk language.

    Takes the full one-to-many link list.
    """
    dup_langs: dict[str, set] = {}
    for link in links:
        dup_langs.setdefault(link.query_id, set()).add(records[link.duplicate_id].language)
    ids = sorted(q for q, langs in dup_langs.items() if records[q].language not in langs)
    return len(ids), ids


def category_distribution(query_records: Iterable[DebunkRecord]) -> dict[str, tuple[int, float]]:
    counts = Counter(r.category or "None" for r in query_records)
    total = sum(counts.values())
    return {label: (n, n / total) for label, n in top_n(counts, len(counts))}


def category_gap_scatter(
    links: Iterable[DuplicateLink] | Mapping[str, DuplicateLink],
    records: Mapping[str, DebunkRecord],
) -> list[tuple[str, int]]:
    return [(records[l.query_id].category or "None", l.day_gap) for l in _links(links)]


def timeline(group: ClaimCluster, records: Mapping[str, DebunkRecord]) -> list[TimelineEvent]:
    if len(group.members) < 2:
        raise ValueError(f"cluster {group.cluster_id} has fewer than 2 members")
    events = [
        TimelineEvent(r.debunk_date, r.organisation, r.language, r.countries, r.platforms, r.modality, r.id, r.claim_text)
        for r in (records[m] for m in group.members)
    ]
    events.sort(key=lambda e: (e.date, e.organisation, e.record_id))
    return events


def top_n(counts: Mapping[Hashable, int] | TransitionTable, n: int) -> list[tuple[Hashable, int]]:
    """Entries by descending count, ties by ascending key, at most *n*."""
    if isinstance(counts, TransitionTable):
        counts = counts.counts
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[: max(n, 0)]


# --- report files -----------------------------------------------------------

REPORT_FILES = (
    "fig1a_countries.csv",
    "fig1b_orgs.csv",
    "fig2_gap_histogram.csv",
    "fig3a_same_country.csv",
    "fig3b_diff_country.csv",
    "fig4a_platforms.csv",
    "fig4b_modalities.csv",
    "fig5_languages.csv",
    "fig6a_categories.csv",
    "fig6b_category_gaps.csv",
    "timelines.jsonl",
    "summary.json",
)

SUMMARY_KEYS = ("total_debunks", "duplicate_query_count", "duplicate_fraction", "crosslingual_gap_count")


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _share_rows(counts: Counter, denominator: int, n: int):
    for rank, (key, count) in enumerate(top_n(counts, n), start=1):
        yield rank, key, count, _fmt(count / denominator if denominator else 0.0)


def _pair_rows(table: TransitionTable, n: int):
    for rank, ((to_val, from_val), count) in enumerate(top_n(table, n), start=1):
        yield rank, to_val, from_val, f"{to_val} <- {from_val}", count


def write_report(
    corpus: Sequence[DebunkRecord],
    links: Sequence[DuplicateLink],
    out_dir: str | Path,
    *,
    bin_width: int = 7,
    run_info: dict | None = None,
) -> dict:
    """Write every figure table plus summary.json; returns the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = {r.id: r for r in corpus}
    one = to_one_to_one(links)
    queries = [records[q] for q in one]

    country_counts = Counter(r.country for r in queries if r.country is not None)
    org_counts = Counter(r.organisation for r in queries)
    n_queries = len(queries)
    _write_csv(out / "fig1a_countries.csv", ("rank", "country", "count", "proportion"),
               _share_rows(country_counts, n_queries, TOP))
    _write_csv(out / "fig1b_orgs.csv", ("rank", "organisation", "count", "proportion"),
               _share_rows(org_counts, n_queries, TOP))

    hist = gap_histogram(one, bin_width)
    _write_csv(out / "fig2_gap_histogram.csv", ("bin", "start_day", "end_day", "count"),
               ((i + 1, *hist.edges(i), c) for i, c in enumerate(hist.bins)))

    pair_header = ("rank", "query_value", "duplicate_value", "label", "count")
    same, diff = country_transitions(records, one)
    _write_csv(out / "fig3a_same_country.csv", pair_header, _pair_rows(same, TOP))
    _write_csv(out / "fig3b_diff_country.csv", pair_header, _pair_rows(diff, TOP))
    plat = platform_transitions(records, one)
    mod = modality_transitions(records, one)
    lang = language_pairs(records, one)
    _write_csv(out / "fig4a_platforms.csv", pair_header, _pair_rows(plat, len(plat.counts)))
    _write_csv(out / "fig4b_modalities.csv", pair_header, _pair_rows(mod, len(mod.counts)))
    _write_csv(out / "fig5_languages.csv", pair_header, _pair_rows(lang, TOP))

    cats = category_distribution(queries)
    _write_csv(out / "fig6a_categories.csv", ("category", "count", "proportion"),
               ((c, n, _fmt(p)) for c, (n, p) in cats.items()))
    _write_csv(out / "fig6b_category_gaps.csv", ("query_id", "duplicate_id", "category", "day_gap"),
               ((l.query_id, l.duplicate_id, records[l.query_id].category or "None", l.day_gap)
                for l in one.values()))

    clusters = cluster(links, records)
    with open(out / "timelines.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for group in clusters:
            events = [
                {
                    "date": e.date.isoformat(),
                    "organisation": e.organisation,
                    "language": e.language,
                    "label": f"{e.organisation} ({e.language or 'und'})",
                    "countries": list(e.countries),
                    "platforms": list(e.platforms),
                    "modality": e.modality,
                    "id": e.record_id,
                    "claim": e.claim,
                }
                for e in timeline(group, records)
            ]
            fh.write(json.dumps({"cluster_id": group.cluster_id, "events": events}, ensure_ascii=False) + "\n")

    gap_count, _ = crosslingual_gap(links, records)
    total = len(corpus)
    summary = {
        "total_debunks": total,
        "duplicate_query_count": n_queries,
        "duplicate_fraction": float(_fmt(n_queries / total)) if total else 0.0,
        "crosslingual_gap_count": gap_count,
        "link_count": len(links),
        "one_to_one_count": len(one),
        "cluster_count": len(clusters),
        "gap_bin_width_days": bin_width,
        "fig1a_denominator": "distinct query claim debunks, first-listed country",
        "transition_undefined": {
            "country": same.undefined,
            "platform": plat.undefined,
            "modality": mod.undefined,
            "language": lang.undefined,
        },
    }
    if run_info:
        summary["run"] = run_info
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return summary
