"""Finding earlier debunks of the same claim by other organisations."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import date
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Iterable, Mapping, Sequence

from .corpus import DebunkRecord
from .index import DEFAULT_DEPTH, Bm25Index, search
from .normalize import NormalizedClaim, normalize_claim
from .rerank import DEFAULT_THRESHOLD, SkippedPair, check_threshold, rerank

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DuplicateLink:
    query_id: str
    duplicate_id: str
    relevance_score: float
    day_gap: int


@dataclass(frozen=True)
class ClaimCluster:
    cluster_id: str
    members: tuple[str, ...]
    earliest_date: date
    languages: tuple[str, ...]
    countries: tuple[str, ...]


@dataclass(frozen=True)
class DedupConfig:
    k: int = DEFAULT_DEPTH
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        check_threshold(self.threshold)


def apply_constraints(query: DebunkRecord, candidate: DebunkRecord) -> bool:
    """True iff another organisation debunked *candidate* strictly earlier."""
    return (
        query.organisation != candidate.organisation
        and candidate.debunk_date < query.debunk_date
    )


def round_score(score: float) -> float:
    """Round to 6 decimal places, half to even, on the shortest decimal repr."""
    return float(Decimal(repr(score)).quantize(Decimal("0.000001"), rounding=ROUND_HALF_EVEN))


def _links_for(
    query: DebunkRecord,
    claims: Mapping[str, NormalizedClaim],
    records: Mapping[str, DebunkRecord],
    index: Bm25Index,
    backend,
    config: DedupConfig,
) -> tuple[list[DuplicateLink], list[SkippedPair]]:
    hits = search(index, claims[query.id].tokens, config.k, exclude=(query.id,))
    # the date/org filter commutes with threshold filtering; applying it
    # first just saves backend calls
    candidates = [
        (query.id, doc_id, lexical)
        for doc_id, lexical in hits
        if apply_constraints(query, records[doc_id])
    ]
    kept, skipped = rerank(candidates, backend, config.threshold, lambda rid: claims[rid].canonical_text)
    links = [
        DuplicateLink(
            query.id,
            c.candidate_id,
            c.relevance_score,
            (query.debunk_date - records[c.candidate_id].debunk_date).days,
        )
        for c in kept
    ]
    return links, skipped


# worker-process state for parallel runs
_worker: tuple | None = None


def _init_worker(claims, records, index, backend, config):
    global _worker
    _worker = (claims, records, index, backend, config)


def _run_chunk(query_ids: list[str]):
    claims, records, index, backend, config = _worker
    out = []
    for qid in query_ids:
        out.append(_links_for(records[qid], claims, records, index, backend, config))
    return out


def find_duplicates(
    corpus: Sequence[DebunkRecord],
    index: Bm25Index,
    backend,
    config: DedupConfig = DedupConfig(),
    *,
    claims: Sequence[NormalizedClaim] | None = None,
    aliases: Iterable[str] | None = None,
    jobs: int = 1,
    skipped: list[SkippedPair] | None = None,
) -> list[DuplicateLink]:
    """All (query, earlier duplicate) links over *corpus*.

    Sorted by query id, then descending relevance, then duplicate id.
    Pairs the backend failed on are appended to *skipped* when given.
    """
    records = {r.id: r for r in corpus}
    if claims is None:
        claims = [normalize_claim(r, aliases) for r in corpus]
    claim_map = {c.record_id: c for c in claims}
    query_ids = sorted(records)
    results: list[tuple[list[DuplicateLink], list[SkippedPair]]]
    if jobs > 1 and getattr(backend, "kind", None) != "external" and len(query_ids) > 1:
        size = max(1, len(query_ids) // (jobs * 4))
        chunks = [query_ids[i : i + size] for i in range(0, len(query_ids), size)]
        with ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_init_worker,
            initargs=(claim_map, records, index, backend, config),
        ) as pool:
            results = [r for chunk in pool.map(_run_chunk, chunks) for r in chunk]
    else:
        results = [_links_for(records[q], claim_map, records, index, backend, config) for q in query_ids]

    links = [link for found, _ in results for link in found]
    if skipped is not None:
        for _, bad in results:
            skipped.extend(bad)
    links.sort(key=lambda l: (l.query_id, -l.relevance_score, l.duplicate_id))
    return links


def to_one_to_one(links: Iterable[DuplicateLink]) -> dict[str, DuplicateLink]:
    """Pick one duplicate per query: highest score, then earliest duplicate
    (largest day gap), then smallest duplicate id."""
    best: dict[str, DuplicateLink] = {}
    for link in links:
        cur = best.get(link.query_id)
        if cur is None or _rank(link) < _rank(cur):
            best[link.query_id] = link
    return {q: best[q] for q in sorted(best)}


def _rank(link: DuplicateLink):
    return (-link.relevance_score, -link.day_gap, link.duplicate_id)


def cluster(
    links: Iterable[DuplicateLink],
    records: Mapping[str, DebunkRecord],
) -> list[ClaimCluster]:
    """Connected components of the undirected link graph (no singletons),
    ordered by earliest member date, then size descending."""
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for link in links:
        for node in (link.query_id, link.duplicate_id):
            parent.setdefault(node, node)
        ra, rb = find(link.query_id), find(link.duplicate_id)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            parent[rb] = ra

    groups: dict[str, list[str]] = {}
    for node in parent:
        groups.setdefault(find(node), []).append(node)

    raw = []
    for members in groups.values():
        members.sort()
        recs = [records[m] for m in members]
        raw.append(
            (
                min(r.debunk_date for r in recs),
                -len(members),
                members[0],
                tuple(members),
                tuple(sorted({r.language for r in recs if r.language})),
                tuple(sorted({c for r in recs for c in r.countries})),
            )
        )
    raw.sort()
    return [
        ClaimCluster(f"c{i:05d}", members, earliest, langs, countries)
        for i, (earliest, _, _, members, langs, countries) in enumerate(raw, start=1)
    ]


LINK_COLUMNS = ("query_id", "duplicate_id", "score", "day_gap")


def format_score(score: float) -> str:
    return f"{round_score(score):.6f}"


def write_links(links: Iterable[DuplicateLink], path) -> None:
    """One JSON object per line: query_id, duplicate_id, score, day_gap."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for l in links:
            fh.write(
                '{"query_id": %s, "duplicate_id": %s, "score": %s, "day_gap": %d}\n'
                % (json.dumps(l.query_id, ensure_ascii=False), json.dumps(l.duplicate_id, ensure_ascii=False),
                   format_score(l.relevance_score), l.day_gap)
            )


def write_links_csv(links: Iterable[DuplicateLink], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LINK_COLUMNS)
        for l in links:
            writer.writerow((l.query_id, l.duplicate_id, format_score(l.relevance_score), l.day_gap))


def read_links(path) -> list[DuplicateLink]:
    links = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                links.append(
                    DuplicateLink(str(obj["query_id"]), str(obj["duplicate_id"]), float(obj["score"]), int(obj["day_gap"]))
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad link line ({exc})") from None
    return links


def write_clusters(clusters: Iterable[ClaimCluster], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in clusters:
            fh.write(
                json.dumps(
                    {
                        "cluster_id": c.cluster_id,
                        "members": list(c.members),
                        "earliest_date": c.earliest_date.isoformat(),
                        "languages": list(c.languages),
                        "countries": list(c.countries),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
