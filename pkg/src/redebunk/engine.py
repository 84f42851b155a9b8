"""Ad-hoc claim search over a debunk corpus, shared by the CLI and the service."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import DebunkRecord
from .dedup import round_score
from .index import Bm25Error, Bm25Index, build_index, search
from .normalize import canonical_text, normalize_claim, tokenize
from .rerank import SkippedPair, check_threshold, make_backend, rerank

QUERY_ID = "\x00query"


@dataclass(frozen=True)
class SearchHit:
    id: str
    claim: str
    org: str
    date: str
    lang: str | None
    url: str
    score: float

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "claim": self.claim,
            "org": self.org,
            "date": self.date,
            "lang": self.lang,
            "url": self.url,
            "score": self.score,
        }


class SearchEngine:
    """Immutable after construction; safe to query from several threads."""

    def __init__(
        self,
        records: Sequence[DebunkRecord],
        backend,
        *,
        index: Bm25Index | None = None,
        aliases: Iterable[str] | None = None,
    ):
        self.aliases = None if aliases is None else tuple(aliases)
        self.records = {r.id: r for r in records}
        self.claims = {r.id: normalize_claim(r, self.aliases) for r in records}
        if index is None:
            index = build_index([self.claims[r.id] for r in records])
        elif set(index.doc_ids) != set(self.records):
            raise Bm25Error("index documents do not match the corpus")
        self.index = index
        self.backend = backend

    @classmethod
    def from_records(cls, records, backend_kind="tfidf-cosine", *, aliases=None, index=None, **backend_opts):
        aliases = None if aliases is None else tuple(aliases)
        texts = [canonical_text(r.claim_text, aliases) for r in records]
        backend = make_backend(backend_kind, corpus_texts=texts, **backend_opts)
        return cls(records, backend, index=index, aliases=aliases)

    def query(
        self,
        text: str,
        k: int,
        threshold: float,
        skipped: list[SkippedPair] | None = None,
    ) -> list[SearchHit]:
        """Prior debunks similar to *text*; no date or organisation filter."""
        check_threshold(threshold)
        canon = canonical_text(text, self.aliases)
        hits = search(self.index, tokenize(canon), k)

        def text_of(rid: str) -> str:
            return canon if rid == QUERY_ID else self.claims[rid].canonical_text

        kept, bad = rerank([(QUERY_ID, doc_id, s) for doc_id, s in hits], self.backend, threshold, text_of)
        if skipped is not None:
            skipped.extend(bad)
        out = []
        for c in kept:
            r = self.records[c.candidate_id]
            out.append(
                SearchHit(r.id, r.claim_text, r.organisation, r.debunk_date.isoformat(), r.language, r.url,
                          round_score(c.relevance_score))
            )
        return out
