"""Inverted BM25 Okapi index over normalized claims.

Scoring, for a query Q and document d::

    score(Q, d) = sum over distinct t in Q of
        idf(t) * f(t,d) * (k1 + 1) / (f(t,d) + k1 * (1 - b + b * |d| / avgdl))

    idf(t) = ln(1 + (N - n(t) + 0.5) / (n(t) + 0.5))

The ``ln(1 + ...)`` idf never goes negative, so scores are >= 0.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .normalize import NormalizedClaim

DEFAULT_K1 = 1.5
DEFAULT_B = 0.75
DEFAULT_DEPTH = 50

MAGIC = b"RDBM25\x00"
FORMAT_VERSION = 1


class Bm25Error(Exception):
    """Index construction, lookup or persistence failure."""


@dataclass(frozen=True)
class Bm25Params:
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B

    def __post_init__(self):
        if not self.k1 >= 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


def idf(n_docs: int, df: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


@dataclass
class Bm25Index:
    doc_ids: list[str]
    postings: dict[str, list[tuple[int, int]]]
    doc_len: list[int]
    params: Bm25Params = field(default_factory=Bm25Params)

    def __post_init__(self):
        self.n_docs = len(self.doc_ids)
        self.avgdl = sum(self.doc_len) / self.n_docs if self.n_docs else 0.0
        self._ordinal = {doc_id: i for i, doc_id in enumerate(self.doc_ids)}
        if len(self._ordinal) != self.n_docs:
            dup = next(d for d, c in Counter(self.doc_ids).items() if c > 1)
            raise Bm25Error(f"duplicate record id {dup!r}")
        # rank of each ordinal in ascending-id order, for tie-breaking
        order = sorted(range(self.n_docs), key=self.doc_ids.__getitem__)
        self._id_rank = np.empty(self.n_docs, dtype=np.int64)
        self._id_rank[order] = np.arange(self.n_docs)
        self._tf: list[dict[str, int]] = [{} for _ in range(self.n_docs)]
        for term, plist in self.postings.items():
            for ordinal, tf in plist:
                self._tf[ordinal][term] = tf
        # per-term weight arrays, fixed at build so searches never mutate the index
        lengths = np.asarray(self.doc_len, dtype=np.float64)
        self._weights = {t: self._compute_weights(plist, lengths) for t, plist in self.postings.items()}

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._ordinal

    def ordinal(self, doc_id: str) -> int:
        try:
            return self._ordinal[doc_id]
        except KeyError:
            raise Bm25Error(f"unknown document id {doc_id!r}") from None

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def tf(self, term: str, doc_id: str) -> int:
        return self._tf[self.ordinal(doc_id)].get(term, 0)

    def _compute_weights(self, plist, lengths: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ords = np.fromiter((o for o, _ in plist), dtype=np.int64, count=len(plist))
        tfs = np.fromiter((t for _, t in plist), dtype=np.float64, count=len(plist))
        k1, b = self.params.k1, self.params.b
        denom = tfs + k1 * (1.0 - b + b * lengths[ords] / self.avgdl)
        weights = idf(self.n_docs, len(plist)) * tfs * (k1 + 1.0) / denom
        return ords, weights


def build_index(claims: Sequence[NormalizedClaim], params: Bm25Params | None = None) -> Bm25Index:
    """Index *claims* in the given order; duplicate record ids are an error."""
    doc_ids: list[str] = []
    doc_len: list[int] = []
    postings: dict[str, list[tuple[int, int]]] = {}
    seen: set[str] = set()
    for ordinal, claim in enumerate(claims):
        if claim.record_id in seen:
            raise Bm25Error(f"duplicate record id {claim.record_id!r}")
        seen.add(claim.record_id)
        doc_ids.append(claim.record_id)
        doc_len.append(len(claim.tokens))
        for term, tf in Counter(claim.tokens).items():
            postings.setdefault(term, []).append((ordinal, tf))
    return Bm25Index(doc_ids, postings, doc_len, params or Bm25Params())


def bm25_score(index: Bm25Index, query_tokens: Iterable[str], doc_id: str) -> float:
    """Score a single document directly from the closed form."""
    ordinal = index.ordinal(doc_id)
    k1, b = index.params.k1, index.params.b
    dl = index.doc_len[ordinal]
    tfs = index._tf[ordinal]
    score = 0.0
    for term in sorted(set(query_tokens)):
        tf = tfs.get(term, 0)
        if tf == 0:
            continue
        norm = k1 * (1.0 - b + b * dl / index.avgdl)
        score += idf(index.n_docs, index.df(term)) * tf * (k1 + 1.0) / (tf + norm)
    return score


def search(
    index: Bm25Index,
    query_tokens: Iterable[str],
    k: int,
    exclude: Iterable[str] = (),
) -> list[tuple[str, float]]:
    """Top-*k* documents by BM25 score, descending; ties by ascending id.

    Documents scoring 0 and ids in *exclude* are left out.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if index.n_docs == 0:
        return []
    scores = np.zeros(index.n_docs, dtype=np.float64)
    hit = False
    for term in sorted(set(query_tokens)):
        tw = index._weights.get(term)
        if tw is None:
            continue
        ords, weights = tw
        scores[ords] += weights
        hit = True
    if not hit:
        return []
    for doc_id in exclude:
        ordinal = index._ordinal.get(doc_id)
        if ordinal is not None:
            scores[ordinal] = 0.0
    cand = np.flatnonzero(scores > 0.0)
    if cand.size == 0:
        return []
    if cand.size > k:
        # keep everything tied with the k-th best so id tie-breaking stays exact
        kth = np.partition(scores[cand], cand.size - k)[cand.size - k]
        cand = cand[scores[cand] >= kth]
    order = np.lexsort((index._id_rank[cand], -scores[cand]))
    top = cand[order[:k]]
    return [(index.doc_ids[i], float(scores[i])) for i in top]


def save_index(index: Bm25Index, path: str | Path) -> None:
    """Write *index* as magic header + version byte + zlib-compressed JSON."""
    payload = {
        "doc_ids": index.doc_ids,
        "doc_len": index.doc_len,
        "k1": index.params.k1,
        "b": index.params.b,
        "postings": {t: [list(p) for p in plist] for t, plist in sorted(index.postings.items())},
    }
    body = zlib.compress(json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode("utf-8"))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("B", FORMAT_VERSION))
        fh.write(body)


def load_index(path: str | Path) -> Bm25Index:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(MAGIC) or len(data) < len(MAGIC) + 1:
        raise Bm25Error(f"{path}: not a BM25 index file")
    version = data[len(MAGIC)]
    if version != FORMAT_VERSION:
        raise Bm25Error(f"{path}: index format version {version}, expected {FORMAT_VERSION}")
    try:
        payload = json.loads(zlib.decompress(data[len(MAGIC) + 1 :]).decode("utf-8"))
    except (zlib.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise Bm25Error(f"{path}: corrupt index body ({exc})") from exc
    postings = {t: [(int(o), int(f)) for o, f in plist] for t, plist in payload["postings"].items()}
    return Bm25Index(
        payload["doc_ids"],
        postings,
        payload["doc_len"],
        Bm25Params(payload["k1"], payload["b"]),
    )
