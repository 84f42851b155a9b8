"""Second-stage relevance scoring of (query, candidate) claim pairs.

Every backend maps a pair of canonical claim texts to a score in [0, 1]:

``tfidf-cosine``
    cosine of tf-idf token vectors; idf is fitted on the corpus as
    ``ln((1 + N) / (1 + df)) + 1`` so every weight is positive.
``char-ngram``
    cosine of character n-gram count vectors (n=3 by default). A score of
    exactly 1.0 is reserved for identical texts.
``external``
    a long-running subprocess speaking one JSON object per line on
    stdin/stdout: request ``{"id": 1, "a": "...", "b": "..."}``, response
    ``{"id": 1, "score": 0.93}``.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import shlex
import subprocess
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .normalize import tokenize

log = logging.getLogger(__name__)

BACKEND_KINDS = ("tfidf-cosine", "char-ngram", "external")
DEFAULT_THRESHOLD = 0.8

_BELOW_ONE = math.nextafter(1.0, 0.0)


class BackendError(Exception):
    """The backend cannot be used at all (e.g. the process will not start)."""


class PairError(Exception):
    """Scoring one pair failed; the pair is skipped and reported."""


@dataclass(frozen=True)
class ScoredCandidate:
    query_id: str
    candidate_id: str
    lexical_score: float
    relevance_score: float


@dataclass(frozen=True)
class SkippedPair:
    query_id: str
    candidate_id: str
    reason: str


def _cosine(u: Mapping[str, float], v: Mapping[str, float], nu: float, nv: float) -> float:
    if nu == 0 or nv == 0:
        return 0.0
    common = sorted(u.keys() & v.keys())
    dot = sum(u[k] * v[k] for k in common)
    return min(1.0, max(0.0, dot / (math.sqrt(nu) * math.sqrt(nv))))


class CharNgramBackend:
    kind = "char-ngram"

    def __init__(self, n: int = 3):
        if n < 1:
            raise ValueError(f"n-gram size must be >= 1, got {n}")
        self.n = n
        self._cache: dict[str, tuple[Counter[str], int]] = {}

    def __getstate__(self):
        return {"n": self.n}

    def __setstate__(self, state):
        self.__init__(state["n"])

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n}

    def _vector(self, text: str) -> tuple[Counter[str], int]:
        hit = self._cache.get(text)
        if hit is None:
            n = self.n
            if 0 < len(text) < n:
                grams = Counter([text])
            else:
                grams = Counter(text[i : i + n] for i in range(len(text) - n + 1))
            hit = (grams, sum(c * c for c in grams.values()))
            if len(self._cache) < 200_000:
                self._cache[text] = hit
        return hit

    def score(self, a: str, b: str) -> float:
        if a == b:
            return 1.0 if a else 0.0
        (u, nu), (v, nv) = self._vector(a), self._vector(b)
        if nu == 0 or nv == 0:
            return 0.0
        dot = sum(u[k] * v[k] for k in u.keys() & v.keys())
        # integer arithmetic keeps the value exact and symmetric
        value = dot / math.sqrt(nu * nv)
        return min(_BELOW_ONE, max(0.0, value))


class TfidfCosineBackend:
    kind = "tfidf-cosine"

    def __init__(self, corpus_texts: Iterable[str] = ()):
        df: Counter[str] = Counter()
        n_docs = 0
        for text in corpus_texts:
            n_docs += 1
            df.update(set(tokenize(text)))
        self.n_docs = n_docs
        self.df = dict(df)
        self._cache: dict[str, tuple[dict[str, float], float]] = {}

    def __getstate__(self):
        return {"n_docs": self.n_docs, "df": self.df}

    def __setstate__(self, state):
        self.n_docs = state["n_docs"]
        self.df = state["df"]
        self._cache = {}

    def describe(self) -> dict:
        return {"kind": self.kind, "n_docs": self.n_docs}

    def idf(self, term: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.df.get(term, 0))) + 1.0

    def _vector(self, text: str) -> tuple[dict[str, float], float]:
        hit = self._cache.get(text)
        if hit is None:
            tf = Counter(tokenize(text))
            vec = {t: c * self.idf(t) for t, c in tf.items()}
            hit = (vec, sum(w * w for _, w in sorted(vec.items())))
            if len(self._cache) < 200_000:
                self._cache[text] = hit
        return hit

    def score(self, a: str, b: str) -> float:
        (u, nu), (v, nv) = self._vector(a), self._vector(b)
        if nu == 0 or nv == 0:
            return 0.0
        if u == v:
            return 1.0
        return _cosine(u, v, nu, nv)


_EOF = object()


class ExternalBackend:
    """Scores pairs through a subprocess; one request in flight at a time.

    Bad responses, out-of-range scores, timeouts and process death raise
    PairError for the pair at hand. The process is restarted on the next
    request after it dies; more than *max_restarts* restarts is fatal.
    """

    kind = "external"

    def __init__(self, command: Sequence[str] | str, *, timeout: float = 30.0, max_restarts: int = 3):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise BackendError("external backend command is empty")
        self.timeout = timeout
        self.max_restarts = max_restarts
        self._lock = threading.Lock()
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()
        self._next_id = 0
        self._starts = 0

    def describe(self) -> dict:
        return {"kind": self.kind, "command": self.command}

    def _start(self) -> None:
        if self._starts > self.max_restarts:
            raise BackendError(f"external backend died {self._starts} times; giving up")
        self._starts += 1
        try:
            proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            raise BackendError(f"cannot start external backend {self.command[0]!r}: {exc}") from exc
        lines: queue.Queue = queue.Queue()

        def pump(stream=proc.stdout, out=lines):
            for raw in stream:
                out.put(raw)
            out.put(_EOF)

        threading.Thread(target=pump, daemon=True).start()
        self._proc, self._lines = proc, lines

    def _kill(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    def close(self) -> None:
        with self._lock:
            if self._proc is not None:
                try:
                    self._proc.stdin.close()
                    self._proc.wait(timeout=5)
                except (OSError, subprocess.TimeoutExpired):
                    pass
                self._kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def score(self, a: str, b: str) -> float:
        with self._lock:
            if self._proc is None or self._proc.poll() is not None:
                self._kill()
                self._start()
            self._next_id += 1
            req_id = self._next_id
            line = json.dumps({"id": req_id, "a": a, "b": b}, ensure_ascii=False) + "\n"
            try:
                self._proc.stdin.write(line.encode("utf-8"))
                self._proc.stdin.flush()
            except OSError as exc:
                self._kill()
                raise PairError(f"backend process died: {exc}") from None
            return self._await(req_id)

    def _await(self, req_id: int) -> float:
        while True:
            try:
                raw = self._lines.get(timeout=self.timeout)
            except queue.Empty:
                self._kill()
                raise PairError(f"no response within {self.timeout}s") from None
            if raw is _EOF:
                self._kill()
                raise PairError("backend process exited")
            try:
                msg = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                raise PairError(f"malformed response line {raw[:80]!r}") from None
            if not isinstance(msg, dict) or not isinstance(msg.get("id"), int) or isinstance(msg.get("id"), bool):
                raise PairError(f"response without integer id: {raw[:80]!r}")
            if msg["id"] < req_id:
                # late answer to a pair that already failed
                continue
            if msg["id"] != req_id:
                raise PairError(f"response id {msg['id']} does not match request {req_id}")
            score = msg.get("score")
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise PairError(f"response score {score!r} is not a number")
            score = float(score)
            if not (0.0 <= score <= 1.0):
                raise PairError(f"response score {score!r} outside [0, 1]")
            return score


def make_backend(
    kind: str,
    *,
    corpus_texts: Iterable[str] = (),
    ngram: int = 3,
    command: Sequence[str] | str | None = None,
    timeout: float = 30.0,
):
    if kind == "char-ngram":
        return CharNgramBackend(ngram)
    if kind == "tfidf-cosine":
        return TfidfCosineBackend(corpus_texts)
    if kind == "external":
        if not command:
            raise BackendError("external backend needs a command")
        return ExternalBackend(command, timeout=timeout)
    raise ValueError(f"unknown backend {kind!r}; expected one of {', '.join(BACKEND_KINDS)}")


def score_pair(backend, a: str, b: str) -> float:
    return backend.score(a, b)


def check_threshold(threshold: float) -> float:
    if not (0.0 <= threshold <= 1.0):
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    return threshold


def rerank(
    candidates: Iterable[tuple[str, str, float]],
    backend,
    threshold: float,
    text_of: Mapping[str, str] | Callable[[str], str],
) -> tuple[list[ScoredCandidate], list[SkippedPair]]:
    """Score (query_id, candidate_id, lexical_score) triples and keep those
    at or above *threshold*, best first (ties by candidate id).

    Pairs the backend could not score are returned separately.
    """
    check_threshold(threshold)
    lookup = text_of.__getitem__ if isinstance(text_of, Mapping) else text_of
    kept: list[ScoredCandidate] = []
    skipped: list[SkippedPair] = []
    for query_id, candidate_id, lexical in candidates:
        try:
            rel = backend.score(lookup(query_id), lookup(candidate_id))
        except PairError as exc:
            log.warning("skipping pair %s/%s: %s", query_id, candidate_id, exc)
            skipped.append(SkippedPair(query_id, candidate_id, str(exc)))
            continue
        if not (0.0 <= rel <= 1.0):
            skipped.append(SkippedPair(query_id, candidate_id, f"score {rel!r} outside [0, 1]"))
            continue
        if rel >= threshold:
            kept.append(ScoredCandidate(query_id, candidate_id, lexical, rel))
    kept.sort(key=lambda c: (-c.relevance_score, c.candidate_id))
    return kept, skipped
