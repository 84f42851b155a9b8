"""Command-line entry point: ``redebunk {ingest,dedup,report,query,serve}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 external-backend failure.

Options may also come from ``--config FILE``, a plain ``key = value`` file
(``#`` comments) using the long option names with dashes or underscores,
e.g. ``threshold = 0.8`` or ``backend-cmd = python scorer.py``. Command-line
flags win over the file.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .analytics import write_report
from .categorize import load_category_rules
from .corpus import CorpusReadError, enrich, load_modality_rules, read_corpus, write_records
from .dedup import (
    DedupConfig,
    cluster,
    find_duplicates,
    read_links,
    round_score,
    to_one_to_one,
    write_clusters,
    write_links,
    write_links_csv,
)
from .engine import SearchEngine
from .index import DEFAULT_DEPTH, Bm25Error, build_index, load_index, save_index
from .normalize import canonical_text, load_aliases, normalize_claim
from .rerank import BACKEND_KINDS, DEFAULT_THRESHOLD, BackendError, make_backend
from .rules import RuleFileError

log = logging.getLogger("redebunk")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3

DEFAULTS = {
    "backend": "tfidf-cosine",
    "backend_cmd": None,
    "k": DEFAULT_DEPTH,
    "threshold": DEFAULT_THRESHOLD,
    "aliases": None,
    "rules": None,
    "modality_rules": None,
    "jobs": 1,
    "bind": "127.0.0.1:8080",
    "ngram": 3,
    "timeout": 30.0,
    "index": None,
    "input": None,
    "out": None,
    "links": None,
}

_TYPES = {"k": int, "threshold": float, "jobs": int, "ngram": int, "timeout": float}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    input: Path | None
    out: Path | None
    backend: str
    backend_cmd: str | None
    k: int
    threshold: float
    aliases: tuple[str, ...] | None
    rules: list | None
    modality_rules: list | None
    jobs: int
    bind: str
    ngram: int
    timeout: float
    index: Path | None
    links: Path | None

    def backend_info(self) -> dict:
        info = {"backend": self.backend, "k": self.k, "threshold": self.threshold}
        if self.backend == "char-ngram":
            info["ngram"] = self.ngram
        if self.backend == "external":
            info["backend_cmd"] = self.backend_cmd
        return info


def read_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    try:
        parser.read_string("[redebunk]\n" + text, source=path)
    except configparser.Error as exc:
        raise UsageError(f"bad config {path}: {exc}") from None
    out = {}
    for key, value in parser["redebunk"].items():
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    for key, conv in _TYPES.items():
        try:
            merged[key] = conv(merged[key])
        except (TypeError, ValueError):
            raise UsageError(f"{key} must be a {conv.__name__}, got {merged[key]!r}") from None
    if not 0.0 <= merged["threshold"] <= 1.0:
        raise UsageError(f"threshold must be in [0, 1], got {merged['threshold']}")
    if merged["k"] < 1:
        raise UsageError(f"k must be >= 1, got {merged['k']}")
    if merged["jobs"] < 1:
        raise UsageError(f"jobs must be >= 1, got {merged['jobs']}")
    if merged["backend"] not in BACKEND_KINDS:
        raise UsageError(f"backend must be one of {', '.join(BACKEND_KINDS)}")
    if merged["backend"] == "external" and not merged["backend_cmd"]:
        raise UsageError("--backend external needs --backend-cmd")
    try:
        aliases = load_aliases(merged["aliases"]) if merged["aliases"] else None
        rules = load_category_rules(merged["rules"]) if merged["rules"] else None
        modality_rules = load_modality_rules(merged["modality_rules"]) if merged["modality_rules"] else None
    except RuleFileError as exc:
        raise UsageError(str(exc)) from None
    except OSError as exc:
        raise UsageError(f"cannot read {exc.filename}: {exc.strerror}") from None

    def path(key):
        return Path(merged[key]) if merged[key] else None

    return RunConfig(
        input=path("input"),
        out=path("out"),
        backend=merged["backend"],
        backend_cmd=merged["backend_cmd"],
        k=merged["k"],
        threshold=merged["threshold"],
        aliases=aliases,
        rules=rules,
        modality_rules=modality_rules,
        jobs=merged["jobs"],
        bind=merged["bind"],
        ngram=merged["ngram"],
        timeout=merged["timeout"],
        index=path("index"),
        links=path("links"),
    )


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) is None:
            raise UsageError(f"--{name} is required")


def _out_dir(cfg: RunConfig) -> Path:
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {cfg.out}: {exc.strerror}") from None
    return cfg.out


def _load(cfg: RunConfig):
    try:
        records, issues = read_corpus(cfg.input)
    except CorpusReadError as exc:
        raise DataError(str(exc)) from None
    for issue in issues:
        log.warning("%s:%d: %s", cfg.input, issue.line, issue.reason)
    return records, issues


def _enrich_all(records, cfg: RunConfig):
    return [
        enrich(r, aliases=cfg.aliases, category_rules=cfg.rules, modality_rules=cfg.modality_rules)
        for r in records
    ]


def _backend(cfg: RunConfig, records):
    texts = [canonical_text(r.claim_text, cfg.aliases) for r in records]
    return make_backend(
        cfg.backend,
        corpus_texts=texts,
        ngram=cfg.ngram,
        command=cfg.backend_cmd,
        timeout=cfg.timeout,
    )


def cmd_ingest(cfg: RunConfig) -> int:
    _require(cfg, "input", "out")
    records, issues = _load(cfg)
    out = _out_dir(cfg)
    write_records(_enrich_all(records, cfg), out / "corpus.jsonl")
    with open(out / "issues.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for issue in issues:
            fh.write(json.dumps({"line": issue.line, "reason": issue.reason}, ensure_ascii=False) + "\n")
    print(f"{len(records)} records, {len(issues)} issues -> {out}", file=sys.stderr)
    return EXIT_OK


def cmd_dedup(cfg: RunConfig) -> int:
    _require(cfg, "input", "out")
    records, _ = _load(cfg)
    records = _enrich_all(records, cfg)
    out = _out_dir(cfg)
    claims = [normalize_claim(r, cfg.aliases) for r in records]
    index = build_index(claims)
    save_index(index, out / "index.bm25")
    backend = _backend(cfg, records)
    skipped = []
    try:
        links = find_duplicates(
            records, index, backend, DedupConfig(cfg.k, cfg.threshold),
            claims=claims, jobs=cfg.jobs, skipped=skipped,
        )
    finally:
        if hasattr(backend, "close"):
            backend.close()
    # keep in-memory scores identical to what lands on disk
    links = [type(l)(l.query_id, l.duplicate_id, round_score(l.relevance_score), l.day_gap) for l in links]
    one = to_one_to_one(links)
    by_id = {r.id: r for r in records}
    write_links(links, out / "links.jsonl")
    write_links_csv(links, out / "links.csv")
    write_links(one.values(), out / "one_to_one.jsonl")
    write_links_csv(one.values(), out / "one_to_one.csv")
    write_clusters(cluster(links, by_id), out / "clusters.jsonl")
    with open(out / "skipped_pairs.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for s in skipped:
            fh.write(json.dumps({"query_id": s.query_id, "candidate_id": s.candidate_id, "reason": s.reason},
                                ensure_ascii=False) + "\n")
    info = cfg.backend_info()
    info.update({"records": len(records), "links": len(links), "skipped_pairs": len(skipped)})
    with open(out / "run.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(info, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    print(f"{len(links)} links over {len(one)} query claims -> {out}", file=sys.stderr)
    if skipped:
        print(f"{len(skipped)} pairs skipped after backend errors", file=sys.stderr)
        return EXIT_BACKEND
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    _require(cfg, "input", "links", "out")
    records, _ = _load(cfg)
    records = _enrich_all(records, cfg)
    try:
        links = read_links(cfg.links)
    except OSError as exc:
        raise DataError(f"cannot read {cfg.links}: {exc.strerror}") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None
    known = {r.id for r in records}
    missing = sorted({i for l in links for i in (l.query_id, l.duplicate_id)} - known)
    if missing:
        raise DataError(f"links reference {len(missing)} unknown record ids, e.g. {missing[0]}")
    run_info = None
    run_file = cfg.links.parent / "run.json"
    if run_file.exists():
        run_info = json.loads(run_file.read_text("utf-8"))
    summary = write_report(records, links, _out_dir(cfg), run_info=run_info)
    print(json.dumps({k: summary[k] for k in ("total_debunks", "duplicate_query_count", "duplicate_fraction",
                                             "crosslingual_gap_count")}), file=sys.stderr)
    return EXIT_OK


def _engine(cfg: RunConfig) -> SearchEngine:
    _require(cfg, "input")
    records, _ = _load(cfg)
    records = _enrich_all(records, cfg)
    index = None
    if cfg.index is not None:
        try:
            index = load_index(cfg.index)
        except OSError as exc:
            raise DataError(f"cannot read {cfg.index}: {exc.strerror}") from None
    backend = _backend(cfg, records)
    return SearchEngine(records, backend, index=index, aliases=cfg.aliases)


def cmd_query(cfg: RunConfig, text: str, as_json: bool = False) -> int:
    engine = _engine(cfg)
    skipped = []
    try:
        hits = engine.query(text, cfg.k, cfg.threshold, skipped)
    finally:
        if hasattr(engine.backend, "close"):
            engine.backend.close()
    if as_json:
        print(json.dumps([h.as_dict() for h in hits], ensure_ascii=False))
    else:
        for h in hits:
            print("\t".join((f"{h.score:.6f}", h.org, h.date, h.lang or "", h.url, h.id)))
    return EXIT_BACKEND if skipped else EXIT_OK


def cmd_serve(cfg: RunConfig) -> int:
    from .service import make_server

    host, _, port = cfg.bind.rpartition(":")
    try:
        port_num = int(port)
    except ValueError:
        raise UsageError(f"--bind must be HOST:PORT, got {cfg.bind!r}") from None
    engine = _engine(cfg)
    server = make_server(engine, host or "127.0.0.1", port_num, default_k=cfg.k, default_threshold=cfg.threshold)
    print(f"serving {len(engine.records)} debunks on http://{host or '127.0.0.1'}:{server.server_port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        if hasattr(engine.backend, "close"):
            engine.backend.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--input", help="line-delimited debunk records")
    common.add_argument("--out", help="output directory")
    common.add_argument("--aliases", help="alias file, one per line")
    common.add_argument("--rules", help="category rule file")
    common.add_argument("--modality-rules", dest="modality_rules", help="modality rule file")
    common.add_argument("-v", "--verbose", action="store_true")

    search = _Parser(add_help=False)
    search.add_argument("--backend", choices=BACKEND_KINDS)
    search.add_argument("--backend-cmd", dest="backend_cmd", help="command line of an external scorer")
    search.add_argument("--ngram", type=int, help="n for the char-ngram backend (default 3)")
    search.add_argument("--timeout", type=float, help="seconds to wait per external response")
    search.add_argument("--k", type=int, help=f"lexical candidate depth (default {DEFAULT_DEPTH})")
    search.add_argument("--threshold", type=float, help=f"relevance threshold (default {DEFAULT_THRESHOLD})")

    parser = _Parser(prog="redebunk", description="Find and analyse claims that keep being debunked.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("ingest", parents=[common], help="validate and enrich a record file")
    p = sub.add_parser("dedup", parents=[common, search], help="find duplicate debunks")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p = sub.add_parser("report", parents=[common], help="write analytics tables")
    p.add_argument("--links", help="links.jsonl written by dedup")
    p = sub.add_parser("query", parents=[common, search], help="search prior debunks for a claim")
    p.add_argument("text", help="claim to look up")
    p.add_argument("--index", help="index.bm25 written by dedup")
    p.add_argument("--json", action="store_true", help="print the /search JSON array")
    p = sub.add_parser("serve", parents=[common, search], help="HTTP search service")
    p.add_argument("--index", help="index.bm25 written by dedup")
    p.add_argument("--bind", help="HOST:PORT (default 127.0.0.1:8080)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "dedup":
            return cmd_dedup(cfg)
        if args.command == "report":
            return cmd_report(cfg)
        if args.command == "query":
            return cmd_query(cfg, args.text, args.json)
        return cmd_serve(cfg)
    except UsageError as exc:
        print(f"redebunk: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, Bm25Error) as exc:
        print(f"redebunk: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BackendError as exc:
        print(f"redebunk: backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
