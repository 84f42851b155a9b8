import json
import subprocess
import sys
from pathlib import Path

import pytest

from redebunk.analytics import REPORT_FILES
from redebunk.cli import main

FIXTURES = Path(__file__).parent / "fixtures"
TABLE1 = FIXTURES / "table1.jsonl"
LABEL_BACKEND = f"{sys.executable} {FIXTURES / 'label_backend.py'}"
FAULTY = f"{sys.executable} {FIXTURES / 'faulty_backend.py'}"


def _tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_ingest(tmp_path, capsys):
    src = tmp_path / "in.jsonl"
    # the AFP row is long enough for language detection to clear its floor
    lines = [TABLE1.read_text("utf-8").splitlines()[i] for i in (4, 0, 1)]
    src.write_text("\n".join([lines[0], "{broken", lines[1], lines[2]]) + "\n", encoding="utf-8")
    assert main(["ingest", "--input", str(src), "--out", str(tmp_path / "out")]) == 0
    out = (tmp_path / "out" / "corpus.jsonl").read_text("utf-8").splitlines()
    assert len(out) == 3
    first = json.loads(out[0])
    assert first["lang"] == "en" and first["modality"] == "text" and first["category"] == "GenMedAdv"
    issues = [json.loads(l) for l in (tmp_path / "out" / "issues.jsonl").read_text().splitlines()]
    assert [i["line"] for i in issues] == [2]


def test_ingest_unreadable(tmp_path, capsys):
    assert main(["ingest", "--input", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "o")]) == 2
    assert "missing.jsonl" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["dedup", "--k", "many"])
    assert exc.value.code == 1
    base = ["dedup", "--input", str(TABLE1), "--out", str(tmp_path / "o")]
    assert main(base + ["--threshold", "1.01"]) == 1
    assert main(base + ["--k", "0"]) == 1
    assert main(base + ["--backend", "external"]) == 1
    assert main(["dedup", "--input", str(TABLE1)]) == 1


def test_dedup_table1_labelled_scorer(tmp_path):
    out = tmp_path / "o"
    rc = main(["dedup", "--input", str(TABLE1), "--out", str(out), "--backend", "external", "--backend-cmd", LABEL_BACKEND])
    assert rc == 0
    links = [json.loads(l) for l in (out / "links.jsonl").read_text().splitlines()]
    per_query = {}
    for l in links:
        per_query[l["query_id"]] = per_query.get(l["query_id"], 0) + 1
    assert per_query["5703ad72bf182bc0"] == 7
    assert per_query["88a91092bd09f59e"] == 3
    clusters = [json.loads(l) for l in (out / "clusters.jsonl").read_text().splitlines()]
    assert [len(c["members"]) for c in clusters] == [8, 4]
    run = json.loads((out / "run.json").read_text())
    assert run["backend"] == "external" and run["skipped_pairs"] == 0
    for name in ("links.csv", "one_to_one.jsonl", "one_to_one.csv", "index.bm25", "skipped_pairs.jsonl"):
        assert (out / name).exists()


def test_dedup_empty_corpus(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["dedup", "--input", str(empty), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "links.jsonl").read_text() == ""
    assert main(["report", "--input", str(empty), "--links", str(tmp_path / "o" / "links.jsonl"),
                 "--out", str(tmp_path / "r")]) == 0
    assert json.loads((tmp_path / "r" / "summary.json").read_text())["total_debunks"] == 0


def test_dedup_backend_failures_exit_3(tmp_path):
    out = tmp_path / "o"
    rc = main(["dedup", "--input", str(TABLE1), "--out", str(out), "--backend", "external",
               "--backend-cmd", f"{FAULTY} range"])
    assert rc == 3
    skipped = (out / "skipped_pairs.jsonl").read_text().splitlines()
    assert skipped and all("outside" in json.loads(l)["reason"] for l in skipped)
    rc = main(["dedup", "--input", str(TABLE1), "--out", str(out), "--backend", "external",
               "--backend-cmd", f"{FAULTY} die"])
    assert rc == 3
    rc = main(["dedup", "--input", str(TABLE1), "--out", str(out), "--backend", "external",
               "--backend-cmd", "/nonexistent/scorer"])
    assert rc == 3


def test_report_twice_is_byte_identical(tmp_path):
    out = tmp_path / "o"
    assert main(["dedup", "--input", str(TABLE1), "--out", str(out), "--backend", "char-ngram"]) == 0
    for name in ("r1", "r2"):
        assert main(["report", "--input", str(TABLE1), "--links", str(out / "links.jsonl"),
                     "--out", str(tmp_path / name)]) == 0
    assert _tree(tmp_path / "r1") == _tree(tmp_path / "r2")
    assert sorted(_tree(tmp_path / "r1")) == sorted(REPORT_FILES)
    summary = json.loads((tmp_path / "r1" / "summary.json").read_text())
    assert summary["run"]["backend"] == "char-ngram"


def test_report_rejects_unknown_ids(tmp_path):
    links = tmp_path / "links.jsonl"
    links.write_text('{"query_id": "nope", "duplicate_id": "x", "score": 1.0, "day_gap": 2}\n')
    assert main(["report", "--input", str(TABLE1), "--links", str(links), "--out", str(tmp_path / "r")]) == 2


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.conf"
    cfg.write_text(f"# run settings\ninput = {TABLE1}\nbackend = char-ngram\nthreshold = 0.99\nk = 5\n")
    out = tmp_path / "o"
    assert main(["dedup", "--config", str(cfg), "--out", str(out)]) == 0
    run = json.loads((out / "run.json").read_text())
    assert (run["backend"], run["threshold"], run["k"]) == ("char-ngram", 0.99, 5)
    assert main(["dedup", "--config", str(cfg), "--out", str(out), "--threshold", "0.5"]) == 0
    assert json.loads((out / "run.json").read_text())["threshold"] == 0.5
    cfg.write_text("colour = blue\n")
    assert main(["dedup", "--config", str(cfg), "--out", str(out)]) == 1
    cfg.write_text("threshold = high\n")
    assert main(["dedup", "--config", str(cfg), "--input", str(TABLE1), "--out", str(out)]) == 1
    assert main(["dedup", "--config", str(tmp_path / "nope.conf"), "--out", str(out)]) == 1


def test_bad_rule_file_is_usage_error(tmp_path):
    rules = tmp_path / "rules.txt"
    rules.write_text("Nonsense: x\n")
    assert main(["ingest", "--input", str(TABLE1), "--out", str(tmp_path / "o"), "--rules", str(rules)]) == 1


def test_query(tmp_path, capsys):
    assert main(["query", "Can vitamin C cure covid19?", "--input", str(TABLE1), "--threshold", "0.1", "--json"]) == 0
    hits = json.loads(capsys.readouterr().out)
    assert hits and all("itamin" in h["claim"] for h in hits[:8])
    assert set(hits[0]) == {"id", "claim", "org", "date", "lang", "url", "score"}
    assert main(["query", "Can vitamin C cure covid19?", "--input", str(TABLE1), "--threshold", "0.1", "--k", "3"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert 0 < len(rows) <= 3 and len(rows[0].split("\t")) == 6
    assert main(["query", "qwxz zzkv", "--input", str(TABLE1), "--json"]) == 0
    assert json.loads(capsys.readouterr().out) == []


def test_query_with_saved_index(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["dedup", "--input", str(TABLE1), "--out", str(out)]) == 0
    args = ["query", "vitamin c cure", "--input", str(TABLE1), "--threshold", "0.2", "--json"]
    assert main(args) == 0
    fresh = capsys.readouterr().out
    assert main(args + ["--index", str(out / "index.bm25")]) == 0
    assert capsys.readouterr().out == fresh
    other = tmp_path / "other.jsonl"
    other.write_text(TABLE1.read_text("utf-8").splitlines()[0] + "\n", encoding="utf-8")
    assert main(["query", "x", "--input", str(other), "--index", str(out / "index.bm25")]) == 2


def test_console_script_and_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "redebunk", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("redebunk")
