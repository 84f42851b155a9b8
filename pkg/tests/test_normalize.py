import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redebunk.normalize import (
    CANONICAL,
    DEFAULT_ALIASES,
    canonical_text,
    canonicalize_aliases,
    load_aliases,
    normalize_claim,
    tokenize,
)


class _Rec:
    def __init__(self, id, claim_text):
        self.id = id
        self.claim_text = claim_text


@pytest.mark.parametrize("alias", ["sars-cov2", "covid19", "2019-ncov", "covid", "covid-19"])
def test_listed_aliases_become_coronavirus(alias):
    assert canonicalize_aliases(alias) == CANONICAL
    assert canonicalize_aliases(alias.upper()) == CANONICAL
    assert canonicalize_aliases(f"about {alias} today") == f"about {CANONICAL} today"


def test_examples():
    assert canonicalize_aliases("Vitamin C can cure COVID-19.") == "Vitamin C can cure coronavirus."
    assert canonicalize_aliases("coronavirus") == "coronavirus"
    assert canonicalize_aliases("COVID and covid19 and 2019-nCoV") == "coronavirus and coronavirus and coronavirus"


def test_longest_alias_wins():
    assert canonicalize_aliases("SARS-CoV-2 spreads") == "coronavirus spreads"
    assert canonicalize_aliases("corona  virus") == "coronavirus"


def test_word_boundaries_protect_other_words():
    assert canonicalize_aliases("covidence studies") == "covidence studies"
    assert canonicalize_aliases("precovid times") == "precovid times"
    assert canonicalize_aliases("covid-19s") == "covid-19s"


def test_tokenize_examples():
    assert tokenize("Vitamin C can cure coronavirus.") == ["vitamin", "c", "can", "cure", "coronavirus"]
    assert tokenize("") == []
    assert tokenize("L'alimentation alcaline…") == ["l'alimentation", "alcaline"]


def test_tokenize_edges_and_scripts():
    assert tokenize("-well- 'quoted' re-infection") == ["well", "quoted", "re-infection"]
    assert tokenize("ÉTÉ Été") == ["été", "été"]
    assert tokenize("विटामिन सी") == ["विटामिन", "सी"]
    assert tokenize("--- ''") == []


def test_normalize_claim_examples():
    assert normalize_claim(_Rec("a", "COVID19 cure found")).tokens == ("coronavirus", "cure", "found")
    n = normalize_claim(_Rec("b", "Vitamin C can cure coronavirus."))
    assert n.tokens == ("vitamin", "c", "can", "cure", "coronavirus")
    assert n.record_id == "b"
    assert n.canonical_text == "vitamin c can cure coronavirus."


def test_canonical_text_has_no_alias():
    text = canonical_text("COVID-19, Covid and SARS-CoV-2 and nCoV")
    for alias in DEFAULT_ALIASES:
        assert not re.search(rf"(?<!\w){re.escape(alias)}(?!\w)", text)


def test_load_aliases(tmp_path):
    p = tmp_path / "aliases.txt"
    p.write_text("# comment\nfoo bar\n\n  baz  \n", encoding="utf-8")
    aliases = load_aliases(p)
    assert set(aliases) == {"foo bar", "baz"}
    assert canonicalize_aliases("Foo  Bar and baz and covid", aliases) == "coronavirus and coronavirus and covid"
    assert set(load_aliases()) == set(DEFAULT_ALIASES)


_PIECES = list(DEFAULT_ALIASES) + ["COVID", "Covid-19", "coronavirus", "covidence", "-", "'", " ", ".", "x", "19", "é", "Ω"]


def _fuzz_strings(n, seed=1234):
    rng = random.Random(seed)
    alphabet = "abcovidsrn-19 .'’\tÉ"
    for _ in range(n):
        parts = []
        for _ in range(rng.randint(0, 8)):
            if rng.random() < 0.5:
                parts.append(rng.choice(_PIECES))
            else:
                parts.append("".join(rng.choice(alphabet) for _ in range(rng.randint(1, 6))))
        yield "".join(parts)


def test_idempotent_on_10k_fuzzed_strings():
    for s in _fuzz_strings(10_000):
        once = canonicalize_aliases(s)
        assert canonicalize_aliases(once) == once, s


@settings(max_examples=300)
@given(st.text())
def test_idempotent_hypothesis(s):
    once = canonicalize_aliases(s)
    assert canonicalize_aliases(once) == once


@settings(max_examples=300)
@given(st.text())
def test_tokens_never_empty(s):
    assert all(tokenize(s))


def _mentions_coronavirus(text: str) -> bool:
    # independent check over whitespace-separated chunks and their tokens
    single = {a for a in DEFAULT_ALIASES if " " not in a} | {CANONICAL}
    chunks = text.lower().split()
    for i, chunk in enumerate(chunks):
        if single & set(tokenize(chunk)):
            return True
        if i + 1 < len(chunks) and chunk.endswith("corona") and chunks[i + 1].startswith("virus"):
            left, right = tokenize(chunk), tokenize(chunks[i + 1])
            if left and left[-1] == "corona" and right and right[0] == "virus":
                return True
    return False


@settings(max_examples=500)
@given(st.lists(st.sampled_from(_PIECES + ["foo", "bar", "virus", "corona"]), max_size=8).map(" ".join))
def test_coronavirus_token_iff_mentioned(s):
    tokens = normalize_claim(_Rec("x", s)).tokens
    assert ("coronavirus" in tokens) == _mentions_coronavirus(s)
