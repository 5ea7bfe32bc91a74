import json
import random

import pytest

from ontodst.matching import (
    SCAN_BACKEND,
    EntityAccumulator,
    accumulate,
    build_lexicon,
    match_utterance,
)
from ontodst.matching import _scan_py
from ontodst.ontology import EntityRecord, KnowledgeBase, normalize_surface


def kb_of(*names, domain="restaurant"):
    return KnowledgeBase(records=[EntityRecord(name=n, domain=domain) for n in names])


def naive_spans(surfaces, utterance):
    """Independent oracle: test every surface at every token position,
    then keep longest matches greedily (ties to the leftmost)."""
    tokens = normalize_surface(utterance).split()
    candidates = []
    for surface in surfaces:
        pat = surface.split()
        for start in range(len(tokens) - len(pat) + 1):
            if tokens[start:start + len(pat)] == pat:
                candidates.append((start, start + len(pat), surface))
    chosen = []
    for start, end, surface in sorted(candidates, key=lambda c: (c[0] - c[1], c[0])):
        if all(end <= s or e <= start for s, e, _ in chosen):
            chosen.append((start, end, surface))
    return sorted(chosen)


def test_build_lexicon_recognizes_fixture_names():
    kb = kb_of("prezzo", "the gardenia")
    index = build_lexicon(kb)
    assert [s.as_tuple() for s in match_utterance(index, "book prezzo now")] == \
        [("prezzo", "restaurant", 1, 2)]
    assert [s.surface for s in match_utterance(index, "i love the gardenia")] == ["the gardenia"]


def test_build_lexicon_alias_shares_payload():
    record = EntityRecord(name="the gardenia", domain="restaurant",
                          aliases={"the gardenia", "gardenia"})
    index = build_lexicon(KnowledgeBase(records=[record]))
    # primary name plus the article-stripped alias
    assert index.surface_count == 2
    a = match_utterance(index, "gardenia please")
    b = match_utterance(index, "the gardenia please")
    assert a[0].record is b[0].record


def test_build_lexicon_rejects_empty_kb():
    with pytest.raises(ValueError):
        build_lexicon(KnowledgeBase(records=[]))


def test_match_empty_utterance(kb):
    index = build_lexicon(kb)
    assert match_utterance(index, "") == []
    assert match_utterance(index, "   !! ") == []


def test_match_is_word_boundary_aligned():
    index = build_lexicon(kb_of("ash", "pip"))
    # no mid-token hits: "ash" must not fire inside "washington"
    assert match_utterance(index, "washington pipasha") == []
    assert [s.as_tuple() for s in match_utterance(index, "the ash tree")] == [("ash", "restaurant", 1, 2)]


def test_longest_match_wins():
    index = build_lexicon(kb_of("pipasha", "pipasha restaurant"))
    spans = match_utterance(index, "book pipasha restaurant today")
    assert [s.surface for s in spans] == ["pipasha restaurant"]
    spans = match_utterance(index, "is pipasha open")
    assert [s.surface for s in spans] == ["pipasha"]


def test_match_span_equals_utterance_slice(kb):
    index = build_lexicon(kb)
    utterance = "please book The Gardenia, near all saints church!"
    tokens = normalize_surface(utterance).split()
    spans = match_utterance(index, utterance)
    assert spans
    for span in spans:
        assert span.surface == " ".join(tokens[span.start:span.end])


def test_match_output_sorted_and_deterministic(kb):
    index = build_lexicon(kb)
    utterance = "taxi from cineworld cinema to the lensfield hotel then prezzo"
    first = [s.as_tuple() for s in match_utterance(index, utterance)]
    second = [s.as_tuple() for s in match_utterance(index, utterance)]
    assert first == second
    assert first == sorted(first, key=lambda t: t[2])


def _random_case(rng):
    words = [f"w{i}" for i in range(14)]
    names = []
    for _ in range(rng.randint(1, 50)):
        names.append(" ".join(rng.choice(words) for _ in range(rng.randint(1, 3))))
    names = sorted(set(names))
    utterance = " ".join(rng.choice(words) for _ in range(rng.randint(0, 40)))
    return names, utterance


def test_matcher_equals_naive_scan_on_random_kbs():
    rng = random.Random(20240)
    for _ in range(150):
        names, utterance = _random_case(rng)
        kb = KnowledgeBase(records=[EntityRecord(name=n, domain="hotel", aliases={n}) for n in names])
        index = build_lexicon(kb)
        got = sorted({(s.start, s.end, s.surface) for s in match_utterance(index, utterance)})
        assert got == naive_spans(names, utterance), (names, utterance)


def test_large_synthetic_kb_against_naive_scan():
    rng = random.Random(7)
    pool = [f"tok{i}" for i in range(60)]
    names = sorted({" ".join(rng.choice(pool) for _ in range(rng.randint(1, 4))) for _ in range(1000)})
    kb = KnowledgeBase(records=[EntityRecord(name=n, domain="attraction", aliases={n}) for n in names])
    index = build_lexicon(kb)
    for _ in range(100):
        utterance = " ".join(rng.choice(pool) for _ in range(rng.randint(0, 30)))
        got = sorted({(s.start, s.end, s.surface) for s in match_utterance(index, utterance)})
        assert got == naive_spans(names, utterance)


def test_no_false_surfaces(kb):
    index = build_lexicon(kb)
    surfaces = {a for r in kb.records for a in r.aliases}
    for utterance in ("book the gardenia and pipasha restaurant",
                      "worth house to cineworld cinema",
                      "nothing to see here"):
        for span in match_utterance(index, utterance):
            assert span.surface in surfaces


def test_backends_agree(kb):
    if SCAN_BACKEND != "cython":
        pytest.skip("compiled kernel not built")
    index = build_lexicon(kb)
    auto = index.automaton
    rng = random.Random(99)
    vocab = list(auto.token_ids) + ["zzz"]
    for _ in range(200):
        tokens = [rng.choice(vocab) for _ in range(rng.randint(0, 25))]
        ids = auto.encode(tokens)
        import numpy as np

        from ontodst.matching import _kernel

        fast = _kernel.scan(np.asarray(ids, dtype=np.int32), *auto.arrays)
        slow = _scan_py.scan(ids, auto.trans_start, auto.trans_tok, auto.trans_next,
                             auto.fail, auto.out_pat, auto.out_link)
        assert (list(fast[0]), list(fast[1])) == (list(slow[0]), list(slow[1]))


def test_accumulate_examples():
    acc = EntityAccumulator.empty()
    span = _span("prezzo", "restaurant")
    acc1 = accumulate(acc, [span], 1)
    assert acc1.entries == (("prezzo", "restaurant"),)
    acc2 = accumulate(acc1, [span], 2)
    assert acc2.entries == acc1.entries
    # value semantics: inputs untouched
    assert acc.entries == ()


def _span(surface, domain):
    from ontodst.matching import MatchSpan

    record = EntityRecord(name=surface, domain=domain)
    return MatchSpan(surface=surface, start=0, end=len(surface.split()),
                     domain=domain, record_index=0, record=record)


def test_accumulate_first_seen_order():
    a, b = _span("a and b guest house", "hotel"), _span("tr1234", "train")
    acc = EntityAccumulator.empty()
    acc = accumulate(acc, [a], 1)
    acc = accumulate(acc, [b], 2)
    acc = accumulate(acc, [a], 3)
    assert acc.entries == (("a and b guest house", "hotel"), ("tr1234", "train"))
    assert acc.first_seen_turn[("a and b guest house", "hotel")] == 1
    assert acc.first_seen_turn[("tr1234", "train")] == 2


def test_accumulate_monotone_growth(kb):
    index = build_lexicon(kb)
    rng = random.Random(3)
    utterances = ["book the gardenia", "prezzo please", "", "worth house and prezzo", "tr1234"]
    acc = EntityAccumulator.empty()
    previous = set()
    for turn, utt in enumerate(utterances):
        acc = accumulate(acc, match_utterance(index, utt), turn)
        current = set(acc.entries)
        assert previous <= current
        previous = current


def test_benchmark_smoke():
    import subprocess
    import sys
    from pathlib import Path

    script = Path(__file__).resolve().parent.parent / "benchmarks" / "bench_matcher.py"
    result = subprocess.run(
        [sys.executable, str(script), "--entities", "50", "--utterances", "30", "--repeats", "1"],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    assert "python" in result.stdout
    assert "MISMATCH" not in result.stdout


def test_match_debug_dump_is_json_serializable(kb):
    index = build_lexicon(kb)
    for span in match_utterance(index, "prezzo near the fez club"):
        line = json.dumps({"surface": span.surface, "domain": span.domain,
                           "start": span.start, "end": span.end})
        assert json.loads(line)["surface"] in (span.surface,)
