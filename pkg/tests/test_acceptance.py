"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
lines.  Every oracle here is written directly from the metric/matcher
definitions, independent of the library code paths it checks.
"""

import json
import random
import subprocess
import sys
import time

from ontodst.correction import CorrectionPolicy, correct, correction_impact
from ontodst.formatting import SegmentKind, build_input, render_db_entries
from ontodst.matching import EntityAccumulator, build_lexicon, match_utterance
from ontodst.metrics import joint_goal_accuracy, slot_accuracy, slot_f1
from ontodst.ontology import EntityRecord, KnowledgeBase, normalize_surface
from ontodst.states import DialogueState, apply_operations, derive_operations
from ontodst.wordpiece import patch_vocab, wordpiece_tokenize

from conftest import FIXTURES

NONE = "none"
VALUES = [NONE, "dontcare", "prezzo", "east", "west", "4", "18 30", "yes"]


def ok(name):
    print(f"PASS: {name}")


def random_state(catalog, rng, none_bias=0.55):
    ids = tuple(catalog.slot_ids)
    return DialogueState(
        values={s: (NONE if rng.random() < none_bias else rng.choice(VALUES)) for s in ids},
        slot_ids=ids,
    )


# --------------------------------------------------------- criterion 1

def test_metric_oracle_equivalence(catalog):
    def brute_jga(preds, golds):
        return sum(all(p.get(s) == g.get(s) for s in g.slot_ids)
                   for p, g in zip(preds, golds)) / len(golds)

    def brute_sa(preds, golds):
        cells = [(p.get(s), g.get(s)) for p, g in zip(preds, golds) for s in g.slot_ids]
        return sum(pv == gv for pv, gv in cells) / len(cells)

    def brute_f1(preds, golds):
        gold = {(i, s, g.get(s)) for i, g in enumerate(golds) for s in g.slot_ids if g.get(s) != NONE}
        pred = {(i, s, p.get(s)) for i, p in enumerate(preds) for s in p.slot_ids if p.get(s) != NONE}
        tp = len(gold & pred)
        precision = tp / len(pred) if pred else 0.0
        recall = tp / len(gold) if gold else 0.0
        return 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    rng = random.Random(1001)
    start = time.monotonic()
    for _ in range(200):
        turns = sum(rng.randint(1, 6) for _ in range(rng.randint(1, 5)))
        golds = [random_state(catalog, rng) for _ in range(turns)]
        preds = [random_state(catalog, rng) for _ in range(turns)]
        assert abs(joint_goal_accuracy(preds, golds) - brute_jga(preds, golds)) <= 1e-12
        assert abs(slot_accuracy(preds, golds) - brute_sa(preds, golds)) <= 1e-12
        assert abs(slot_f1(preds, golds) - brute_f1(preds, golds)) <= 1e-12
    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"metric oracle sweep took {elapsed:.1f}s"
    ok(f"metric oracle equivalence (200 corpora, {elapsed:.2f}s)")


# --------------------------------------------------------- criterion 2

def test_matcher_oracle_equivalence():
    def naive(surfaces, utterance):
        tokens = normalize_surface(utterance).split()
        found = []
        for surface in surfaces:
            pat = surface.split()
            for start in range(len(tokens) - len(pat) + 1):
                if tokens[start:start + len(pat)] == pat:
                    found.append((start, start + len(pat), surface))
        kept = []
        for start, end, surface in sorted(found, key=lambda c: (c[0] - c[1], c[0])):
            if all(end <= s or e <= start for s, e, _ in kept):
                kept.append((start, end, surface))
        return set(kept)

    rng = random.Random(1002)
    words = [f"w{i}" for i in range(18)]
    start_time = time.monotonic()
    for _ in range(500):
        names = sorted({
            " ".join(rng.choice(words) for _ in range(rng.randint(1, 3)))
            for _ in range(rng.randint(1, 50))
        })
        kb = KnowledgeBase(records=[EntityRecord(name=n, domain="hotel", aliases={n}) for n in names])
        index = build_lexicon(kb)
        utterance = " ".join(rng.choice(words) for _ in range(rng.randint(0, 40)))
        got = {(s.start, s.end, s.surface) for s in match_utterance(index, utterance)}
        assert got == naive(names, utterance), (names, utterance)
    elapsed = time.monotonic() - start_time
    assert elapsed < 10.0, f"matcher oracle sweep took {elapsed:.1f}s"
    ok(f"matcher oracle equivalence (500 cases, {elapsed:.2f}s)")


# --------------------------------------------------------- criterion 3

def test_state_machine_roundtrip(catalog):
    rng = random.Random(1003)
    for _ in range(1000):
        prev = random_state(catalog, rng, none_bias=0.4)
        gold = random_state(catalog, rng, none_bias=0.4)
        assert apply_operations(prev, derive_operations(prev, gold)) == gold
    ok("state-machine round-trip (1000 random state pairs)")


# --------------------------------------------------------- criterion 4

def test_entity_fixture_regression(catalog, kb):
    policy = CorrectionPolicy.default()

    gardenia = DialogueState.from_mapping(
        catalog, {"restaurant-name": "the gardenia", "restaurant-pricerange": "moderate"})
    fixed, report = correct(gardenia, kb, catalog, policy)
    assert fixed.get("restaurant-pricerange") == "expensive"
    assert report.applied == [("restaurant-pricerange", "moderate", "expensive")]

    pipasha = DialogueState.from_mapping(
        catalog, {"restaurant-name": "pipasha restaurant", "restaurant-area": "west"})
    fixed, _ = correct(pipasha, kb, catalog, policy)
    assert fixed.get("restaurant-area") == "east"

    acc = EntityAccumulator(entries=(("prezzo", "restaurant"),),
                            first_seen_turn={("prezzo", "restaurant"): 0})
    [segment] = render_db_entries(acc)
    assert segment.tokens == ["[DB]", "prezzo", "-", "restaurant"]
    assert " ".join(segment.tokens) == "[DB] prezzo - restaurant"
    assert segment.uses_position_embeddings is False
    ok("entity fixture regression (gardenia, pipasha, prezzo)")


# --------------------------------------------------------- criterion 5

def test_tokenizer_regression(vocab):
    assert wordpiece_tokenize(vocab, "pricerange") == ["price", "##rang", "##e"]
    assert wordpiece_tokenize(vocab, "dontcare") == ["don", "##tc", "##are"]
    patched = patch_vocab(vocab, ["pricerange", "dontcare"])
    assert wordpiece_tokenize(patched, "pricerange") == ["pricerange"]
    assert wordpiece_tokenize(patched, "dontcare") == ["dontcare"]
    sample = [t for t in vocab.tokens if t.isalpha() and len(t) > 2][:60]
    assert len(sample) >= 50
    for word in sample:
        assert wordpiece_tokenize(patched, word) == wordpiece_tokenize(vocab, word), word
    ok("tokenizer regression (reference splits, patch, unrelated words)")


# --------------------------------------------------------- criterion 6

def test_correction_safety(catalog, kb, dialogues, predictions_lines):
    policy = CorrectionPolicy.default()
    name_slots = [s for s in catalog.slot_ids if s.endswith("-name")]
    preds = {(r["dialogue_id"], r["turn_index"]): DialogueState.from_mapping(catalog, r["state"])
             for r in predictions_lines}
    star_overwrites = 0
    for d in dialogues:
        for t in d.turns:
            state = preds[(d.id, t.index)]
            fixed, report = correct(state, kb, catalog, policy)
            again, second = correct(fixed, kb, catalog, policy)
            assert again == fixed and second.applied == []  # idempotent
            for slot in name_slots:
                assert fixed.get(slot) == state.get(slot)  # names untouched
            star_overwrites += sum(1 for s, _, _ in report.applied if s == "hotel-stars")
    assert star_overwrites == 0
    ok("correction safety (idempotence, names untouched, zero hotel-stars overwrites)")


# --------------------------------------------------------- criterion 7

def test_end_to_end_monotone_demo(tmp_path):
    corpus = json.loads((FIXTURES / "corpus.json").read_text())
    lines = []
    for d in corpus:
        for t in d["turns"]:
            state = dict(t["state"])
            if d["id"] == "SNG0129" and t["index"] == 1:
                state["restaurant-pricerange"] = "moderate"  # the one fixable error
            lines.append(json.dumps({"dialogue_id": d["id"], "turn_index": t["index"], "state": state}))
    preds = tmp_path / "preds.jsonl"
    preds.write_text("\n".join(lines) + "\n")

    result = subprocess.run(
        [sys.executable, "-m", "ontodst.cli", "run",
         "--ontology", str(FIXTURES / "ontology.json"),
         "--db-dir", str(FIXTURES / "db"),
         "--corpus", str(FIXTURES / "corpus.json"),
         "--predictions", str(preds),
         "--out-dir", str(tmp_path / "out")],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    before = json.loads((tmp_path / "out" / "metrics_before.json").read_text())["metrics"]
    after = json.loads((tmp_path / "out" / "metrics_after.json").read_text())["metrics"]
    impact = json.loads((tmp_path / "out" / "impact.json").read_text())["impact"]
    assert after["jga"] > before["jga"]
    assert impact["total_fixed"] == 1 and impact["total_broken"] == 0
    ok(f"end-to-end monotone demo (JGA {before['jga']:.4f} -> {after['jga']:.4f}, fixed=1 broken=0)")


# --------------------------------------------------------- criterion 8

def test_input_length_contract(catalog):
    rng = random.Random(1008)
    words = [f"u{i}" for i in range(40)]
    for _ in range(1000):
        prev = (" ".join(rng.choice(words) for _ in range(rng.randint(0, 250))),
                " ".join(rng.choice(words) for _ in range(rng.randint(0, 250))))
        cur = (" ".join(rng.choice(words) for _ in range(rng.randint(0, 250))),
               " ".join(rng.choice(words) for _ in range(rng.randint(1, 250))))
        ids = tuple(catalog.slot_ids)
        # values and db names capped at 2 tokens so specials + slots + db
        # can never exceed 384 on their own; utterances carry the overflow
        state = DialogueState(
            values={s: (NONE if rng.random() < 0.5 else
                        " ".join(rng.choice(words) for _ in range(rng.randint(1, 2))))
                    for s in ids},
            slot_ids=ids)
        entries = tuple((" ".join(rng.choice(words) for _ in range(rng.randint(1, 2))), "hotel")
                        for _ in range(rng.randint(0, 12)))
        entries = tuple(dict.fromkeys(entries))
        acc = EntityAccumulator(entries=entries, first_seen_turn={e: 0 for e in entries})
        db = render_db_entries(acc)
        seq = build_input(prev, cur, state, catalog, db, 384)
        assert seq.total_len <= 384
        kinds = [s.kind for s in seq.segments]
        assert kinds.count(SegmentKind.SLOT_VALUE) == 30
        assert kinds.count(SegmentKind.DB_ENTRY) == len(db)
        got_db = [s.tokens for s in seq.segments if s.kind is SegmentKind.DB_ENTRY]
        assert got_db == [s.tokens for s in db]
    ok("input-length contract (1000 cases, max_len 384, slots and [DB] retained)")
