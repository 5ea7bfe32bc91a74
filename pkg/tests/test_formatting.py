import random

import pytest

from ontodst.formatting import (
    CLS_TOKEN,
    NONE_TOKEN,
    SEP_TOKEN,
    SLOT_TOKEN,
    InputSequence,
    SegmentKind,
    build_input,
    render_db_entries,
)
from ontodst.matching import EntityAccumulator
from ontodst.states import DialogueState
from ontodst.wordpiece import wordpiece_tokenize


def acc_of(*entries):
    return EntityAccumulator(entries=tuple(entries),
                             first_seen_turn={e: i for i, e in enumerate(entries)})


def test_render_db_entries_prezzo():
    segments = render_db_entries(acc_of(("prezzo", "restaurant")))
    assert len(segments) == 1
    assert " ".join(segments[0].tokens) == "[DB] prezzo - restaurant"
    assert segments[0].uses_position_embeddings is False
    assert segments[0].kind is SegmentKind.DB_ENTRY


def test_render_db_entries_empty_and_ordered():
    assert render_db_entries(EntityAccumulator.empty()) == []
    segments = render_db_entries(acc_of(("a and b guest house", "hotel"), ("tr1234", "train")))
    assert [" ".join(s.tokens) for s in segments] == \
        ["[DB] a and b guest house - hotel", "[DB] tr1234 - train"]


def test_build_input_layout(catalog):
    state = DialogueState.from_mapping(catalog, {"restaurant-name": "prezzo"})
    db = render_db_entries(acc_of(("prezzo", "restaurant")))
    seq = build_input(("", "hello there"), ("any help ?", "book prezzo"), state, catalog, db, 384)
    kinds = [s.kind for s in seq.segments]
    assert kinds[:5] == [SegmentKind.SPECIAL, SegmentKind.UTTERANCE_PREV, SegmentKind.SPECIAL,
                         SegmentKind.UTTERANCE_CUR, SegmentKind.SPECIAL]
    assert kinds[5:35] == [SegmentKind.SLOT_VALUE] * 30
    assert kinds[35:] == [SegmentKind.DB_ENTRY]
    assert seq.segments[0].tokens == [CLS_TOKEN]
    assert seq.segments[2].tokens == [SEP_TOKEN]
    # current turn carries the system;user separator
    assert seq.segments[3].tokens == ["any", "help", ";", "book", "prezzo"]
    assert seq.total_len < 384
    flags = {s.kind: s.uses_position_embeddings for s in seq.segments}
    assert flags[SegmentKind.DB_ENTRY] is False
    assert flags[SegmentKind.SLOT_VALUE] is True


def test_build_input_empty_dialogue(catalog):
    seq = build_input(("", ""), ("", ""), DialogueState.blank(catalog), catalog, [], 384)
    slot_segments = [s for s in seq.segments if s.kind is SegmentKind.SLOT_VALUE]
    assert len(slot_segments) == 30
    for seg in slot_segments:
        assert seg.tokens[0] == SLOT_TOKEN
        assert seg.tokens[-1] == NONE_TOKEN
    utterances = [s for s in seq.segments if s.kind in (SegmentKind.UTTERANCE_PREV, SegmentKind.UTTERANCE_CUR)]
    assert all(s.tokens == [] for s in utterances)


def test_slot_segment_renders_value_and_name(catalog):
    state = DialogueState.from_mapping(
        catalog, {"restaurant-pricerange": "dontcare", "hotel-book day": "monday"})
    seq = build_input(("", ""), ("", ""), state, catalog, [], 384)
    by_text = [" ".join(s.tokens) for s in seq.segments if s.kind is SegmentKind.SLOT_VALUE]
    assert "[SLOT] restaurant - pricerange - dontcare" in by_text
    assert "[SLOT] hotel - book day - monday" in by_text


def test_truncation_drops_prev_front_first(catalog):
    state = DialogueState.blank(catalog)
    base = build_input(("", ""), ("", ""), state, catalog, [], 384)
    room = 384 - base.total_len
    cur_words = "c0 c1 c2"
    # prev + cur exceed the budget by exactly 10 tokens
    prev_words = " ".join(f"p{i}" for i in range(room + 10 - 3))
    seq = build_input(("", prev_words), ("", cur_words), state, catalog, [], 384)
    prev_seg = next(s for s in seq.segments if s.kind is SegmentKind.UTTERANCE_PREV)
    cur_seg = next(s for s in seq.segments if s.kind is SegmentKind.UTTERANCE_CUR)
    assert seq.total_len == 384
    assert prev_seg.tokens[0] == "p10"
    assert len(prev_seg.tokens) == room - 3
    assert cur_seg.tokens == cur_words.split()


def test_truncation_reaches_current_turn(catalog):
    state = DialogueState.blank(catalog)
    base = build_input(("", ""), ("", ""), state, catalog, [], 384)
    room = 384 - base.total_len
    seq = build_input(("", "p0 p1 p2"), ("", " ".join(f"c{i}" for i in range(room + 2))),
                      state, catalog, [], 384)
    prev_seg = next(s for s in seq.segments if s.kind is SegmentKind.UTTERANCE_PREV)
    cur_seg = next(s for s in seq.segments if s.kind is SegmentKind.UTTERANCE_CUR)
    assert prev_seg.tokens == []
    assert cur_seg.tokens[0] == "c2"
    assert seq.total_len == 384


def test_db_segments_survive_truncation(catalog):
    state = DialogueState.blank(catalog)
    db = render_db_entries(acc_of(("prezzo", "restaurant"), ("worth house", "hotel")))
    seq = build_input(("", " ".join(f"w{i}" for i in range(400))), ("", "hi"), state, catalog, db, 384)
    db_segments = [s for s in seq.segments if s.kind is SegmentKind.DB_ENTRY]
    assert len(db_segments) == 2
    assert seq.total_len <= 384
    assert len([s for s in seq.segments if s.kind is SegmentKind.SLOT_VALUE]) == 30


def test_max_len_too_small_errors(catalog):
    state = DialogueState.blank(catalog)
    with pytest.raises(ValueError, match="cannot hold"):
        build_input(("", ""), ("", ""), state, catalog, [], 50)


def test_subword_tokenizer_expands_slot_names(catalog, vocab):
    state = DialogueState.blank(catalog)
    seq = build_input(("", ""), ("", ""), state, catalog, [], 384,
                      tokenize=lambda w: wordpiece_tokenize(vocab, w))
    texts = [" ".join(s.tokens) for s in seq.segments if s.kind is SegmentKind.SLOT_VALUE]
    assert "[SLOT] restaurant - price ##rang ##e - [NONE]" in texts


def test_roundtrip_serialization(catalog):
    state = DialogueState.from_mapping(catalog, {"train-day": "friday"})
    db = render_db_entries(acc_of(("tr2289", "train")))
    seq = build_input(("sys a", "user b"), ("sys c", "user d"), state, catalog, db, 384)
    again = InputSequence.from_json(seq.to_json())
    assert again.to_json() == seq.to_json()
    assert [s.kind for s in again.segments] == [s.kind for s in seq.segments]
    assert again.total_len == seq.total_len


def test_untruncated_input_stays_under_default(catalog, dialogues):
    rng = random.Random(5)
    d = rng.choice(dialogues)
    state = d.turns[-1].gold_state
    seq = build_input(("sys", d.turns[0].user_utterance),
                      (d.turns[-1].system_utterance, d.turns[-1].user_utterance),
                      state, catalog, [], 384)
    assert seq.total_len < 384
