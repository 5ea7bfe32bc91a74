"""Encoder input rendering: tagged token segments with truncation.

Segment order is [CLS], previous-turn tokens, [SEP], current-turn tokens,
[SEP], one slot-value segment per catalog slot, then one [DB] segment per
accumulated entity.  [DB] segments carry uses_position_embeddings=False;
everything else carries True.

When the sequence exceeds max_len, previous-turn utterance tokens are
dropped from the front first, then current-turn tokens; slot and [DB]
segments are never truncated (they are the compressed long-distance
history, so utterance tokens go first).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Callable

from ontodst.matching import EntityAccumulator
from ontodst.ontology import SlotCatalog, normalize_surface
from ontodst.states import DONTCARE_VALUE, NONE_VALUE, DialogueState

CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
SLOT_TOKEN = "[SLOT]"
NONE_TOKEN = "[NONE]"
DB_TOKEN = "[DB]"
TURN_SEP = ";"
DASH = "-"

DEFAULT_MAX_LEN = 384

Tokenizer = Callable[[str], list[str]]


class SegmentKind(str, enum.Enum):
    SPECIAL = "special"
    UTTERANCE_PREV = "utterance_prev"
    UTTERANCE_CUR = "utterance_cur"
    SLOT_VALUE = "slot_value"
    DB_ENTRY = "db_entry"


@dataclass
class Segment:
    kind: SegmentKind
    tokens: list[str]
    uses_position_embeddings: bool = True

    def __post_init__(self):
        if self.kind is SegmentKind.DB_ENTRY:
            self.uses_position_embeddings = False

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "tokens": list(self.tokens),
            "uses_position_embeddings": self.uses_position_embeddings,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Segment":
        return cls(kind=SegmentKind(raw["kind"]), tokens=list(raw["tokens"]),
                   uses_position_embeddings=bool(raw["uses_position_embeddings"]))


@dataclass
class InputSequence:
    segments: list[Segment]

    @property
    def total_len(self) -> int:
        return sum(len(s.tokens) for s in self.segments)

    def tokens(self) -> list[str]:
        out: list[str] = []
        for seg in self.segments:
            out.extend(seg.tokens)
        return out

    def to_dict(self) -> dict:
        return {"total_len": self.total_len, "segments": [s.to_dict() for s in self.segments]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, raw: dict) -> "InputSequence":
        return cls(segments=[Segment.from_dict(s) for s in raw["segments"]])

    @classmethod
    def from_json(cls, document: str) -> "InputSequence":
        return cls.from_dict(json.loads(document))


def _word_tokens(text: str, tokenize: Tokenizer | None) -> list[str]:
    words = normalize_surface(text).split()
    if tokenize is None:
        return words
    out: list[str] = []
    for word in words:
        out.extend(tokenize(word))
    return out


def render_db_entries(acc: EntityAccumulator) -> list[Segment]:
    """One "[DB] <name> - <domain>" segment per accumulator entry."""
    return [
        Segment(kind=SegmentKind.DB_ENTRY, tokens=[DB_TOKEN, *surface.split(), DASH, domain])
        for surface, domain in acc.entries
    ]


def _turn_tokens(turn: tuple[str, str], tokenize: Tokenizer | None) -> list[str]:
    # a turn is (system utterance, user utterance); the system part is
    # empty on the first turn
    system, user = turn
    sys_tokens = _word_tokens(system, tokenize)
    user_tokens = _word_tokens(user, tokenize)
    if sys_tokens:
        return sys_tokens + [TURN_SEP] + user_tokens
    return user_tokens


def _slot_segments(catalog: SlotCatalog, state: DialogueState, tokenize: Tokenizer | None) -> list[Segment]:
    segments = []
    for slot in catalog.slots:
        value = state.get(str(slot))
        if value == NONE_VALUE:
            value_tokens = [NONE_TOKEN]
        elif value == DONTCARE_VALUE:
            value_tokens = _word_tokens(DONTCARE_VALUE, tokenize)
        else:
            value_tokens = _word_tokens(value, tokenize)
        name_tokens = _word_tokens(slot.name, tokenize)
        tokens = [SLOT_TOKEN, slot.domain, DASH, *name_tokens, DASH, *value_tokens]
        segments.append(Segment(kind=SegmentKind.SLOT_VALUE, tokens=tokens))
    return segments


def build_input(
    prev_turn: tuple[str, str],
    cur_turn: tuple[str, str],
    prev_state: DialogueState,
    catalog: SlotCatalog,
    db: list[Segment],
    max_len: int = DEFAULT_MAX_LEN,
    tokenize: Tokenizer | None = None,
) -> InputSequence:
    """Render one turn's encoder input, truncated to max_len tokens."""
    slot_segments = _slot_segments(catalog, prev_state, tokenize)
    specials = 3  # [CLS] and two [SEP]
    floor = specials + sum(len(s.tokens) for s in slot_segments)
    if max_len < floor:
        raise ValueError(f"max_len={max_len} cannot hold the specials and slot segments ({floor} tokens)")
    db_len = sum(len(s.tokens) for s in db)
    if max_len < floor + db_len:
        raise ValueError(f"max_len={max_len} cannot hold the slot and [DB] segments ({floor + db_len} tokens)")

    prev_tokens = _turn_tokens(prev_turn, tokenize)
    cur_tokens = _turn_tokens(cur_turn, tokenize)
    budget = max_len - floor - db_len
    overflow = len(prev_tokens) + len(cur_tokens) - budget
    if overflow > 0:
        drop_prev = min(overflow, len(prev_tokens))
        prev_tokens = prev_tokens[drop_prev:]
        cur_tokens = cur_tokens[overflow - drop_prev:]

    segments = [
        Segment(kind=SegmentKind.SPECIAL, tokens=[CLS_TOKEN]),
        Segment(kind=SegmentKind.UTTERANCE_PREV, tokens=prev_tokens),
        Segment(kind=SegmentKind.SPECIAL, tokens=[SEP_TOKEN]),
        Segment(kind=SegmentKind.UTTERANCE_CUR, tokens=cur_tokens),
        Segment(kind=SegmentKind.SPECIAL, tokens=[SEP_TOKEN]),
        *slot_segments,
        *db,
    ]
    return InputSequence(segments=segments)
