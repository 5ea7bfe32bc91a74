"""Dialogue corpus ingestion and fixture emission.

The internal corpus format is a JSON array of dialogue objects
{id, turns: [{index, system, user, state}]} with sparse state maps
(none slots omitted, sentinels lowercase).  A converter accepts the
common preprocessed-dialogue layout (dialogue_idx / turn_idx /
belief_state entries) and rewrites it into this format, dropping
hospital/police annotations on the way.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

from ontodst.ontology import DOMAINS, DROPPED_DOMAINS, SlotCatalog, normalize_surface
from ontodst.states import DialogueState

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Raised for malformed corpus documents."""


@dataclass
class Turn:
    index: int
    system_utterance: str
    user_utterance: str
    gold_state: DialogueState


@dataclass
class Dialogue:
    id: str
    turns: list[Turn]

    def gold_states(self) -> list[DialogueState]:
        return [t.gold_state for t in self.turns]


def _split_state_keys(mapping: dict, catalog: SlotCatalog) -> dict[str, str]:
    """Drop hospital/police keys; reject keys outside the catalog."""
    known = set(catalog.slot_ids)
    kept = {}
    for key, value in mapping.items():
        domain = normalize_surface(str(key).partition("-")[0])
        if domain in DROPPED_DOMAINS:
            continue
        if key not in known:
            raise CorpusError(f"unknown slot {key!r} in state annotation")
        kept[key] = value
    return kept


def ingest_corpus(document: str, catalog: SlotCatalog) -> list[Dialogue]:
    """Parse the internal corpus format into Dialogues, sorted by id.

    Dialogues whose annotations touch only hospital/police are dropped
    with a warning count.  States are normalized into the full 30-slot
    schema.
    """
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed corpus at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, list):
        raise CorpusError("corpus must be a JSON array of dialogues")

    dialogues = []
    dropped = 0
    for entry in raw:
        if not isinstance(entry, dict) or "id" not in entry or "turns" not in entry:
            raise CorpusError(f"dialogue entry missing id/turns: {entry!r}")
        turns_raw = entry["turns"]
        if not turns_raw:
            raise CorpusError(f"dialogue {entry['id']!r} has no turns")
        annotated_domains = set()
        had_annotations = False
        turns = []
        for pos, t in enumerate(turns_raw):
            if t.get("index") != pos:
                raise CorpusError(f"dialogue {entry['id']!r}: turn indices must be contiguous from 0")
            if "user" not in t:
                raise CorpusError(f"dialogue {entry['id']!r} turn {pos}: user utterance missing")
            state_map = t.get("state", {})
            for key in state_map:
                had_annotations = True
                annotated_domains.add(normalize_surface(str(key).partition("-")[0]))
            kept = _split_state_keys(state_map, catalog)
            turns.append(Turn(
                index=pos,
                system_utterance=str(t.get("system", "")),
                user_utterance=str(t["user"]),
                gold_state=DialogueState.from_mapping(catalog, kept),
            ))
        if had_annotations and not (annotated_domains & set(DOMAINS)):
            dropped += 1
            continue
        dialogues.append(Dialogue(id=str(entry["id"]), turns=turns))
    if dropped:
        logger.warning("dropped %d dialogues annotated only with out-of-scope domains", dropped)
    dialogues.sort(key=lambda d: d.id)
    return dialogues


def serialize_corpus(dialogues: list[Dialogue]) -> str:
    """Deterministic pretty-printed corpus in the internal format."""
    payload = [
        {
            "id": d.id,
            "turns": [
                {
                    "index": t.index,
                    "system": t.system_utterance,
                    "user": t.user_utterance,
                    "state": {k: v for k, v in sorted(t.gold_state.filled().items())},
                }
                for t in d.turns
            ],
        }
        for d in sorted(dialogues, key=lambda d: d.id)
    ]
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit_fixture(dialogues: list[Dialogue], selector: list[str]) -> str:
    """A version-control-friendly corpus subset for the given ids."""
    by_id = {d.id: d for d in dialogues}
    unknown = [i for i in selector if i not in by_id]
    if unknown:
        raise CorpusError(f"unknown dialogue ids: {unknown}")
    return serialize_corpus([by_id[i] for i in sorted(set(selector))])


def validate_gold_values(dialogues: list[Dialogue], catalog: SlotCatalog) -> list[tuple[str, int, str, str]]:
    """Flag gold values outside the candidate set of categorical slots.

    Annotation noise is kept verbatim in the states; this reports it as
    (dialogue id, turn index, slot, value) so nothing gets dropped
    silently.
    """
    flags = []
    for d in dialogues:
        for t in d.turns:
            for slot in catalog.slots:
                value = t.gold_state.get(str(slot))
                if value in ("none", "dontcare") or not catalog.is_categorical(slot):
                    continue
                if value not in catalog.candidates.get(str(slot), set()):
                    flags.append((d.id, t.index, str(slot), value))
    return flags


_DONTCARE_VARIANTS = {"dontcare", "dont care", "do nt care", "do n t care", "don t care"}


def convert_preprocessed(document: str, catalog: SlotCatalog) -> list[Dialogue]:
    """Convert the external preprocessed-dialogue layout.

    Accepts entries shaped like {dialogue_idx, dialogue: [{turn_idx,
    system_transcript, transcript, belief_state: [{slots: [[name, value]]}]}]}.
    """
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed input at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc

    known = set(catalog.slot_ids)
    dialogues = []
    dropped = 0
    for entry in raw:
        turns = []
        in_scope = False
        for pos, t in enumerate(entry.get("dialogue", [])):
            state = {}
            for item in t.get("belief_state", []):
                for slot_name, value in item.get("slots", []):
                    domain = normalize_surface(str(slot_name).partition("-")[0])
                    if domain in DROPPED_DOMAINS:
                        continue
                    norm_value = normalize_surface(str(value))
                    if norm_value in _DONTCARE_VARIANTS:
                        norm_value = "dontcare"
                    if norm_value in ("", "none"):
                        continue
                    if slot_name not in known:
                        raise CorpusError(f"unknown slot {slot_name!r} in belief state")
                    state[slot_name] = norm_value
                    in_scope = True
            turns.append(Turn(
                index=pos,
                system_utterance=str(t.get("system_transcript", "")),
                user_utterance=str(t.get("transcript", "")),
                gold_state=DialogueState.from_mapping(catalog, state),
            ))
        if not turns or not in_scope:
            dropped += 1
            continue
        dialogues.append(Dialogue(id=str(entry.get("dialogue_idx", f"dlg{len(dialogues)}")), turns=turns))
    if dropped:
        logger.warning("converter dropped %d dialogues without in-scope annotations", dropped)
    dialogues.sort(key=lambda d: d.id)
    return dialogues
