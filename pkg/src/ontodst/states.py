"""Dialogue states and the four slot operations.

A state maps every catalog slot to a value; "none" and "dontcare" are
reserved sentinels, spelled lowercase in serialized form.  Operations
follow the selective-overwrite semantics: CARRYOVER keeps the previous
value, UPDATE sets a new one, DELETE clears to none, DONTCARE marks the
slot as unconstrained.  derive_operations inverts apply_operations so
oracle labels can be read off consecutive gold states.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from ontodst.ontology import SlotCatalog, normalize_surface

NONE_VALUE = "none"
DONTCARE_VALUE = "dontcare"


class Op(enum.Enum):
    CARRYOVER = "carryover"
    UPDATE = "update"
    DELETE = "delete"
    DONTCARE = "dontcare"


@dataclass(frozen=True)
class SlotOperation:
    op: Op
    new_value: str | None = None

    def __post_init__(self):
        if self.op is Op.UPDATE:
            value = normalize_surface(self.new_value or "")
            if not value:
                raise ValueError("UPDATE requires a non-empty new_value")
            object.__setattr__(self, "new_value", value)
        elif self.new_value is not None:
            raise ValueError(f"{self.op.name} must not carry a new_value")


CARRYOVER = SlotOperation(Op.CARRYOVER)
DELETE = SlotOperation(Op.DELETE)
DONTCARE = SlotOperation(Op.DONTCARE)


def update(value: str) -> SlotOperation:
    return SlotOperation(Op.UPDATE, value)


@dataclass
class DialogueState:
    """Values for exactly the 30 catalog slots."""

    values: dict[str, str]
    slot_ids: tuple[str, ...]

    def __post_init__(self):
        if set(self.values) != set(self.slot_ids):
            missing = set(self.slot_ids) - set(self.values)
            extra = set(self.values) - set(self.slot_ids)
            raise ValueError(f"state keys do not match the catalog (missing={sorted(missing)}, extra={sorted(extra)})")

    @classmethod
    def blank(cls, catalog: SlotCatalog) -> "DialogueState":
        ids = tuple(catalog.slot_ids)
        return cls(values={s: NONE_VALUE for s in ids}, slot_ids=ids)

    @classmethod
    def from_mapping(cls, catalog: SlotCatalog, mapping: dict[str, str]) -> "DialogueState":
        """Build from a possibly-sparse slot->value map; missing slots are none."""
        ids = tuple(catalog.slot_ids)
        known = set(ids)
        values = {s: NONE_VALUE for s in ids}
        for key, value in mapping.items():
            if key not in known:
                raise ValueError(f"unknown slot {key!r}")
            values[key] = normalize_surface(str(value)) or NONE_VALUE
        return cls(values=values, slot_ids=ids)

    def get(self, slot_id: str) -> str:
        return self.values[slot_id]

    def replace(self, slot_id: str, value: str) -> "DialogueState":
        if slot_id not in self.values:
            raise ValueError(f"unknown slot {slot_id!r}")
        values = dict(self.values)
        values[slot_id] = value
        return DialogueState(values=values, slot_ids=self.slot_ids)

    def filled(self) -> dict[str, str]:
        """The non-none slots, in catalog order."""
        return {s: self.values[s] for s in self.slot_ids if self.values[s] != NONE_VALUE}

    def __eq__(self, other) -> bool:
        return isinstance(other, DialogueState) and self.values == other.values

    def to_dict(self, sparse: bool = True) -> dict[str, str]:
        if sparse:
            return self.filled()
        return {s: self.values[s] for s in self.slot_ids}

    def to_json(self, sparse: bool = True) -> str:
        return json.dumps(self.to_dict(sparse), sort_keys=True)


def apply_operations(prev: DialogueState, ops: dict[str, SlotOperation]) -> DialogueState:
    """Apply one operation per slot, producing the next state."""
    missing = set(prev.slot_ids) - set(ops)
    if missing:
        raise ValueError(f"operations missing for slots {sorted(missing)}")
    extra = set(ops) - set(prev.slot_ids)
    if extra:
        raise ValueError(f"operations for unknown slots {sorted(extra)}")
    values = {}
    for slot_id in prev.slot_ids:
        op = ops[slot_id]
        if op.op is Op.CARRYOVER:
            values[slot_id] = prev.values[slot_id]
        elif op.op is Op.UPDATE:
            values[slot_id] = op.new_value
        elif op.op is Op.DELETE:
            values[slot_id] = NONE_VALUE
        else:
            values[slot_id] = DONTCARE_VALUE
    return DialogueState(values=values, slot_ids=prev.slot_ids)


def derive_operations(prev: DialogueState, gold: DialogueState) -> dict[str, SlotOperation]:
    """Oracle labeling: the operations that turn prev into gold."""
    ops: dict[str, SlotOperation] = {}
    for slot_id in prev.slot_ids:
        p, g = prev.values[slot_id], gold.values[slot_id]
        if p == g:
            ops[slot_id] = CARRYOVER
        elif g == DONTCARE_VALUE:
            ops[slot_id] = DONTCARE
        elif g == NONE_VALUE:
            ops[slot_id] = DELETE
        else:
            ops[slot_id] = SlotOperation(Op.UPDATE, g)
    return ops
