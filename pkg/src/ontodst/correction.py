"""Knowledge-base validation and overwrite of conflicting attribute slots.

When a domain's name slot resolves to a KB entity, attribute slots whose
predicted literal disagrees with the entity's KB attribute are conflicts.
The policy decides which get overwritten: the name slot is trusted over
attributes (names are usually unambiguous in context), so attributes are
corrected and the name never is.  Everything else is reported as skipped
with a reason, so the audit trail accounts for every conflict found.

The default policy enables the restaurant domain fully and hotel for area
and internet only; hotel-stars stays out because star corrections driven
by wrongly predicted hotel names do more harm than good.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources

from ontodst.ontology import (
    DOMAINS,
    NAME_SLOT,
    EntityRecord,
    KnowledgeBase,
    SlotCatalog,
    SlotId,
)
from ontodst.states import DONTCARE_VALUE, NONE_VALUE, DialogueState


class SkipReason(str, enum.Enum):
    AMBIGUOUS_ENTITY = "ambiguous_entity"
    SLOT_NOT_CORRECTABLE = "slot_not_correctable"
    DOMAIN_DISABLED = "domain_disabled"
    ENTITY_NOT_FOUND = "entity_not_found"


@dataclass(frozen=True)
class Conflict:
    name_slot: str
    entity: EntityRecord
    attribute_slot: str
    predicted: str
    kb_value: str

    def __post_init__(self):
        if self.predicted == self.kb_value:
            raise ValueError("a conflict requires predicted != kb_value")
        if self.name_slot.split("-", 1)[0] != self.attribute_slot.split("-", 1)[0]:
            raise ValueError("conflict slots must share a domain")

    def to_dict(self) -> dict:
        return {
            "name_slot": self.name_slot,
            "entity": self.entity.name,
            "attribute_slot": self.attribute_slot,
            "predicted": self.predicted,
            "kb_value": self.kb_value,
        }


@dataclass
class CorrectionPolicy:
    enabled_domains: set[str]
    correctable_slots: set[str]
    require_unambiguous: bool = True

    def __post_init__(self):
        unknown = self.enabled_domains - set(DOMAINS)
        if unknown:
            raise ValueError(f"unknown domains in policy: {sorted(unknown)}")
        name_slots = {s for s in self.correctable_slots if s.endswith(f"-{NAME_SLOT}")}
        if name_slots:
            raise ValueError(f"name slots are never correctable: {sorted(name_slots)}")

    @classmethod
    def from_json(cls, document: str) -> "CorrectionPolicy":
        raw = json.loads(document)
        return cls(
            enabled_domains=set(raw["enabled_domains"]),
            correctable_slots=set(raw["correctable_slots"]),
            require_unambiguous=bool(raw.get("require_unambiguous", True)),
        )

    @classmethod
    def default(cls) -> "CorrectionPolicy":
        text = resources.files("ontodst.data").joinpath("default_policy.json").read_text("utf-8")
        return cls.from_json(text)

    def to_dict(self) -> dict:
        return {
            "enabled_domains": sorted(self.enabled_domains),
            "correctable_slots": sorted(self.correctable_slots),
            "require_unambiguous": self.require_unambiguous,
        }


@dataclass
class CorrectionReport:
    conflicts: list[Conflict] = field(default_factory=list)
    applied: list[tuple[str, str, str]] = field(default_factory=list)  # (slot, old, new)
    skipped: list[tuple[Conflict, SkipReason]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "conflicts": [c.to_dict() for c in self.conflicts],
            "applied": [{"slot": s, "old": o, "new": n} for s, o, n in self.applied],
            "skipped": [{"conflict": c.to_dict(), "reason": r.value} for c, r in self.skipped],
        }


def resolve_entity(state: DialogueState, domain: str, kb: KnowledgeBase) -> list[EntityRecord]:
    """KB records matching the domain's name slot value (alias-aware)."""
    name_slot = f"{domain}-{NAME_SLOT}"
    if name_slot not in state.values:
        return []
    name = state.get(name_slot)
    if name in (NONE_VALUE, DONTCARE_VALUE):
        return []
    return kb.lookup(name, domain)


def _attribute_conflicts(
    state: DialogueState, catalog: SlotCatalog, domain: str, entity: EntityRecord
) -> list[Conflict]:
    conflicts = []
    for slot in catalog.slots_for_domain(domain):
        if slot.name == NAME_SLOT or slot.name not in entity.attributes:
            continue
        predicted = state.get(str(slot))
        if predicted in (NONE_VALUE, DONTCARE_VALUE):
            continue
        kb_value = entity.attributes[slot.name]
        if predicted != kb_value:
            conflicts.append(Conflict(
                name_slot=f"{domain}-{NAME_SLOT}",
                entity=entity,
                attribute_slot=str(slot),
                predicted=predicted,
                kb_value=kb_value,
            ))
    return conflicts


def _scan(
    state: DialogueState, kb: KnowledgeBase, catalog: SlotCatalog, policy: CorrectionPolicy
) -> list[tuple[Conflict, SkipReason | None]]:
    """Every conflict in the state with its disposition (None = apply)."""
    out: list[tuple[Conflict, SkipReason | None]] = []
    for domain in DOMAINS:
        if not catalog.has_slot(domain, NAME_SLOT):
            continue
        records = resolve_entity(state, domain, kb)
        if not records:
            continue
        if domain not in policy.enabled_domains:
            for rec in records:
                out.extend((c, SkipReason.DOMAIN_DISABLED) for c in _attribute_conflicts(state, catalog, domain, rec))
            continue
        if len(records) > 1 and policy.require_unambiguous:
            for rec in records:
                out.extend((c, SkipReason.AMBIGUOUS_ENTITY) for c in _attribute_conflicts(state, catalog, domain, rec))
            continue
        # with ambiguity allowed, the lowest-index record is the target
        entity = records[0]
        for conflict in _attribute_conflicts(state, catalog, domain, entity):
            slot = SlotId.parse(conflict.attribute_slot)
            if conflict.attribute_slot not in policy.correctable_slots:
                out.append((conflict, SkipReason.SLOT_NOT_CORRECTABLE))
            elif catalog.is_categorical(slot) and conflict.kb_value not in catalog.candidates.get(str(slot), set()):
                # the KB value itself is off-catalog; do not guess
                out.append((conflict, SkipReason.ENTITY_NOT_FOUND))
            else:
                out.append((conflict, None))
    return out


def find_conflicts(
    state: DialogueState, kb: KnowledgeBase, catalog: SlotCatalog, policy: CorrectionPolicy
) -> list[Conflict]:
    """Conflicts detected in enabled domains with a resolved target entity."""
    blocked = (SkipReason.DOMAIN_DISABLED, SkipReason.AMBIGUOUS_ENTITY)
    return [c for c, reason in _scan(state, kb, catalog, policy) if reason not in blocked]


def correct(
    state: DialogueState, kb: KnowledgeBase, catalog: SlotCatalog, policy: CorrectionPolicy
) -> tuple[DialogueState, CorrectionReport]:
    """Overwrite conflicting attribute slots with their KB values.

    Idempotent: every applied slot ends up equal to the KB attribute, so a
    second pass applies nothing.  Name slots are never touched.
    """
    report = CorrectionReport()
    new_state = state
    for conflict, reason in _scan(state, kb, catalog, policy):
        report.conflicts.append(conflict)
        if reason is None:
            new_state = new_state.replace(conflict.attribute_slot, conflict.kb_value)
            report.applied.append((conflict.attribute_slot, conflict.predicted, conflict.kb_value))
        else:
            report.skipped.append((conflict, reason))
    return new_state, report


@dataclass
class ImpactTally:
    """Per-slot fixed/broken accounting of a correction pass."""

    fixed: dict[str, int] = field(default_factory=dict)
    broken: dict[str, int] = field(default_factory=dict)

    @property
    def total_fixed(self) -> int:
        return sum(self.fixed.values())

    @property
    def total_broken(self) -> int:
        return sum(self.broken.values())

    def to_dict(self) -> dict:
        return {
            "fixed": dict(sorted(self.fixed.items())),
            "broken": dict(sorted(self.broken.items())),
            "total_fixed": self.total_fixed,
            "total_broken": self.total_broken,
        }


def correction_impact(
    before: list[DialogueState], after: list[DialogueState], gold: list[DialogueState]
) -> ImpactTally:
    """fixed = wrong before and right after; broken = the reverse."""
    if not (len(before) == len(after) == len(gold)):
        raise ValueError(f"aligned turn lists required, got {len(before)}/{len(after)}/{len(gold)}")
    tally = ImpactTally()
    for b, a, g in zip(before, after, gold):
        for slot_id in g.slot_ids:
            bv, av, gv = b.get(slot_id), a.get(slot_id), g.get(slot_id)
            if bv != gv and av == gv:
                tally.fixed[slot_id] = tally.fixed.get(slot_id, 0) + 1
            elif bv == gv and av != gv:
                tally.broken[slot_id] = tally.broken.get(slot_id, 0) + 1
    return tally
