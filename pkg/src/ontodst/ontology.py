"""Ontology slot catalog and per-domain entity databases.

Parses the MultiWOZ-2.1-style ontology file (a JSON object mapping
"domain-slotname" to candidate value lists) and the per-domain entity
databases (JSON arrays of records with a "name" field) into normalized,
queryable structures.  Only the five in-scope domains are kept; hospital
and police entries are dropped at parse time so the 30-slot catalog
invariant can be enforced in the type.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

DOMAINS = ("attraction", "hotel", "restaurant", "taxi", "train")

# Domains present in raw MultiWOZ files but outside the 5-domain setup.
DROPPED_DOMAINS = ("hospital", "police")

EXPECTED_SLOT_COUNT = 30

# Closed-vocabulary slots: every value is expected to come from the
# catalog candidate list.  Name/time/place slots are open class.
CATEGORICAL_SLOT_NAMES = frozenset(
    {"area", "pricerange", "parking", "internet", "stars", "type", "food", "day", "book day"}
)

# Domains that ship an entity database (taxi participates only through
# the slot catalog).
ENTITY_DB_DOMAINS = ("attraction", "hotel", "restaurant", "train")

NAME_SLOT = "name"

_PUNCT_RE = re.compile(r"[^\w\s]|_")
_SPACE_RE = re.compile(r"\s+")


class OntologyError(ValueError):
    """Raised for malformed ontology or entity-db documents."""


def normalize_surface(text: str) -> str:
    """Normalize a surface string for matching and comparison.

    Lowercase, punctuation mapped to single spaces, whitespace runs
    collapsed, ends stripped.  Total and idempotent.
    """
    text = _PUNCT_RE.sub(" ", text.lower())
    return _SPACE_RE.sub(" ", text).strip()


@dataclass(frozen=True)
class SlotId:
    """A domain-qualified slot, e.g. restaurant-pricerange."""

    domain: str
    name: str

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise OntologyError(f"unknown domain {self.domain!r}")
        if not self.name:
            raise OntologyError("empty slot name")

    def __str__(self) -> str:
        return f"{self.domain}-{self.name}"

    @classmethod
    def parse(cls, key: str) -> "SlotId":
        domain, sep, name = key.partition("-")
        if not sep:
            raise OntologyError(f"slot key {key!r} is not of the form <domain>-<slotname>")
        return cls(normalize_surface(domain), normalize_surface(name))


@dataclass
class SlotCatalog:
    """The 30-slot catalog over the 5 in-scope domains."""

    slots: list[SlotId]
    candidates: dict[str, set[str]]  # keyed by str(SlotId)

    def __post_init__(self):
        domains = {s.domain for s in self.slots}
        if len(self.slots) != EXPECTED_SLOT_COUNT or domains != set(DOMAINS):
            raise OntologyError(
                f"catalog must cover exactly {EXPECTED_SLOT_COUNT} slots over "
                f"{len(DOMAINS)} domains, got {len(self.slots)} slots over {sorted(domains)}"
            )
        for slot in self.slots:
            if slot.name in CATEGORICAL_SLOT_NAMES and not self.candidates.get(str(slot)):
                raise OntologyError(f"categorical slot {slot} has no candidate values")

    @property
    def slot_ids(self) -> list[str]:
        return [str(s) for s in self.slots]

    def slots_for_domain(self, domain: str) -> list[SlotId]:
        return [s for s in self.slots if s.domain == domain]

    def has_slot(self, domain: str, name: str) -> bool:
        return any(s.domain == domain and s.name == name for s in self.slots)

    def is_categorical(self, slot: SlotId) -> bool:
        return slot.name in CATEGORICAL_SLOT_NAMES


@dataclass
class EntityRecord:
    """A named entity with its domain and attribute map."""

    name: str
    domain: str
    attributes: dict[str, str] = field(default_factory=dict)
    aliases: set[str] = field(default_factory=set)

    def __post_init__(self):
        if not self.name:
            raise OntologyError("entity record with empty name")
        self.aliases.add(self.name)


def _article_variants(name: str) -> set[str]:
    # MultiWOZ names vary in leading-article usage; both forms must match.
    if name.startswith("the "):
        return {name, name[len("the "):]}
    return {name, "the " + name}


def parse_ontology(document: str) -> SlotCatalog:
    """Parse an ontology file (JSON object "domain-slotname" -> values).

    Hospital/police entries are dropped; any other domain outside the
    MultiWOZ seven is an error.  Values are normalized.
    """
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise OntologyError(f"malformed ontology document at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict) or not raw:
        raise OntologyError("ontology document must be a non-empty JSON object")

    slots: list[SlotId] = []
    candidates: dict[str, set[str]] = {}
    for key in sorted(raw):
        domain = normalize_surface(key.partition("-")[0])
        if domain in DROPPED_DOMAINS:
            logger.debug("dropping out-of-scope ontology entry %r", key)
            continue
        slot = SlotId.parse(key)
        values = raw[key]
        if not isinstance(values, list):
            raise OntologyError(f"candidate list for {key!r} is not an array")
        slots.append(slot)
        candidates[str(slot)] = {normalize_surface(str(v)) for v in values} - {""}
    return SlotCatalog(slots=slots, candidates=candidates)


def parse_entity_db(document: str, domain: str, catalog: SlotCatalog) -> list[EntityRecord]:
    """Parse one domain's entity database into EntityRecords.

    Attribute keys are filtered to slot names the catalog defines for the
    domain (the record name itself is carried in `name`, not the attribute
    map).  Rows without a name field are skipped and counted in a warning.
    """
    if domain not in ENTITY_DB_DOMAINS:
        raise OntologyError(f"domain {domain!r} has no entity database")
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise OntologyError(f"malformed {domain} db at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, list):
        raise OntologyError(f"{domain} db must be a JSON array of records")

    valid_names = {s.name for s in catalog.slots_for_domain(domain)} - {NAME_SLOT}
    records: list[EntityRecord] = []
    skipped = 0
    for row in raw:
        if not isinstance(row, dict):
            raise OntologyError(f"{domain} db row is not an object: {row!r}")
        name = normalize_surface(str(row.get("name", "")))
        if not name:
            skipped += 1
            continue
        attributes = {}
        for key, value in row.items():
            slot_name = normalize_surface(key)
            if slot_name in valid_names and value is not None:
                normalized = normalize_surface(str(value))
                if normalized:
                    attributes[slot_name] = normalized
        records.append(
            EntityRecord(name=name, domain=domain, attributes=attributes, aliases=_article_variants(name))
        )
    if skipped:
        logger.warning("skipped %d %s db rows without a name field", skipped, domain)
    return records


@dataclass
class KnowledgeBase:
    """All entity records plus a (surface, domain) lookup index."""

    records: list[EntityRecord]
    by_name: dict[tuple[str, str], list[int]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.by_name:
            for idx, rec in enumerate(self.records):
                for alias in sorted(rec.aliases):
                    self.by_name.setdefault((alias, rec.domain), []).append(idx)

    def lookup(self, surface: str, domain: str) -> list[EntityRecord]:
        """All records whose name or alias equals the normalized surface."""
        key = (normalize_surface(surface), domain)
        return [self.records[i] for i in self.by_name.get(key, [])]

    def to_json(self) -> str:
        """Normalized KB snapshot for caching (deterministic)."""
        payload = [
            {
                "name": r.name,
                "domain": r.domain,
                "attributes": dict(sorted(r.attributes.items())),
                "aliases": sorted(r.aliases),
            }
            for r in self.records
        ]
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, document: str) -> "KnowledgeBase":
        raw = json.loads(document)
        records = [
            EntityRecord(
                name=row["name"],
                domain=row["domain"],
                attributes=dict(row["attributes"]),
                aliases=set(row["aliases"]),
            )
            for row in raw
        ]
        return cls(records=records)


def build_knowledge_base(db_documents: dict[str, str], catalog: SlotCatalog) -> KnowledgeBase:
    """Parse the per-domain db documents into one KnowledgeBase."""
    records: list[EntityRecord] = []
    for domain in ENTITY_DB_DOMAINS:
        if domain in db_documents:
            records.extend(parse_entity_db(db_documents[domain], domain, catalog))
    return KnowledgeBase(records=records)


def kb_from_catalog(catalog: SlotCatalog) -> KnowledgeBase:
    """Attribute-less entity records from the ontology name-slot lists.

    An alternative matching surface for corpora whose entities are listed
    in the ontology but missing from the db files.  Records carry no
    attributes, so this source only feeds the matcher, not correction.
    """
    records = []
    for slot in catalog.slots:
        if slot.name != NAME_SLOT:
            continue
        for value in sorted(catalog.candidates.get(str(slot), set())):
            records.append(EntityRecord(name=value, domain=slot.domain,
                                        aliases=_article_variants(value)))
    return KnowledgeBase(records=records)


def merge_kb_surfaces(primary: KnowledgeBase, extra: KnowledgeBase) -> KnowledgeBase:
    """Union of entity surfaces: extra records add only unseen (name, domain)."""
    seen = {(a, r.domain) for r in primary.records for a in r.aliases}
    merged = list(primary.records)
    for rec in extra.records:
        if not any((a, rec.domain) in seen for a in rec.aliases):
            merged.append(rec)
    return KnowledgeBase(records=merged)


def validate_attributes(kb: KnowledgeBase, catalog: SlotCatalog) -> list[tuple[str, str, str, str]]:
    """Flag attribute values outside the candidate set of categorical slots.

    Returns (entity name, domain, slot name, value) tuples; an empty list
    means every categorical attribute is catalog-backed.
    """
    flags = []
    for rec in kb.records:
        for slot_name, value in sorted(rec.attributes.items()):
            slot = SlotId(rec.domain, slot_name)
            if catalog.is_categorical(slot) and value not in catalog.candidates.get(str(slot), set()):
                flags.append((rec.name, rec.domain, slot_name, value))
    return flags
