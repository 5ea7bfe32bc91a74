"""Knowledge-grounded tooling for multi-domain dialogue state tracking.

Subpackages cover the pipeline stages: ontology/KB ingestion, entity
mention matching and accumulation, encoder input formatting with [DB]
segments, slot-operation state tracking, KB-backed post-correction, and
DST metrics.
"""

from ontodst.correction import (
    Conflict,
    CorrectionPolicy,
    CorrectionReport,
    ImpactTally,
    SkipReason,
    correct,
    correction_impact,
    find_conflicts,
    resolve_entity,
)
from ontodst.corpus import Dialogue, Turn, emit_fixture, ingest_corpus
from ontodst.formatting import InputSequence, Segment, SegmentKind, build_input, render_db_entries
from ontodst.matching import (
    SCAN_BACKEND,
    EntityAccumulator,
    MatcherIndex,
    MatchSpan,
    accumulate,
    build_lexicon,
    match_utterance,
)
from ontodst.metrics import Metrics, compute_metrics, joint_goal_accuracy, slot_accuracy, slot_f1
from ontodst.ontology import (
    DOMAINS,
    EntityRecord,
    KnowledgeBase,
    OntologyError,
    SlotCatalog,
    SlotId,
    build_knowledge_base,
    kb_from_catalog,
    merge_kb_surfaces,
    normalize_surface,
    parse_entity_db,
    parse_ontology,
)
from ontodst.states import (
    DONTCARE_VALUE,
    NONE_VALUE,
    DialogueState,
    Op,
    SlotOperation,
    apply_operations,
    derive_operations,
)
from ontodst.wordpiece import (
    SubwordVocab,
    check_intuitive,
    load_fixture_vocab,
    load_vocab,
    patch_vocab,
    wordpiece_tokenize,
)

__version__ = "0.1.0"
