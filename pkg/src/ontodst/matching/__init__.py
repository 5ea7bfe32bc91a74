"""Entity mention matching over dialogue utterances.

Builds a multi-pattern matcher over every knowledge-base name and alias,
finds word-boundary-aligned mentions in utterances (longest match wins,
ties to the leftmost), and accumulates unique (surface, domain) pairs
across dialogue turns in first-seen order.

The inner scan has two interchangeable backends: a Cython kernel and a
pure-Python fallback.  The compiled one is used when importable; set
ONTO_DST_PURE=1 to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ontodst.ontology import EntityRecord, KnowledgeBase, normalize_surface

from . import _scan_py
from ._automaton import Automaton, build_automaton

if os.environ.get("ONTO_DST_PURE"):
    _kernel = _scan_py
    SCAN_BACKEND = "python"
else:
    try:
        from . import _scan_cy as _kernel  # type: ignore[no-redef]

        SCAN_BACKEND = "cython"
    except ImportError:  # extension not built
        _kernel = _scan_py
        SCAN_BACKEND = "python"


@dataclass(frozen=True)
class MatchSpan:
    """One entity mention: token offsets into the normalized utterance."""

    surface: str
    start: int
    end: int
    domain: str
    record_index: int
    record: EntityRecord

    def as_tuple(self) -> tuple[str, str, int, int]:
        return (self.surface, self.domain, self.start, self.end)


@dataclass
class MatcherIndex:
    """Immutable multi-pattern index over KB surfaces."""

    surfaces: list[str]  # pattern id -> surface
    payloads: list[list[tuple[str, int]]]  # pattern id -> [(domain, record index)]
    automaton: Automaton
    kb: KnowledgeBase

    @property
    def surface_count(self) -> int:
        return len(self.surfaces)


def build_lexicon(kb: KnowledgeBase) -> MatcherIndex:
    """Index every name and alias of every KB record, once per surface."""
    if not kb.records:
        raise ValueError("cannot build a matcher over an empty knowledge base")
    by_surface: dict[str, list[tuple[str, int]]] = {}
    for idx, rec in enumerate(kb.records):
        for alias in sorted(rec.aliases):
            by_surface.setdefault(alias, []).append((rec.domain, idx))
    surfaces = sorted(by_surface)
    payloads = [sorted(set(by_surface[s])) for s in surfaces]
    automaton = build_automaton([tuple(s.split()) for s in surfaces])
    return MatcherIndex(surfaces=surfaces, payloads=payloads, automaton=automaton, kb=kb)


def _run_scan(auto: Automaton, ids: list[int]):
    if _kernel is _scan_py:
        return _scan_py.scan(ids, auto.trans_start, auto.trans_tok, auto.trans_next,
                             auto.fail, auto.out_pat, auto.out_link)
    return _kernel.scan(np.asarray(ids, dtype=np.int32), *auto.arrays)


def _longest_match_filter(spans: list[tuple[int, int, int]], n_tokens: int) -> list[tuple[int, int, int]]:
    """Greedy overlap resolution: longest span first, ties to the leftmost."""
    taken = [False] * n_tokens
    kept = []
    for start, end, pid in sorted(spans, key=lambda s: (s[0] - s[1], s[0])):
        if any(taken[start:end]):
            continue
        for i in range(start, end):
            taken[i] = True
        kept.append((start, end, pid))
    kept.sort()
    return kept


def match_utterance(index: MatcherIndex, utterance: str) -> list[MatchSpan]:
    """Find entity mentions in a raw utterance.

    The utterance is normalized and split into tokens; spans are token
    offsets.  Overlaps are resolved longest-match-wins, then leftmost;
    output is sorted by start offset.
    """
    tokens = normalize_surface(utterance).split()
    if not tokens:
        return []
    auto = index.automaton
    ids = auto.encode(tokens)
    ends, pats = _run_scan(auto, ids)
    candidates = [(end - auto.pattern_lens[pid], end, pid) for end, pid in zip(ends, pats)]
    spans: list[MatchSpan] = []
    for start, end, pid in _longest_match_filter(candidates, len(tokens)):
        surface = index.surfaces[pid]
        for domain, rec_idx in index.payloads[pid]:
            spans.append(MatchSpan(surface=surface, start=start, end=end, domain=domain,
                                   record_index=rec_idx, record=index.kb.records[rec_idx]))
    return spans


@dataclass(frozen=True)
class EntityAccumulator:
    """De-duplicated (surface, domain) mentions in first-seen order."""

    entries: tuple[tuple[str, str], ...] = ()
    first_seen_turn: dict[tuple[str, str], int] = field(default_factory=dict)

    @classmethod
    def empty(cls) -> "EntityAccumulator":
        return cls()


def accumulate(acc: EntityAccumulator, matches: list[MatchSpan], turn: int) -> EntityAccumulator:
    """Fold a turn's matches into the accumulator (value semantics)."""
    entries = list(acc.entries)
    first_seen = dict(acc.first_seen_turn)
    seen = set(entries)
    for span in matches:
        key = (span.surface, span.domain)
        if key not in seen:
            seen.add(key)
            entries.append(key)
            first_seen[key] = turn
    return EntityAccumulator(entries=tuple(entries), first_seen_turn=first_seen)
