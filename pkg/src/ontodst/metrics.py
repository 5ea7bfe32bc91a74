"""Joint goal accuracy, slot accuracy, and slot F1 over aligned states.

Joint goal accuracy is per turn: the full predicted state must equal gold
on every slot.  Slot accuracy counts every (turn, slot) cell, none slots
included.  Slot F1 is micro-averaged over non-none (turn, slot, value)
triples: an exact match on a non-none gold cell is a true positive, a
non-none prediction that misses gold is a false positive, a non-none gold
cell not recovered is a false negative.  dontcare compares as a literal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ontodst.states import NONE_VALUE, DialogueState


@dataclass
class Metrics:
    jga: float
    slot_accuracy: float
    slot_f1: float
    turn_count: int
    per_slot_accuracy: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "jga": self.jga,
            "slot_accuracy": self.slot_accuracy,
            "slot_f1": self.slot_f1,
            "turn_count": self.turn_count,
            "per_slot_accuracy": dict(sorted(self.per_slot_accuracy.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _check_aligned(preds: list[DialogueState], golds: list[DialogueState]) -> None:
    if len(preds) != len(golds):
        raise ValueError(f"prediction/gold turn counts differ: {len(preds)} vs {len(golds)}")
    if not preds:
        raise ValueError("metrics need at least one turn")


@dataclass
class MetricCounts:
    """Raw counts behind every metric.

    Dialogues can be counted independently and merged: merge is a plain
    sum, so it is associative and commutative, and a parallel
    per-dialogue pass gives the same metrics as one sequential sweep.
    """

    turns: int = 0
    joint_hits: int = 0
    cells: int = 0
    cell_hits: int = 0
    tp: int = 0
    fp: int = 0
    fn: int = 0
    per_slot_hits: dict[str, int] = field(default_factory=dict)

    def merge(self, other: "MetricCounts") -> "MetricCounts":
        per_slot = dict(self.per_slot_hits)
        for slot_id, hits in other.per_slot_hits.items():
            per_slot[slot_id] = per_slot.get(slot_id, 0) + hits
        return MetricCounts(
            turns=self.turns + other.turns,
            joint_hits=self.joint_hits + other.joint_hits,
            cells=self.cells + other.cells,
            cell_hits=self.cell_hits + other.cell_hits,
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            per_slot_hits=per_slot,
        )


def count_stats(preds: list[DialogueState], golds: list[DialogueState]) -> MetricCounts:
    """Count one aligned block of turns (a dialogue, or a whole corpus)."""
    _check_aligned(preds, golds)
    counts = MetricCounts(turns=len(preds))
    for p, g in zip(preds, golds):
        if p.values == g.values:
            counts.joint_hits += 1
        for slot_id in g.slot_ids:
            pv, gv = p.get(slot_id), g.get(slot_id)
            counts.cells += 1
            if pv == gv:
                counts.cell_hits += 1
                counts.per_slot_hits[slot_id] = counts.per_slot_hits.get(slot_id, 0) + 1
            if gv != NONE_VALUE and pv == gv:
                counts.tp += 1
                continue
            if pv != NONE_VALUE:
                counts.fp += 1
            if gv != NONE_VALUE:
                counts.fn += 1
    return counts


def counts_to_metrics(counts: MetricCounts, slot_ids: tuple[str, ...]) -> Metrics:
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(
        jga=counts.joint_hits / counts.turns,
        slot_accuracy=counts.cell_hits / counts.cells,
        slot_f1=f1,
        turn_count=counts.turns,
        per_slot_accuracy={s: counts.per_slot_hits.get(s, 0) / counts.turns for s in slot_ids},
    )


def joint_goal_accuracy(preds: list[DialogueState], golds: list[DialogueState]) -> float:
    """Fraction of turns whose full state equals gold on every slot."""
    counts = count_stats(preds, golds)
    return counts.joint_hits / counts.turns


def slot_accuracy(preds: list[DialogueState], golds: list[DialogueState]) -> float:
    """Fraction of (turn, slot) cells predicted exactly; none is a value."""
    counts = count_stats(preds, golds)
    return counts.cell_hits / counts.cells


def per_slot_accuracy(preds: list[DialogueState], golds: list[DialogueState]) -> dict[str, float]:
    counts = count_stats(preds, golds)
    return {s: counts.per_slot_hits.get(s, 0) / counts.turns for s in golds[0].slot_ids}


def slot_f1(preds: list[DialogueState], golds: list[DialogueState]) -> float:
    """Micro-F1 over non-none (turn, slot, value) triples."""
    counts = count_stats(preds, golds)
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def compute_metrics(preds: list[DialogueState], golds: list[DialogueState]) -> Metrics:
    return counts_to_metrics(count_stats(preds, golds), golds[0].slot_ids)


def render_table(metrics: Metrics, title: str = "metrics") -> str:
    """Aligned plain-text report; documents the none-counting convention."""
    lines = [
        f"# {title}",
        "# slot accuracy counts every (turn, slot) cell, none slots included",
        f"{'turns':<22}{metrics.turn_count:>10d}",
        f"{'joint goal accuracy':<22}{metrics.jga:>10.4f}",
        f"{'slot accuracy':<22}{metrics.slot_accuracy:>10.4f}",
        f"{'slot f1':<22}{metrics.slot_f1:>10.4f}",
    ]
    worst = sorted(metrics.per_slot_accuracy.items(), key=lambda kv: (kv[1], kv[0]))[:5]
    lines.append("# lowest per-slot accuracy")
    for slot_id, acc in worst:
        lines.append(f"{slot_id:<28}{acc:>10.4f}")
    return "\n".join(lines) + "\n"
