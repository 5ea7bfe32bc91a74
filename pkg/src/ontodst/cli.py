"""Command-line pipeline: ingest, match, format-input, correct, evaluate,
tokenize-check, convert, emit-fixture, and an end-to-end run command.

Every stage writes its artifacts to --out-dir via temp-then-rename, so a
failing stage never leaves partial output behind.  Reports embed a digest
of the resolved configuration (flags plus input-file hashes); re-running
with identical inputs produces byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ontodst.correction import CorrectionPolicy, correct, correction_impact
from ontodst.corpus import (
    Dialogue,
    Turn,
    convert_preprocessed,
    emit_fixture,
    ingest_corpus,
    serialize_corpus,
    validate_gold_values,
)
from ontodst.formatting import build_input, render_db_entries
from ontodst.matching import EntityAccumulator, accumulate, build_lexicon, match_utterance
from ontodst.metrics import MetricCounts, compute_metrics, count_stats, counts_to_metrics, render_table
from ontodst.ontology import (
    ENTITY_DB_DOMAINS,
    KnowledgeBase,
    SlotCatalog,
    build_knowledge_base,
    kb_from_catalog,
    merge_kb_surfaces,
    parse_ontology,
    validate_attributes,
)
from ontodst.states import DialogueState
from ontodst.wordpiece import load_fixture_vocab, load_vocab, patch_vocab, wordpiece_tokenize

logger = logging.getLogger("ontodst")


class StageError(RuntimeError):
    """A pipeline stage failed; main() tags the message with the stage."""


def _read_text(path: str | Path, kind: str) -> str:
    p = Path(path)
    if not p.exists():
        raise StageError(f"{kind} file not found: {p}")
    return p.read_text("utf-8")


def _write_text(path: Path, text: str) -> None:
    # temp-then-rename keeps half-written artifacts out of --out-dir
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, "utf-8")
    os.replace(tmp, path)


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _config_block(args: argparse.Namespace, files: dict[str, str]) -> dict:
    """Flags plus input digests; hashed for provenance in every report."""
    flags = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "out_dir") and isinstance(v, (str, int, float, bool, type(None)))
    }
    config = {"flags": flags, "inputs": {k: _sha256(v) for k, v in sorted(files.items())}}
    return {"config": config, "config_digest": _sha256(json.dumps(config, sort_keys=True))}


def _load_catalog(args, files: dict[str, str]) -> SlotCatalog:
    text = _read_text(args.ontology, "ontology")
    files["ontology"] = text
    return parse_ontology(text)


def _load_kb(args, catalog: SlotCatalog, files: dict[str, str]) -> KnowledgeBase:
    if not args.db_dir:
        raise StageError("missing --db-dir")
    db_dir = Path(args.db_dir)
    docs = {}
    for domain in ENTITY_DB_DOMAINS:
        p = db_dir / f"{domain}_db.json"
        if p.exists():
            docs[domain] = p.read_text("utf-8")
            files[f"db/{domain}"] = docs[domain]
    if not docs:
        raise StageError(f"no <domain>_db.json files under {db_dir}")
    return build_knowledge_base(docs, catalog)


def _match_kb(args, catalog: SlotCatalog, files: dict[str, str]) -> KnowledgeBase:
    """The matcher's surface source: db files, ontology name lists, or both."""
    source = getattr(args, "lexicon_source", "db")
    if source == "ontology":
        return kb_from_catalog(catalog)
    kb = _load_kb(args, catalog, files)
    if source == "both":
        kb = merge_kb_surfaces(kb, kb_from_catalog(catalog))
    return kb


def _load_corpus(args, catalog: SlotCatalog, files: dict[str, str]) -> list[Dialogue]:
    if not args.corpus:
        raise StageError("missing --corpus")
    text = _read_text(args.corpus, "corpus")
    files["corpus"] = text
    return ingest_corpus(text, catalog)


def _load_predictions(args, catalog: SlotCatalog, files: dict[str, str]) -> dict[tuple[str, int], DialogueState]:
    if not args.predictions:
        raise StageError("missing --predictions")
    text = _read_text(args.predictions, "predictions")
    files["predictions"] = text
    preds = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            key = (str(row["dialogue_id"]), int(row["turn_index"]))
            preds[key] = DialogueState.from_mapping(catalog, row["state"])
        except (KeyError, ValueError, TypeError) as exc:
            raise StageError(f"predictions line {lineno}: {exc}") from exc
    return preds


def _aligned_predictions(dialogues, preds) -> list[DialogueState]:
    out = []
    for d in dialogues:
        for t in d.turns:
            key = (d.id, t.index)
            if key not in preds:
                raise StageError(f"missing prediction for dialogue {d.id} turn {t.index}")
            out.append(preds[key])
    return out


def _matches_for_dialogue(index, dialogue: Dialogue, speakers: str):
    """Returns [(turn, [(speaker, span), ...], accumulator-after-turn)]."""
    acc = EntityAccumulator.empty()
    out = []
    for t in dialogue.turns:
        turn_spans = []
        texts = [("user", t.user_utterance)]
        if speakers == "both":
            texts = ([("system", t.system_utterance)] if t.system_utterance else []) + texts
        for speaker, text in texts:
            for span in match_utterance(index, text):
                turn_spans.append((speaker, span))
        acc = accumulate(acc, [s for _, s in turn_spans], t.index)
        out.append((t, turn_spans, acc))
    return out


# ---------------------------------------------------------------- stages

def cmd_ingest(args) -> int:
    files: dict[str, str] = {}
    catalog = _load_catalog(args, files)
    dialogues = _load_corpus(args, catalog, files)
    kb = _load_kb(args, catalog, files) if args.db_dir else None
    out = Path(args.out_dir)
    _write_text(out / "corpus.normalized.json", serialize_corpus(dialogues))
    report = _config_block(args, files)
    report["dialogues"] = len(dialogues)
    report["turns"] = sum(len(d.turns) for d in dialogues)
    report["offcatalog_gold_values"] = [
        {"dialogue_id": d, "turn_index": t, "slot": s, "value": v}
        for d, t, s, v in validate_gold_values(dialogues, catalog)
    ]
    if kb is not None:
        _write_text(out / "kb_snapshot.json", kb.to_json())
        report["entities"] = len(kb.records)
        report["offcatalog_kb_values"] = [
            {"entity": n, "domain": d, "slot": s, "value": v} for n, d, s, v in validate_attributes(kb, catalog)
        ]
    _write_text(out / "ingest_report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    logger.info("ingested %d dialogues", len(dialogues))
    return 0


def cmd_match(args) -> int:
    files: dict[str, str] = {}
    catalog = _load_catalog(args, files)
    index = build_lexicon(_match_kb(args, catalog, files))
    lines = []
    if getattr(args, "utterances", None):
        text = _read_text(args.utterances, "utterances")
        files["utterances"] = text
        for i, raw in enumerate(text.splitlines()):
            for span in match_utterance(index, raw):
                lines.append(json.dumps({
                    "line": i, "surface": span.surface, "domain": span.domain,
                    "start": span.start, "end": span.end,
                }, sort_keys=True))
    else:
        dialogues = _load_corpus(args, catalog, files)
        for d in dialogues:
            for t, turn_spans, acc in _matches_for_dialogue(index, d, args.speakers):
                for speaker, span in turn_spans:
                    lines.append(json.dumps({
                        "dialogue_id": d.id, "turn_index": t.index, "speaker": speaker,
                        "surface": span.surface, "domain": span.domain,
                        "start": span.start, "end": span.end,
                    }, sort_keys=True))
    _write_text(Path(args.out_dir) / "matches.jsonl", "\n".join(lines) + ("\n" if lines else ""))
    logger.info("wrote %d match spans", len(lines))
    return 0


def _make_tokenizer(args):
    if not getattr(args, "vocab", None) and not getattr(args, "patch", None):
        return None, None
    vocab = load_vocab(_read_text(args.vocab, "vocab")) if args.vocab else load_fixture_vocab()
    if getattr(args, "patch", None):
        vocab = patch_vocab(vocab, args.patch.split(","))
    return vocab, lambda w: wordpiece_tokenize(vocab, w)


def cmd_format_input(args) -> int:
    files: dict[str, str] = {}
    catalog = _load_catalog(args, files)
    dialogues = _load_corpus(args, catalog, files)
    index = build_lexicon(_match_kb(args, catalog, files))
    _, tokenize = _make_tokenizer(args)
    lines = []
    for d in dialogues:
        prev_turn = ("", "")
        prev_state = DialogueState.blank(catalog)
        for t, _, acc in _matches_for_dialogue(index, d, args.speakers):
            cur_turn = (t.system_utterance, t.user_utterance)
            seq = build_input(prev_turn, cur_turn, prev_state, catalog,
                              render_db_entries(acc), args.max_len, tokenize)
            record = {"dialogue_id": d.id, "turn_index": t.index}
            record.update(seq.to_dict())
            lines.append(json.dumps(record, sort_keys=True))
            prev_turn = cur_turn
            prev_state = t.gold_state
    _write_text(Path(args.out_dir) / "inputs.jsonl", "\n".join(lines) + "\n")
    logger.info("wrote %d formatted turns", len(lines))
    return 0


def _correct_dialogue(payload):
    """Worker: correct every turn of one dialogue (picklable inputs)."""
    dialogue_id, states, kb, catalog, policy = payload
    results = []
    for turn_index, state in states:
        fixed, report = correct(state, kb, catalog, policy)
        results.append((turn_index, fixed, report))
    return dialogue_id, results


def _run_correction(dialogues, preds, kb, catalog, policy, jobs: int):
    payloads = []
    for d in dialogues:
        states = [(t.index, preds[(d.id, t.index)]) for t in d.turns]
        payloads.append((d.id, states, kb, catalog, policy))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_correct_dialogue, payloads))
    else:
        results = [_correct_dialogue(p) for p in payloads]
    return results


def cmd_correct(args) -> int:
    files: dict[str, str] = {}
    catalog = _load_catalog(args, files)
    kb = _load_kb(args, catalog, files)
    policy = _load_policy(args, files)
    preds = _load_predictions(args, catalog, files)
    dialogues = _load_corpus(args, catalog, files) if args.corpus else _dialogues_from_predictions(preds, catalog)
    _aligned_predictions(dialogues, preds)

    results = _run_correction(dialogues, preds, kb, catalog, policy, args.jobs)
    lines = []
    turn_reports = []
    for dialogue_id, turns in results:
        for turn_index, fixed, report in turns:
            lines.append(json.dumps({
                "dialogue_id": dialogue_id, "turn_index": turn_index,
                "state": fixed.to_dict(),
            }, sort_keys=True))
            entry = {"dialogue_id": dialogue_id, "turn_index": turn_index}
            entry.update(report.to_dict())
            turn_reports.append(entry)
    out = Path(args.out_dir)
    _write_text(out / "corrected.jsonl", "\n".join(lines) + "\n")
    report = _config_block(args, files)
    report["policy"] = policy.to_dict()
    report["turns"] = turn_reports
    report["applied_total"] = sum(len(t["applied"]) for t in turn_reports)
    _write_text(out / "correction_report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    logger.info("applied %d corrections", report["applied_total"])
    return 0


def _dialogues_from_predictions(preds, catalog) -> list[Dialogue]:
    """Synthesize dialogue shells when correcting without a corpus."""
    by_id: dict[str, list[int]] = {}
    for dialogue_id, turn_index in preds:
        by_id.setdefault(dialogue_id, []).append(turn_index)
    dialogues = []
    for dialogue_id in sorted(by_id):
        turns = [
            Turn(index=i, system_utterance="", user_utterance="", gold_state=DialogueState.blank(catalog))
            for i in sorted(by_id[dialogue_id])
        ]
        dialogues.append(Dialogue(id=dialogue_id, turns=turns))
    return dialogues


def _load_policy(args, files: dict[str, str]) -> CorrectionPolicy:
    if args.policy:
        text = _read_text(args.policy, "policy")
        files["policy"] = text
        return CorrectionPolicy.from_json(text)
    return CorrectionPolicy.default()


def _count_dialogue(payload) -> MetricCounts:
    preds, golds = payload
    return count_stats(preds, golds)


def _parallel_metrics(dialogues, preds, golds_by_key, catalog, jobs: int):
    """Per-dialogue counting with a sum merge; order-independent."""
    payloads = []
    for d in dialogues:
        p = [preds[(d.id, t.index)] for t in d.turns]
        g = [golds_by_key[(d.id, t.index)] for t in d.turns]
        payloads.append((p, g))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_count_dialogue, payloads))
    else:
        parts = [_count_dialogue(p) for p in payloads]
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return counts_to_metrics(total, tuple(catalog.slot_ids))


def cmd_evaluate(args) -> int:
    files: dict[str, str] = {}
    catalog = _load_catalog(args, files)
    dialogues = _load_corpus(args, catalog, files)
    preds = _load_predictions(args, catalog, files)
    _aligned_predictions(dialogues, preds)
    golds_by_key = {(d.id, t.index): t.gold_state for d in dialogues for t in d.turns}
    metrics = _parallel_metrics(dialogues, preds, golds_by_key, catalog, args.jobs)
    out = Path(args.out_dir)
    payload = _config_block(args, files)
    payload["metrics"] = metrics.to_dict()
    _write_text(out / "metrics.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_text(out / "metrics.txt", render_table(metrics))
    print(render_table(metrics), end="")
    return 0


def cmd_tokenize_check(args) -> int:
    vocab, _ = _make_tokenizer(args)
    if vocab is None:
        vocab = load_fixture_vocab()
    for line in sys.stdin:
        for word in line.split():
            pieces = wordpiece_tokenize(vocab, word.lower())
            print(f"{word}\t{' '.join(pieces)}")
    return 0


def cmd_convert(args) -> int:
    files: dict[str, str] = {}
    catalog = _load_catalog(args, files)
    text = _read_text(args.input, "input")
    dialogues = convert_preprocessed(text, catalog)
    _write_text(Path(args.out), serialize_corpus(dialogues))
    logger.info("converted %d dialogues", len(dialogues))
    return 0


def cmd_emit_fixture(args) -> int:
    files: dict[str, str] = {}
    catalog = _load_catalog(args, files)
    dialogues = _load_corpus(args, catalog, files)
    _write_text(Path(args.out), emit_fixture(dialogues, args.ids.split(",")))
    return 0


def cmd_run(args) -> int:
    """End-to-end: ingest, match, format, correct, evaluate before/after."""
    files: dict[str, str] = {}
    catalog = _load_catalog(args, files)
    kb = _load_kb(args, catalog, files)
    policy = _load_policy(args, files)
    dialogues = _load_corpus(args, catalog, files)
    preds = _load_predictions(args, catalog, files)
    before = _aligned_predictions(dialogues, preds)
    golds = [t.gold_state for d in dialogues for t in d.turns]
    out = Path(args.out_dir)

    cmd_match(args)
    cmd_format_input(args)
    cmd_correct(args)

    after_by_key = {}
    for line in (out / "corrected.jsonl").read_text("utf-8").splitlines():
        row = json.loads(line)
        after_by_key[(row["dialogue_id"], row["turn_index"])] = DialogueState.from_mapping(catalog, row["state"])
    after = _aligned_predictions(dialogues, after_by_key)

    provenance = _config_block(args, files)
    for tag, states in (("before", before), ("after", after)):
        metrics = compute_metrics(states, golds)
        payload = dict(provenance)
        payload["metrics"] = metrics.to_dict()
        _write_text(out / f"metrics_{tag}.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
        _write_text(out / f"metrics_{tag}.txt", render_table(metrics, title=f"metrics ({tag} correction)"))

    tally = correction_impact(before, after, golds)
    payload = dict(provenance)
    payload["impact"] = tally.to_dict()
    _write_text(out / "impact.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    logger.info("pipeline complete: fixed=%d broken=%d", tally.total_fixed, tally.total_broken)
    return 0


# ------------------------------------------------------------------ main

def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    if "ontology" in names:
        p.add_argument("--ontology", required=True, help="ontology JSON (domain-slotname -> values)")
    if "db-dir" in names:
        p.add_argument("--db-dir", help="directory holding <domain>_db.json files")
    if "corpus" in names:
        p.add_argument("--corpus", help="corpus JSON in the internal format")
    if "predictions" in names:
        p.add_argument("--predictions", help="line-oriented JSON predictions")
    if "policy" in names:
        p.add_argument("--policy", help="correction policy JSON (default: packaged policy)")
    if "speakers" in names:
        p.add_argument("--speakers", choices=("user", "both"), default="user",
                       help="which utterances feed the matcher (default: user)")
        p.add_argument("--lexicon-source", choices=("db", "ontology", "both"), default="db",
                       help="where matching surfaces come from (default: db)")
    if "max-len" in names:
        p.add_argument("--max-len", type=int, default=384, help="max input tokens (default: 384)")
    if "vocab" in names:
        p.add_argument("--vocab", help="subword vocab file (default: packaged fixture vocab)")
        p.add_argument("--patch", help="comma-separated words to add as whole vocab tokens")
    if "out-dir" in names:
        p.add_argument("--out-dir", required=True, help="artifact directory")
    if "jobs" in names:
        p.add_argument("--jobs", type=int, default=1, help="dialogue-level worker count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ontodst", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a corpus and snapshot the KB")
    _add_common(p, "ontology", "db-dir", "corpus", "out-dir")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("match", help="find entity mentions")
    _add_common(p, "ontology", "db-dir", "corpus", "speakers", "out-dir")
    p.add_argument("--utterances", help="plain file with one raw utterance per line (instead of --corpus)")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("format-input", help="render encoder input sequences")
    _add_common(p, "ontology", "db-dir", "corpus", "speakers", "max-len", "vocab", "out-dir")
    p.set_defaults(func=cmd_format_input)

    p = sub.add_parser("correct", help="post-correct predicted states against the KB")
    _add_common(p, "ontology", "db-dir", "corpus", "predictions", "policy", "out-dir", "jobs")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("evaluate", help="score predictions against corpus gold states")
    _add_common(p, "ontology", "corpus", "predictions", "out-dir", "jobs")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tokenize-check", help="print segmentations for words on stdin")
    _add_common(p, "vocab")
    p.set_defaults(func=cmd_tokenize_check)

    p = sub.add_parser("convert", help="convert a preprocessed corpus to the internal format")
    _add_common(p, "ontology")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("emit-fixture", help="emit a deterministic corpus subset")
    _add_common(p, "ontology", "corpus")
    p.add_argument("--ids", required=True, help="comma-separated dialogue ids")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_emit_fixture)

    p = sub.add_parser("run", help="end-to-end pipeline with before/after metrics")
    _add_common(p, "ontology", "db-dir", "corpus", "predictions", "policy",
                "speakers", "max-len", "vocab", "out-dir", "jobs")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("ONTO_DST_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - stage-tagged diagnostics
        print(f"[{args.command}] error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
