/**
 * Usage example: augment a training batch with [DB] entity segments.
 *
 * Streams a dialogue corpus through the pipeline and writes one JSON
 * line per turn, ready to feed an encoder dataloader. Each record
 * carries the tagged segments: the two dialogue turns, the 30
 * slot-value segments, and the accumulated `[DB] <entity> - <domain>`
 * entries (flagged uses_position_embeddings = false).
 *
 *   npm run example -- fixtures-dir out.jsonl
 *
 * (defaults: ../fixtures and ./model_inputs.jsonl)
 */

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { load, type CorpusDialogue } from "../src/index.js";

const fixturesDir = process.argv[2] ?? join("..", "fixtures");
const outPath = process.argv[3] ?? "model_inputs.jsonl";

const handle = load(join(fixturesDir, "ontology.json"), join(fixturesDir, "db"));
try {
  const corpus = JSON.parse(readFileSync(join(fixturesDir, "corpus.json"), "utf-8")) as CorpusDialogue[];
  const turns = handle.formatInputs(corpus);
  const lines = turns.map((t) => JSON.stringify(t));
  writeFileSync(outPath, lines.join("\n") + "\n");

  const withDb = turns.filter((t) => t.segments.some((s) => s.kind === "db_entry")).length;
  console.log(`wrote ${turns.length} formatted turns to ${outPath} (${withDb} carry [DB] segments)`);
} finally {
  handle.close();
}
