/**
 * Bridge to the ontodst pipeline for external training code.
 *
 * Everything crosses the boundary as serialized JSON through the
 * `ontodst` command-line interface; no matching, formatting, or
 * correction logic lives on this side. A {@link BridgeHandle} pins the
 * ontology, entity databases, and correction policy for its lifetime and
 * validates them eagerly at load time.
 *
 * ```ts
 * import { load } from "ontodst-bridge";
 *
 * const handle = load("fixtures/ontology.json", "fixtures/db");
 * handle.match("book prezzo please");
 * // -> [{ surface: "prezzo", domain: "restaurant", start: 2, end: 3 }]
 * handle.correct({ "restaurant-name": "the gardenia", "restaurant-pricerange": "moderate" });
 * // -> state with pricerange = "expensive" plus the correction report
 * handle.close();
 * ```
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface MatchSpan {
  surface: string;
  domain: string;
  start: number;
  end: number;
}

/** Slot-id ("domain-slotname") to value; "none"/"dontcare" are sentinels. */
export type StateMap = Record<string, string>;

export interface Conflict {
  name_slot: string;
  entity: string;
  attribute_slot: string;
  predicted: string;
  kb_value: string;
}

export interface CorrectionReport {
  conflicts: Conflict[];
  applied: { slot: string; old: string; new: string }[];
  skipped: { conflict: Conflict; reason: string }[];
}

export interface Segment {
  kind: string;
  tokens: string[];
  uses_position_embeddings: boolean;
}

export interface FormattedTurn {
  dialogue_id: string;
  turn_index: number;
  total_len: number;
  segments: Segment[];
}

export interface CorpusTurn {
  index: number;
  system: string;
  user: string;
  state?: StateMap;
}

export interface CorpusDialogue {
  id: string;
  turns: CorpusTurn[];
}

export interface LoadOptions {
  /** Interpreter used to run the pipeline (default: "python3"). */
  python?: string;
  /** Matcher scope, mirroring the CLI flag (default: "user"). */
  speakers?: "user" | "both";
  /** Max formatted sequence length (default: 384). */
  maxLen?: number;
}

export class BridgeError extends Error {}

function runCli(python: string, args: string[], stdin?: string): string {
  const result = spawnSync(python, ["-m", "ontodst.cli", ...args], {
    encoding: "utf-8",
    input: stdin,
    maxBuffer: 64 * 1024 * 1024,
  });
  if (result.error) {
    throw new BridgeError(`failed to launch ${python}: ${result.error.message}`);
  }
  if (result.status !== 0) {
    throw new BridgeError(result.stderr.trim() || `ontodst exited with ${result.status}`);
  }
  return result.stdout;
}

function readJsonl(path: string): Record<string, unknown>[] {
  const text = readFileSync(path, "utf-8");
  return text
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => JSON.parse(line));
}

/** Per-dialogue entity accumulation, replayed through the pipeline. */
export class AccumulatorSession {
  private readonly handle: BridgeHandle;
  private utterances: string[] = [];

  constructor(handle: BridgeHandle) {
    this.handle = handle;
  }

  /** Append one user utterance (the next dialogue turn). */
  push(utterance: string): void {
    this.utterances.push(utterance);
  }

  /** Unique (surface, domain) mentions so far, in first-seen order. */
  entries(): { surface: string; domain: string }[] {
    if (this.utterances.length === 0) {
      return [];
    }
    const turns = this.handle.formatInputs([
      {
        id: "accumulator",
        turns: this.utterances.map((user, index) => ({ index, system: "", user })),
      },
    ]);
    const last = turns[turns.length - 1];
    return last.segments
      .filter((segment) => segment.kind === "db_entry")
      .map((segment) => {
        // tokens are [DB] <name tokens...> - <domain>; names never
        // contain "-" after normalization
        const tokens = segment.tokens;
        return {
          surface: tokens.slice(1, tokens.length - 2).join(" "),
          domain: tokens[tokens.length - 1],
        };
      });
  }

  reset(): void {
    this.utterances = [];
  }
}

export class BridgeHandle {
  private readonly ontologyPath: string;
  private readonly dbDir: string;
  private readonly policyPath?: string;
  private readonly python: string;
  private readonly speakers: "user" | "both";
  private readonly maxLen: number;
  private alive = true;

  constructor(ontologyPath: string, dbDir: string, policyPath?: string, options: LoadOptions = {}) {
    this.ontologyPath = ontologyPath;
    this.dbDir = dbDir;
    this.policyPath = policyPath;
    this.python = options.python ?? process.env.ONTODST_PYTHON ?? "python3";
    this.speakers = options.speakers ?? "user";
    this.maxLen = options.maxLen ?? 384;
    // eager validation: a blank-state correction parses the ontology,
    // every db file, and the policy, failing now rather than mid-batch
    this.correct({});
  }

  private ensureAlive(): void {
    if (!this.alive) {
      throw new BridgeError("handle is closed");
    }
  }

  private inTempDir<T>(fn: (dir: string) => T): T {
    const dir = mkdtempSync(join(tmpdir(), "ontodst-bridge-"));
    try {
      return fn(dir);
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  }

  /** Entity mentions in one raw utterance (token offsets). */
  match(utterance: string): MatchSpan[] {
    if (typeof utterance !== "string") {
      throw new BridgeError("utterance must be a string");
    }
    return this.matchMany([utterance])[0];
  }

  /** Batch variant: one pipeline invocation for many utterances. */
  matchMany(utterances: string[]): MatchSpan[][] {
    this.ensureAlive();
    if (utterances.some((u) => typeof u !== "string")) {
      throw new BridgeError("utterances must be strings");
    }
    if (utterances.length === 0) {
      return [];
    }
    if (utterances.some((u) => u.includes("\n"))) {
      throw new BridgeError("utterances must be single lines");
    }
    return this.inTempDir((dir) => {
      const input = join(dir, "utterances.txt");
      writeFileSync(input, utterances.join("\n") + "\n");
      runCli(this.python, [
        "match",
        "--ontology", this.ontologyPath,
        "--db-dir", this.dbDir,
        "--utterances", input,
        "--speakers", this.speakers,
        "--out-dir", dir,
      ]);
      const grouped: MatchSpan[][] = utterances.map(() => []);
      for (const row of readJsonl(join(dir, "matches.jsonl"))) {
        grouped[row.line as number].push({
          surface: row.surface as string,
          domain: row.domain as string,
          start: row.start as number,
          end: row.end as number,
        });
      }
      return grouped;
    });
  }

  /** Post-correct one predicted state against the knowledge base. */
  correct(state: StateMap): { state: StateMap; report: CorrectionReport } {
    return this.correctMany([state])[0];
  }

  correctMany(states: StateMap[]): { state: StateMap; report: CorrectionReport }[] {
    this.ensureAlive();
    if (states.length === 0) {
      return [];
    }
    return this.inTempDir((dir) => {
      const input = join(dir, "states.jsonl");
      const lines = states.map((state, i) =>
        JSON.stringify({ dialogue_id: "bridge", turn_index: i, state }),
      );
      writeFileSync(input, lines.join("\n") + "\n");
      const args = [
        "correct",
        "--ontology", this.ontologyPath,
        "--db-dir", this.dbDir,
        "--predictions", input,
        "--out-dir", dir,
      ];
      if (this.policyPath) {
        args.push("--policy", this.policyPath);
      }
      runCli(this.python, args);
      const corrected = readJsonl(join(dir, "corrected.jsonl"));
      const report = JSON.parse(readFileSync(join(dir, "correction_report.json"), "utf-8"));
      return states.map((_, i) => {
        const row = corrected[i];
        const turn = report.turns[i];
        return {
          state: row.state as StateMap,
          report: {
            conflicts: turn.conflicts as Conflict[],
            applied: turn.applied as CorrectionReport["applied"],
            skipped: turn.skipped as CorrectionReport["skipped"],
          },
        };
      });
    });
  }

  /**
   * Render encoder inputs for whole dialogues: per-turn tagged segments
   * including the accumulated `[DB] <entity> - <domain>` entries.
   */
  formatInputs(corpus: CorpusDialogue[]): FormattedTurn[] {
    this.ensureAlive();
    return this.inTempDir((dir) => {
      const input = join(dir, "corpus.json");
      writeFileSync(input, JSON.stringify(corpus.map((d) => ({
        id: d.id,
        turns: d.turns.map((t) => ({ index: t.index, system: t.system, user: t.user, state: t.state ?? {} })),
      }))));
      runCli(this.python, [
        "format-input",
        "--ontology", this.ontologyPath,
        "--db-dir", this.dbDir,
        "--corpus", input,
        "--speakers", this.speakers,
        "--max-len", String(this.maxLen),
        "--out-dir", dir,
      ]);
      return readJsonl(join(dir, "inputs.jsonl")) as unknown as FormattedTurn[];
    });
  }

  /** A fresh per-dialogue accumulator; sessions never share state. */
  accumulator(): AccumulatorSession {
    this.ensureAlive();
    return new AccumulatorSession(this);
  }

  /** Invalidate the handle; any later call throws. */
  close(): void {
    this.alive = false;
  }
}

/**
 * Load a handle over the ontology, entity databases, and (optionally) a
 * correction policy. All inputs are validated before this returns.
 */
export function load(ontologyPath: string, dbDir: string, policyPath?: string, options?: LoadOptions): BridgeHandle {
  return new BridgeHandle(ontologyPath, dbDir, policyPath, options);
}
