#!/usr/bin/env python3
"""Benchmark the compiled automaton scan against the pure-Python fallback.

Builds one synthetic knowledge base, flattens its automaton once, and
times both kernels over the same utterance stream, so the comparison is
scan-only.  Run from the repo root:

    python benchmarks/bench_matcher.py [--entities 2000] [--utterances 3000]
"""

import argparse
import random
import time

import numpy as np

from ontodst.matching import _scan_py
from ontodst.matching._automaton import build_automaton

try:
    from ontodst.matching import _scan_cy
except ImportError:
    _scan_cy = None


def synth(entities: int, utterances: int, seed: int = 42):
    rng = random.Random(seed)
    pool = [f"word{i}" for i in range(400)]
    names = sorted({
        " ".join(rng.choice(pool) for _ in range(rng.randint(1, 3)))
        for _ in range(entities)
    })
    auto = build_automaton([tuple(n.split()) for n in names])
    streams = []
    for _ in range(utterances):
        tokens = [rng.choice(pool) for _ in range(rng.randint(5, 30))]
        streams.append(auto.encode(tokens))
    return auto, streams


def bench_python(auto, streams):
    start = time.perf_counter()
    hits = 0
    for ids in streams:
        ends, _ = _scan_py.scan(ids, auto.trans_start, auto.trans_tok, auto.trans_next,
                                auto.fail, auto.out_pat, auto.out_link)
        hits += len(ends)
    return time.perf_counter() - start, hits


def bench_cython(auto, streams):
    arrays = auto.arrays
    encoded = [np.asarray(ids, dtype=np.int32) for ids in streams]
    start = time.perf_counter()
    hits = 0
    for ids in encoded:
        ends, _ = _scan_cy.scan(ids, *arrays)
        hits += len(ends)
    return time.perf_counter() - start, hits


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--entities", type=int, default=2000)
    parser.add_argument("--utterances", type=int, default=3000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    auto, streams = synth(args.entities, args.utterances)
    tokens = sum(len(s) for s in streams)
    print(f"entities={args.entities} utterances={args.utterances} tokens={tokens}")

    py_time, py_hits = min(bench_python(auto, streams) for _ in range(args.repeats))
    print(f"{'python':<8}{py_time * 1e3:>10.1f} ms{tokens / py_time / 1e6:>10.2f} Mtok/s  hits={py_hits}")

    if _scan_cy is None:
        print("cython   (extension not built; pip install -e . --no-build-isolation)")
        return 0
    cy_time, cy_hits = min(bench_cython(auto, streams) for _ in range(args.repeats))
    print(f"{'cython':<8}{cy_time * 1e3:>10.1f} ms{tokens / cy_time / 1e6:>10.2f} Mtok/s  hits={cy_hits}")
    if cy_hits != py_hits:
        print("MISMATCH: kernels disagree")
        return 1
    print(f"speedup  {py_time / cy_time:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
