"""Token-level Aho-Corasick automaton, flattened for the scan kernels.

Patterns are sequences of whitespace tokens (normalized entity surfaces
split on spaces), so matches are word-boundary aligned by construction.
The builder produces CSR-style transition arrays consumed by both the
compiled and the pure-Python scan.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass
class Automaton:
    """Flattened goto/failure/output structure over token ids."""

    token_ids: dict[str, int]
    pattern_lens: list[int]
    # Python lists for the fallback scan
    trans_start: list[int]
    trans_tok: list[int]
    trans_next: list[int]
    fail: list[int]
    out_pat: list[int]
    out_link: list[int]
    # the same arrays as contiguous int32 for the compiled scan
    arrays: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        if not self.arrays:
            self.arrays = tuple(
                np.asarray(a, dtype=np.int32)
                for a in (self.trans_start, self.trans_tok, self.trans_next,
                          self.fail, self.out_pat, self.out_link)
            )

    def encode(self, tokens: list[str]) -> list[int]:
        """Map tokens to ids; tokens outside the pattern vocabulary get -1."""
        get = self.token_ids.get
        return [get(t, -1) for t in tokens]


def build_automaton(patterns: list[tuple[str, ...]]) -> Automaton:
    """Build the automaton for token-tuple patterns (ids = list order)."""
    token_ids: dict[str, int] = {}
    for pat in patterns:
        for tok in pat:
            token_ids.setdefault(tok, len(token_ids))

    # goto trie; node 0 is the root
    children: list[dict[int, int]] = [{}]
    out_pat = [-1]
    for pid, pat in enumerate(patterns):
        node = 0
        for tok in pat:
            tid = token_ids[tok]
            nxt = children[node].get(tid)
            if nxt is None:
                nxt = len(children)
                children.append({})
                out_pat.append(-1)
                children[node][tid] = nxt
            node = nxt
        # one pattern per end state: identical token sequences are deduped
        # by the caller before build
        out_pat[node] = pid

    n = len(children)
    fail = [0] * n
    out_link = [-1] * n
    queue: deque[int] = deque()
    for tid, child in children[0].items():
        queue.append(child)
    while queue:
        u = queue.popleft()
        for tid, v in children[u].items():
            f = fail[u]
            while f and tid not in children[f]:
                f = fail[f]
            # v is strictly deeper than any child of f, so this never self-links
            fail[v] = children[f].get(tid, 0)
            out_link[v] = fail[v] if out_pat[fail[v]] >= 0 else out_link[fail[v]]
            queue.append(v)

    trans_start = [0]
    trans_tok: list[int] = []
    trans_next: list[int] = []
    for node in range(n):
        for tid in sorted(children[node]):
            trans_tok.append(tid)
            trans_next.append(children[node][tid])
        trans_start.append(len(trans_tok))

    return Automaton(
        token_ids=token_ids,
        pattern_lens=[len(p) for p in patterns],
        trans_start=trans_start,
        trans_tok=trans_tok,
        trans_next=trans_next,
        fail=fail,
        out_pat=out_pat,
        out_link=out_link,
    )
