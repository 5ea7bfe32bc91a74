"""Pure-Python automaton scan, the fallback for the compiled kernel.

Operates on the same flattened transition arrays as the Cython kernel
(see _automaton.Automaton) and must produce identical output.
"""

from bisect import bisect_left


def scan(ids, trans_start, trans_tok, trans_next, fail, out_pat, out_link):
    """Run the automaton over a token-id sequence.

    Returns parallel lists (ends, pats): for each pattern occurrence, the
    exclusive end offset in `ids` and the pattern id.  Ids below zero are
    tokens outside the pattern vocabulary; they reset to the root.
    """
    ends = []
    pats = []
    state = 0
    for i, tok in enumerate(ids):
        if tok < 0:
            state = 0
            continue
        while True:
            lo = trans_start[state]
            hi = trans_start[state + 1]
            j = bisect_left(trans_tok, tok, lo, hi)
            if j < hi and trans_tok[j] == tok:
                state = trans_next[j]
                break
            if state == 0:
                break
            state = fail[state]
        c = state
        if out_pat[c] < 0:
            c = out_link[c]
        while c >= 0:
            ends.append(i + 1)
            pats.append(out_pat[c])
            c = out_link[c]
    return ends, pats
