# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled automaton scan.  Same contract as _scan_py.scan."""


def scan(const int[::1] ids,
         const int[::1] trans_start,
         const int[::1] trans_tok,
         const int[::1] trans_next,
         const int[::1] fail,
         const int[::1] out_pat,
         const int[::1] out_link):
    cdef Py_ssize_t i, n = ids.shape[0]
    cdef int state = 0, tok, c, lo, hi, mid, found, nxt
    ends = []
    pats = []
    for i in range(n):
        tok = ids[i]
        if tok < 0:
            state = 0
            continue
        while True:
            lo = trans_start[state]
            hi = trans_start[state + 1]
            found = 0
            nxt = 0
            # binary search for tok among this state's sorted transitions
            while lo < hi:
                mid = (lo + hi) >> 1
                if trans_tok[mid] < tok:
                    lo = mid + 1
                elif trans_tok[mid] > tok:
                    hi = mid
                else:
                    found = 1
                    nxt = trans_next[mid]
                    break
            if found:
                state = nxt
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
