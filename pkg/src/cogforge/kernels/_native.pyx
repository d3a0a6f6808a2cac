# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: affine-gap alignment and the all-quartets scan.

Must stay drop-in compatible with ``_pyback``; any change to scoring or
tie-breaking here has to be mirrored there.
"""

from libc.math cimport INFINITY

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF ST_M = 0   # diagonal
DEF ST_X = 1   # gap in b (consumes a)
DEF ST_Y = 2   # gap in a (consumes b)


def align_affine(a, b, subst, double gap_open, double gap_extend):
    """Global affine-gap alignment (Gotoh), maximizing the score.

    Returns (score, path) with path an (L, 2) int32 array, -1 marking a gap.
    """
    cdef cnp.int32_t[::1] av = np.ascontiguousarray(a, dtype=np.int32)
    cdef cnp.int32_t[::1] bv = np.ascontiguousarray(b, dtype=np.int32)
    cdef cnp.float64_t[:, ::1] sub = np.ascontiguousarray(subst, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0]
    cdef Py_ssize_t n = bv.shape[0]

    cdef cnp.float64_t[:, ::1] M = np.full((m + 1, n + 1), -INFINITY)
    cdef cnp.float64_t[:, ::1] X = np.full((m + 1, n + 1), -INFINITY)
    cdef cnp.float64_t[:, ::1] Y = np.full((m + 1, n + 1), -INFINITY)
    cdef cnp.int8_t[:, ::1] pM = np.zeros((m + 1, n + 1), dtype=np.int8)
    cdef cnp.int8_t[:, ::1] pX = np.zeros((m + 1, n + 1), dtype=np.int8)
    cdef cnp.int8_t[:, ::1] pY = np.zeros((m + 1, n + 1), dtype=np.int8)

    cdef Py_ssize_t i, j
    cdef double best, cand
    cdef int state

    M[0, 0] = 0.0
    for i in range(1, m + 1):
        X[i, 0] = gap_open + (i - 1) * gap_extend
        pX[i, 0] = ST_M if i == 1 else ST_X
    for j in range(1, n + 1):
        Y[0, j] = gap_open + (j - 1) * gap_extend
        pY[0, j] = ST_M if j == 1 else ST_Y

    for i in range(1, m + 1):
        for j in range(1, n + 1):
            # preference on ties: diagonal, then gap-in-a (Y), then gap-in-b (X)
            best = M[i - 1, j - 1]
            state = ST_M
            cand = Y[i - 1, j - 1]
            if cand > best:
                best = cand
                state = ST_Y
            cand = X[i - 1, j - 1]
            if cand > best:
                best = cand
                state = ST_X
            M[i, j] = best + sub[av[i - 1], bv[j - 1]]
            pM[i, j] = state

            best = M[i - 1, j] + gap_open
            state = ST_M
            cand = Y[i - 1, j] + gap_open
            if cand > best:
                best = cand
                state = ST_Y
            cand = X[i - 1, j] + gap_extend
            if cand > best:
                best = cand
                state = ST_X
            X[i, j] = best
            pX[i, j] = state

            best = M[i, j - 1] + gap_open
            state = ST_M
            cand = Y[i, j - 1] + gap_extend
            if cand > best:
                best = cand
                state = ST_Y
            cand = X[i, j - 1] + gap_open
            if cand > best:
                best = cand
                state = ST_X
            Y[i, j] = best
            pY[i, j] = state

    cdef double score = M[m, n]
    state = ST_M
    if Y[m, n] > score:
        score = Y[m, n]
        state = ST_Y
    if X[m, n] > score:
        score = X[m, n]
        state = ST_X

    cdef cnp.int32_t[:, ::1] path = np.empty((m + n, 2), dtype=np.int32)
    cdef Py_ssize_t pos = m + n
    i = m
    j = n
    while i > 0 or j > 0:
        pos -= 1
        if state == ST_M:
            path[pos, 0] = i - 1
            path[pos, 1] = j - 1
            state = pM[i, j]
            i -= 1
            j -= 1
        elif state == ST_X:
            path[pos, 0] = i - 1
            path[pos, 1] = -1
            state = pX[i, j]
            i -= 1
        else:
            path[pos, 0] = -1
            path[pos, 1] = j - 1
            state = pY[i, j]
            j -= 1
    return score, np.asarray(path)[pos:, :].copy()


def quartet_counts(d_inferred, d_gold):
    """Scan all leaf quartets of two topological distance matrices.

    Returns (gold_resolved, both_resolved_differing, inferred_star) counts.
    """
    cdef cnp.int64_t[:, ::1] di = np.ascontiguousarray(d_inferred, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] dg = np.ascontiguousarray(d_gold, dtype=np.int64)
    cdef Py_ssize_t n = di.shape[0]
    cdef Py_ssize_t i, j, k, l
    cdef long long resolved = 0, differing = 0, inferred_star = 0
    cdef int cg, ci

    for i in range(n - 3):
        for j in range(i + 1, n - 2):
            for k in range(j + 1, n - 1):
                for l in range(k + 1, n):
                    cg = _code(dg[i, j] + dg[k, l],
                               dg[i, k] + dg[j, l],
                               dg[i, l] + dg[j, k])
                    if cg == 0:
                        continue
                    resolved += 1
                    ci = _code(di[i, j] + di[k, l],
                               di[i, k] + di[j, l],
                               di[i, l] + di[j, k])
                    if ci == 0:
                        inferred_star += 1
                    elif ci != cg:
                        differing += 1
    return resolved, differing, inferred_star


cdef inline int _code(cnp.int64_t s1, cnp.int64_t s2, cnp.int64_t s3) nogil:
    if s1 < s2 and s1 < s3:
        return 1
    if s2 < s1 and s2 < s3:
        return 2
    if s3 < s1 and s3 < s2:
        return 3
    return 0
