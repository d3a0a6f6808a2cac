"""Pure-Python/numpy fallback for the compiled kernels.

Semantics must match ``_native`` exactly, including traceback tie-breaking
(diagonal > gap-in-a > gap-in-b) and the strict-minimum quartet rule; the
test suite and benchmark run both backends against each other.
"""

import numpy as np

NEG_INF = float("-inf")

# predecessor/state codes shared with the native kernel
_M, _X, _Y = 0, 1, 2  # diagonal, gap in b (consumes a), gap in a (consumes b)


def align_affine(a, b, subst, gap_open, gap_extend):
    """Global affine-gap alignment (Gotoh), maximizing the score.

    a, b: integer symbol sequences; subst: 2D score table indexed by symbol.
    Returns (score, path) with path an (L, 2) int32 array, -1 marking a gap.
    """
    m, n = len(a), len(b)
    subst = np.asarray(subst, dtype=np.float64)

    M = [[NEG_INF] * (n + 1) for _ in range(m + 1)]
    X = [[NEG_INF] * (n + 1) for _ in range(m + 1)]
    Y = [[NEG_INF] * (n + 1) for _ in range(m + 1)]
    pM = [[0] * (n + 1) for _ in range(m + 1)]
    pX = [[0] * (n + 1) for _ in range(m + 1)]
    pY = [[0] * (n + 1) for _ in range(m + 1)]

    M[0][0] = 0.0
    for i in range(1, m + 1):
        X[i][0] = gap_open + (i - 1) * gap_extend
        pX[i][0] = _M if i == 1 else _X
    for j in range(1, n + 1):
        Y[0][j] = gap_open + (j - 1) * gap_extend
        pY[0][j] = _M if j == 1 else _Y

    for i in range(1, m + 1):
        ai = a[i - 1]
        for j in range(1, n + 1):
            best, state = _pick(M[i - 1][j - 1], X[i - 1][j - 1], Y[i - 1][j - 1])
            M[i][j] = best + subst[ai, b[j - 1]]
            pM[i][j] = state

            best, state = _pick(M[i - 1][j] + gap_open,
                                X[i - 1][j] + gap_extend,
                                Y[i - 1][j] + gap_open)
            X[i][j] = best
            pX[i][j] = state

            best, state = _pick(M[i][j - 1] + gap_open,
                                X[i][j - 1] + gap_open,
                                Y[i][j - 1] + gap_extend)
            Y[i][j] = best
            pY[i][j] = state

    score, state = _pick(M[m][n], X[m][n], Y[m][n])

    path = []
    i, j = m, n
    while i > 0 or j > 0:
        if state == _M:
            path.append((i - 1, j - 1))
            state = pM[i][j]
            i -= 1
            j -= 1
        elif state == _X:
            path.append((i - 1, -1))
            state = pX[i][j]
            i -= 1
        else:
            path.append((-1, j - 1))
            state = pY[i][j]
            j -= 1
    path.reverse()
    return score, np.array(path, dtype=np.int32).reshape(len(path), 2)


def _pick(m_val, x_val, y_val):
    # preference on ties: diagonal, then gap-in-a (Y), then gap-in-b (X)
    best, state = m_val, _M
    if y_val > best:
        best, state = y_val, _Y
    if x_val > best:
        best, state = x_val, _X
    return best, state


def quartet_counts(d_inferred, d_gold):
    """Scan all leaf quartets of two topological distance matrices.

    Returns (gold_resolved, both_resolved_differing, inferred_star) counts.
    A quartet is resolved when exactly one of the three pair-sums is a
    strict minimum; otherwise it is a star.
    """
    di = np.ascontiguousarray(d_inferred, dtype=np.int64)
    dg = np.ascontiguousarray(d_gold, dtype=np.int64)
    n = di.shape[0]
    resolved = 0
    differing = 0
    inferred_star = 0
    tri_cache = {}
    for j in range(1, n - 2):
        rest = np.arange(j + 1, n)
        m = rest.size
        tri = tri_cache.get(m)
        if tri is None:
            tri = np.triu_indices(m, k=1)
            tri_cache[m] = tri
        dg_kl = dg[j + 1:, j + 1:][tri]
        di_kl = di[j + 1:, j + 1:][tri]
        for i in range(j):
            cg = _topology_codes(dg, i, j, rest, tri, dg_kl)
            ci = _topology_codes(di, i, j, rest, tri, di_kl)
            gold_res = cg > 0
            resolved += int(np.count_nonzero(gold_res))
            differing += int(np.count_nonzero(gold_res & (ci > 0) & (ci != cg)))
            inferred_star += int(np.count_nonzero(gold_res & (ci == 0)))
    return resolved, differing, inferred_star


def _topology_codes(d, i, j, rest, tri, d_kl):
    s1 = d[i, j] + d_kl
    ik = d[i, rest]
    jk = d[j, rest]
    s2 = (ik[:, None] + jk[None, :])[tri]          # d(i,k) + d(j,l)
    s3 = (ik[None, :] + jk[:, None])[tri]          # d(i,l) + d(j,k)
    codes = np.zeros(s1.shape, dtype=np.int8)
    codes[(s1 < s2) & (s1 < s3)] = 1
    codes[(s2 < s1) & (s2 < s3)] = 2
    codes[(s3 < s1) & (s3 < s2)] = 3
    return codes
