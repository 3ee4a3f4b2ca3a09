"""Pure-Python kernels, used when the compiled module is unavailable.

These mirror the compiled implementations operation-for-operation (same
candidate generation, same index-ascending accumulation order) so both
backends produce the same edges and, up to the last float ulp, the same
values. Only speed differs.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def prefix_cuts(indptr, cols, vals, colmax, threshold):
    """Per-row split between indexed prefix and pruned suffix.

    Row features must be sorted so that heavily-shared URLs come last.
    The suffix is the longest tail whose maximum possible contribution to
    any cosine (sum of val * column max) stays below *threshold*; pairs
    that only co-share suffix URLs provably fall below the threshold and
    never need scoring.
    """
    indptr_l = indptr.tolist()
    cols_l = cols.tolist()
    vals_l = vals.tolist()
    colmax_l = colmax.tolist()
    n = len(indptr_l) - 1
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        lo = indptr_l[i]
        k = indptr_l[i + 1]
        bound = 0.0
        while k > lo:
            nb = bound + vals_l[k - 1] * colmax_l[cols_l[k - 1]]
            if nb >= threshold:
                break
            bound = nb
            k -= 1
        out[i] = k
    return out


def probe_pairs(jstart, jend, indptr, cols, vals, idx_indptr, idx_rows, threshold):
    """Score probe rows [jstart, jend) against the static prefix index.

    For each probe j, candidate rows i < j are collected from the inverted
    index (rows ascending within each URL's posting list), then each
    candidate's cosine is computed by a full merge over both rows in
    ascending column order. Emits (src, dst, sim) with src < dst for pairs
    with sim >= threshold and sim > 0.
    """
    indptr_l = indptr.tolist()
    cols_l = cols.tolist()
    vals_l = vals.tolist()
    idx_indptr_l = idx_indptr.tolist()
    idx_rows_l = idx_rows.tolist()

    n_rows = len(indptr_l) - 1
    stamp = [-1] * n_rows
    src_out: list[int] = []
    dst_out: list[int] = []
    sim_out: list[float] = []

    for j in range(jstart, jend):
        cand: list[int] = []
        for t in range(indptr_l[j], indptr_l[j + 1]):
            u = cols_l[t]
            for q in range(idx_indptr_l[u], idx_indptr_l[u + 1]):
                i = idx_rows_l[q]
                if i >= j:
                    break
                if stamp[i] != j:
                    stamp[i] = j
                    cand.append(i)
        for i in cand:
            a = indptr_l[i]
            ea = indptr_l[i + 1]
            b = indptr_l[j]
            eb = indptr_l[j + 1]
            s = 0.0
            while a < ea and b < eb:
                ca = cols_l[a]
                cb = cols_l[b]
                if ca == cb:
                    s += vals_l[a] * vals_l[b]
                    a += 1
                    b += 1
                elif ca < cb:
                    a += 1
                else:
                    b += 1
            if s >= threshold and s > 0.0:
                src_out.append(i)
                dst_out.append(j)
                sim_out.append(s)

    return (
        np.asarray(src_out, dtype=np.int64),
        np.asarray(dst_out, dtype=np.int64),
        np.asarray(sim_out, dtype=np.float64),
    )


def csr_matvec(indptr, cols, vals, x):
    """y = A @ x for a CSR matrix, accumulating each row in index order."""
    indptr_l = indptr.tolist()
    cols_l = cols.tolist()
    vals_l = vals.tolist()
    x_l = x.tolist()
    n = len(indptr_l) - 1
    y = np.empty(n, dtype=np.float64)
    for i in range(n):
        s = 0.0
        for t in range(indptr_l[i], indptr_l[i + 1]):
            s += vals_l[t] * x_l[cols_l[t]]
        y[i] = s
    return y
