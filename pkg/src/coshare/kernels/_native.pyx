# cython: language_level=3
"""Compiled kernels for the sparse cosine projection and power iteration.

Must stay operation-for-operation equivalent to `coshare.kernels.fallback`;
the candidate order and the index-ascending accumulation order are part of
the contract (deterministic output, thread-count independent values).
"""

from libc.stdlib cimport free, malloc, realloc

import numpy as np

BACKEND_NAME = "c"


def prefix_cuts(long long[::1] indptr, long long[::1] cols, double[::1] vals,
                double[::1] colmax, double threshold):
    """Per-row split between indexed prefix and pruned suffix.

    See the fallback module for the algorithmic contract.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t i
    cdef long long k, lo
    cdef double bound, nb
    with nogil:
        for i in range(n):
            lo = indptr[i]
            k = indptr[i + 1]
            bound = 0.0
            while k > lo:
                nb = bound + vals[k - 1] * colmax[cols[k - 1]]
                if nb >= threshold:
                    break
                bound = nb
                k -= 1
            o[i] = k
    return out


cdef struct EdgeBuf:
    long long *src
    long long *dst
    double *sim
    Py_ssize_t size
    Py_ssize_t cap


cdef int _edge_push(EdgeBuf *buf, long long i, long long j, double s) nogil:
    cdef Py_ssize_t newcap
    if buf.size == buf.cap:
        newcap = buf.cap * 2 if buf.cap > 0 else 1024
        buf.src = <long long *> realloc(buf.src, newcap * sizeof(long long))
        buf.dst = <long long *> realloc(buf.dst, newcap * sizeof(long long))
        buf.sim = <double *> realloc(buf.sim, newcap * sizeof(double))
        if buf.src == NULL or buf.dst == NULL or buf.sim == NULL:
            return -1
        buf.cap = newcap
    buf.src[buf.size] = i
    buf.dst[buf.size] = j
    buf.sim[buf.size] = s
    buf.size += 1
    return 0


def probe_pairs(long long jstart, long long jend,
                long long[::1] indptr, long long[::1] cols, double[::1] vals,
                long long[::1] idx_indptr, long long[::1] idx_rows,
                double threshold):
    """Score probe rows [jstart, jend) against the static prefix index."""
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef long long *stamp = <long long *> malloc(n_rows * sizeof(long long))
    cdef long long *cand = <long long *> malloc(n_rows * sizeof(long long))
    cdef EdgeBuf buf
    buf.src = NULL
    buf.dst = NULL
    buf.sim = NULL
    buf.size = 0
    buf.cap = 0

    cdef long long j, t, q, u, i, ncand, c
    cdef long long a, b, ea, eb, ca, cb
    cdef double s
    cdef int failed = 0

    if stamp == NULL or cand == NULL:
        failed = 1
    else:
        with nogil:
            for i in range(n_rows):
                stamp[i] = -1
            for j in range(jstart, jend):
                ncand = 0
                for t in range(indptr[j], indptr[j + 1]):
                    u = cols[t]
                    for q in range(idx_indptr[u], idx_indptr[u + 1]):
                        i = idx_rows[q]
                        if i >= j:
                            break
                        if stamp[i] != j:
                            stamp[i] = j
                            cand[ncand] = i
                            ncand += 1
                for c in range(ncand):
                    i = cand[c]
                    a = indptr[i]
                    ea = indptr[i + 1]
                    b = indptr[j]
                    eb = indptr[j + 1]
                    s = 0.0
                    while a < ea and b < eb:
                        ca = cols[a]
                        cb = cols[b]
                        if ca == cb:
                            s += vals[a] * vals[b]
                            a += 1
                            b += 1
                        elif ca < cb:
                            a += 1
                        else:
                            b += 1
                    if s >= threshold and s > 0.0:
                        if _edge_push(&buf, i, j, s) != 0:
                            failed = 1
                            break
                if failed:
                    break

    free(stamp)
    free(cand)
    if failed:
        free(buf.src)
        free(buf.dst)
        free(buf.sim)
        raise MemoryError("edge buffer allocation failed")

    src_arr = np.empty(buf.size, dtype=np.int64)
    dst_arr = np.empty(buf.size, dtype=np.int64)
    sim_arr = np.empty(buf.size, dtype=np.float64)
    cdef long long[::1] sv = src_arr
    cdef long long[::1] dv = dst_arr
    cdef double[::1] wv = sim_arr
    cdef Py_ssize_t k
    for k in range(buf.size):
        sv[k] = buf.src[k]
        dv[k] = buf.dst[k]
        wv[k] = buf.sim[k]
    free(buf.src)
    free(buf.dst)
    free(buf.sim)
    return src_arr, dst_arr, sim_arr


def csr_matvec(long long[::1] indptr, long long[::1] cols, double[::1] vals,
               double[::1] x):
    """y = A @ x for a CSR matrix, accumulating each row in index order."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    y = np.empty(n, dtype=np.float64)
    cdef double[::1] yv = y
    cdef Py_ssize_t i
    cdef long long t
    cdef double s
    with nogil:
        for i in range(n):
            s = 0.0
            for t in range(indptr[i], indptr[i + 1]):
                s += vals[t] * x[cols[t]]
            yv[i] = s
    return y
