"""Backend equivalence: compiled and pure-Python kernels must agree."""

import random

import numpy as np
import pytest

from coshare import kernels
from coshare.matrix import build_matrix
from coshare.network import project_similarity

pytestmark = pytest.mark.skipif(
    len(kernels.available_backends()) < 2,
    reason="compiled backend not built; nothing to compare",
)


def random_matrix(rng, n_users=25, n_urls=30):
    users = [f"u{i}" for i in range(rng.randint(2, n_users))]
    shares = []
    for u in users:
        for _ in range(rng.randint(1, 10)):
            shares.append((u, f"url{rng.randint(0, n_urls - 1)}"))
    return build_matrix(shares, set(users))


def test_projection_backends_identical():
    rng = random.Random(123)
    c = kernels.load_backend("c")
    py = kernels.load_backend("python")
    for _ in range(60):
        m = random_matrix(rng)
        threshold = rng.choice([0.0, 0.2, 0.5, 0.8])
        g_c = project_similarity(m, threshold, backend=c)
        g_p = project_similarity(m, threshold, backend=py)
        assert g_c.nodes == g_p.nodes
        assert np.array_equal(g_c.src, g_p.src)
        assert np.array_equal(g_c.dst, g_p.dst)
        np.testing.assert_allclose(g_c.weight, g_p.weight, rtol=1e-12, atol=0)


def test_threaded_projection_matches_serial():
    rng = random.Random(5)
    for backend_name in kernels.available_backends():
        backend = kernels.load_backend(backend_name)
        m = random_matrix(rng, n_users=40)
        base = project_similarity(m, 0.3, threads=1, backend=backend)
        for threads in (2, 3, 8):
            g = project_similarity(m, 0.3, threads=threads, backend=backend)
            assert np.array_equal(g.src, base.src)
            assert np.array_equal(g.dst, base.dst)
            assert np.array_equal(g.weight, base.weight)


def test_matvec_backends_identical():
    rng = random.Random(9)
    c = kernels.load_backend("c")
    py = kernels.load_backend("python")
    for _ in range(30):
        n = rng.randint(1, 50)
        nnz_rows = [sorted(rng.sample(range(n), rng.randint(0, n))) for _ in range(n)]
        indptr = np.zeros(n + 1, dtype=np.int64)
        cols = []
        for i, row in enumerate(nnz_rows):
            cols.extend(row)
            indptr[i + 1] = len(cols)
        cols = np.array(cols, dtype=np.int64)
        vals = np.array([rng.uniform(-1, 1) for _ in range(len(cols))])
        x = np.array([rng.uniform(-1, 1) for _ in range(n)])
        yc = c.csr_matvec(indptr, cols, vals, x)
        yp = py.csr_matvec(indptr, cols, vals, x)
        np.testing.assert_allclose(yc, yp, rtol=1e-13, atol=0)


def test_prefix_cuts_backends_identical():
    rng = random.Random(11)
    c = kernels.load_backend("c")
    py = kernels.load_backend("python")
    for _ in range(30):
        n, m = rng.randint(1, 20), rng.randint(1, 15)
        rows = [sorted(rng.sample(range(m), rng.randint(1, m))) for _ in range(n)]
        indptr = np.zeros(n + 1, dtype=np.int64)
        cols, vals = [], []
        for i, row in enumerate(rows):
            cols.extend(row)
            vals.extend(rng.uniform(0, 1) for _ in row)
            indptr[i + 1] = len(cols)
        cols = np.array(cols, dtype=np.int64)
        vals = np.array(vals)
        colmax = np.zeros(m)
        np.maximum.at(colmax, cols, vals)
        t = rng.choice([0.0, 0.3, 0.7, 1.0])
        assert np.array_equal(c.prefix_cuts(indptr, cols, vals, colmax, t),
                              py.prefix_cuts(indptr, cols, vals, colmax, t))
