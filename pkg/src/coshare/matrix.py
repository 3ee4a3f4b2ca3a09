"""User x URL share matrix with TF-IDF weighting.

Rows are users, columns are canonical URLs. tf is the raw share count;
idf down-weights URLs shared by many users, so a URL shared by everyone
carries exactly zero coordination signal under the default variant.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable

import numpy as np

from .fileio import atomic_open
from .models import EmptyResultError, UserUrlMatrix

log = logging.getLogger(__name__)

TFIDF_VARIANTS = ("raw", "smooth")


def _idf(n_users: int, df: np.ndarray, variant: str) -> np.ndarray:
    if variant == "raw":
        return np.log(n_users / df.astype(np.float64))
    if variant == "smooth":
        return np.log((1.0 + n_users) / (1.0 + df.astype(np.float64))) + 1.0
    raise ValueError(f"unknown tfidf variant {variant!r}")


def build_matrix(
    shares: Iterable[tuple[str, str]],
    active_users: set[str],
    tfidf_variant: str = "raw",
) -> UserUrlMatrix:
    """Count (user, url) share pairs and attach TF-IDF weights.

    Shares from users outside *active_users* are dropped. Row/column order
    is sorted, so the matrix is independent of input order.
    """
    if tfidf_variant not in TFIDF_VARIANTS:
        raise ValueError(f"unknown tfidf variant {tfidf_variant!r}")
    if not active_users:
        raise EmptyResultError("no active users to build a matrix from")

    pair_counts: dict[tuple[str, str], int] = {}
    for user, url in shares:
        if user not in active_users:
            continue
        key = (user, url)
        pair_counts[key] = pair_counts.get(key, 0) + 1
    if not pair_counts:
        raise EmptyResultError("no shares survived the activity filter")

    users = sorted({u for u, _ in pair_counts})
    urls = sorted({v for _, v in pair_counts})
    user_idx = {u: i for i, u in enumerate(users)}
    url_idx = {v: i for i, v in enumerate(urls)}

    items = sorted(pair_counts.items())
    rows = np.fromiter((user_idx[u] for (u, _), _ in items), dtype=np.int64, count=len(items))
    cols = np.fromiter((url_idx[v] for (_, v), _ in items), dtype=np.int64, count=len(items))
    counts = np.fromiter((c for _, c in items), dtype=np.int64, count=len(items))

    n, m = len(users), len(urls)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)

    df = np.bincount(cols, minlength=m).astype(np.int64)
    idf = _idf(n, df, tfidf_variant)
    weights = counts.astype(np.float64) * idf[cols]

    if n == 1 or not np.any(weights):
        log.warning(
            "matrix carries no coordination signal (%d user(s), all weights zero)", n
        )

    return UserUrlMatrix(
        users=users,
        urls=urls,
        indptr=indptr,
        indices=cols,
        counts=counts,
        weights=weights,
        tfidf_variant=tfidf_variant,
    )


def from_dense(
    users: list[str],
    urls: list[str],
    counts: np.ndarray | list[list[int]],
    tfidf_variant: str = "raw",
    weights: np.ndarray | list[list[float]] | None = None,
) -> UserUrlMatrix:
    """Build a matrix from a dense count array (small inputs and tests).

    When *weights* is given it overrides the TF-IDF computation; the
    sparsity pattern then follows the nonzero union of counts and weights.
    """
    counts_arr = np.asarray(counts, dtype=np.int64)
    n, m = counts_arr.shape
    if weights is None:
        df = (counts_arr > 0).sum(axis=0).astype(np.int64)
        idf = np.where(df > 0, _idf(n, np.maximum(df, 1), tfidf_variant), 0.0)
        weights_arr = counts_arr.astype(np.float64) * idf[None, :]
        pattern = counts_arr > 0
    else:
        weights_arr = np.asarray(weights, dtype=np.float64)
        pattern = (counts_arr > 0) | (weights_arr != 0.0)

    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    count_vals = []
    weight_vals = []
    for i in range(n):
        cols = np.flatnonzero(pattern[i])
        indptr[i + 1] = indptr[i] + len(cols)
        indices.append(cols.astype(np.int64))
        count_vals.append(counts_arr[i, cols])
        weight_vals.append(weights_arr[i, cols])
    return UserUrlMatrix(
        users=list(users),
        urls=list(urls),
        indptr=indptr,
        indices=np.concatenate(indices) if indices else np.empty(0, np.int64),
        counts=np.concatenate(count_vals) if count_vals else np.empty(0, np.int64),
        weights=np.concatenate(weight_vals) if weight_vals else np.empty(0, np.float64),
        tfidf_variant=tfidf_variant,
    )


def save_snapshot(m: UserUrlMatrix, path: str, similarity_threshold: float | None = None) -> None:
    """Write the matrix as a JSON sparse-triplet snapshot."""
    rows = np.repeat(np.arange(len(m.users), dtype=np.int64), np.diff(m.indptr))
    payload = {
        "n_users": len(m.users),
        "n_urls": len(m.urls),
        "tfidf_variant": m.tfidf_variant,
        "similarity_threshold": similarity_threshold,
        "users": m.users,
        "urls": m.urls,
        "triplets": [
            [int(r), int(c), int(k), float(w)]
            for r, c, k, w in zip(rows, m.indices, m.counts, m.weights)
        ],
    }
    with atomic_open(path) as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_snapshot(path: str) -> UserUrlMatrix:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    n = payload["n_users"]
    triplets = payload["triplets"]
    indptr = np.zeros(n + 1, dtype=np.int64)
    for r, _, _, _ in triplets:
        indptr[r + 1] += 1
    indptr = np.cumsum(indptr)
    order = sorted(range(len(triplets)), key=lambda t: (triplets[t][0], triplets[t][1]))
    return UserUrlMatrix(
        users=payload["users"],
        urls=payload["urls"],
        indptr=indptr,
        indices=np.array([triplets[t][1] for t in order], dtype=np.int64),
        counts=np.array([triplets[t][2] for t in order], dtype=np.int64),
        weights=np.array([triplets[t][3] for t in order], dtype=np.float64),
        tfidf_variant=payload["tfidf_variant"],
    )
