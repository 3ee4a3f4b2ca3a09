"""Eigenvector-centrality scoring and percentile flagging.

Power iteration runs on the weighted adjacency with a unit diagonal shift
(x <- A x + x). The shift leaves the dominant eigenvector unchanged and
guarantees convergence on bipartite components, where iterating the bare
adjacency oscillates between two limit vectors forever.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from fractions import Fraction

import numpy as np

from . import kernels
from .fileio import atomic_open
from .models import (
    CentralityScores,
    Cluster,
    CoordinationReport,
    EmptyResultError,
    SimilarityNetwork,
    UserUrlMatrix,
)
from .network import connected_components

log = logging.getLogger(__name__)

NORMALIZATIONS = ("l2", "max")
CENTRALITY_MODES = ("global", "per_component")


def _symmetric_csr(g: SimilarityNetwork) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = len(g.nodes)
    heads = np.concatenate([g.src, g.dst])
    tails = np.concatenate([g.dst, g.src])
    vals = np.concatenate([g.weight, g.weight])
    order = np.lexsort((tails, heads))
    heads, tails, vals = heads[order], tails[order], vals[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, heads + 1, 1)
    return np.cumsum(indptr), tails.astype(np.int64), vals.astype(np.float64)


def _power_iteration(indptr, cols, vals, n, tol, max_iter, backend):
    x = np.full(n, 1.0 / math.sqrt(n), dtype=np.float64)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        y = backend.csr_matvec(indptr, cols, vals, x) + x
        norm = float(np.sqrt(np.dot(y, y)))
        if norm == 0.0:
            x = y
            converged = True
            break
        y /= norm
        diff = float(np.max(np.abs(y - x)))
        x = y
        if diff < tol:
            converged = True
            break
    return x, iterations, converged


def eigenvector_centrality(
    g: SimilarityNetwork,
    tol: float = 1e-10,
    max_iter: int = 1000,
    normalization: str = "l2",
    mode: str = "global",
    backend=None,
) -> CentralityScores:
    """Score nodes by the dominant eigenvector of the weighted adjacency.

    Starts from a uniform positive vector; stops when successive normalized
    iterates differ by less than *tol* in max-norm. Zero-degree nodes get
    an exact 0. In per_component mode each connected component is iterated
    and normalized independently.
    """
    if len(g.nodes) == 0:
        raise EmptyResultError("centrality of an empty graph is undefined")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    if mode not in CENTRALITY_MODES:
        raise ValueError(f"unknown centrality mode {mode!r}")
    impl = backend if backend is not None else kernels.active

    n = len(g.nodes)
    degree = np.zeros(n, dtype=np.int64)
    if g.n_edges:
        np.add.at(degree, g.src, 1)
        np.add.at(degree, g.dst, 1)

    if g.n_edges == 0:
        return CentralityScores(
            scores={u: 0.0 for u in g.nodes}, normalization=normalization,
            iterations_used=0, converged=True, mode=mode,
        )

    indptr, cols, vals = _symmetric_csr(g)

    if mode == "global":
        x, iterations, converged = _power_iteration(indptr, cols, vals, n, tol, max_iter, impl)
        x[degree == 0] = 0.0
        x = _renormalize(x, normalization)
        scores = {u: float(s) for u, s in zip(g.nodes, x)}
        return CentralityScores(
            scores=scores, normalization=normalization,
            iterations_used=iterations, converged=converged, mode=mode,
        )

    scores = {}
    iterations_total = 0
    converged_all = True
    for comp in connected_components(g):
        comp_arr = np.array(comp, dtype=np.int64)
        if len(comp) == 1 and degree[comp[0]] == 0:
            scores[g.nodes[comp[0]]] = 0.0
            continue
        local = {v: i for i, v in enumerate(comp)}
        li, lc, lv = _component_csr(indptr, cols, vals, comp_arr, local)
        x, iterations, converged = _power_iteration(li, lc, lv, len(comp), tol, max_iter, impl)
        x = _renormalize(x, normalization)
        iterations_total = max(iterations_total, iterations)
        converged_all = converged_all and converged
        for v, s in zip(comp, x):
            scores[g.nodes[v]] = float(s)
    return CentralityScores(
        scores=scores, normalization=normalization,
        iterations_used=iterations_total, converged=converged_all, mode=mode,
    )


def _component_csr(indptr, cols, vals, comp, local):
    li = [0]
    lc = []
    lv = []
    for v in comp.tolist():
        for t in range(int(indptr[v]), int(indptr[v + 1])):
            lc.append(local[int(cols[t])])
            lv.append(float(vals[t]))
        li.append(len(lc))
    return (
        np.array(li, dtype=np.int64),
        np.array(lc, dtype=np.int64),
        np.array(lv, dtype=np.float64),
    )


def _renormalize(x: np.ndarray, normalization: str) -> np.ndarray:
    if normalization == "l2":
        norm = float(np.sqrt(np.dot(x, x)))
    else:
        norm = float(np.max(x)) if x.size else 0.0
    return x / norm if norm > 0 else x


def nearest_rank_percentile(values: list[float], p: float) -> float:
    """The ceil(p/100 * n)-th smallest value.

    The rank is computed with exact rational arithmetic so that e.g.
    p=99, n=100 yields rank 99 rather than drifting to 100 through float
    rounding.
    """
    if not values:
        raise ValueError("percentile of empty values")
    if not 0.0 < p < 100.0:
        raise ValueError("percentile must be in (0, 100)")
    n = len(values)
    rank = math.ceil(Fraction(str(p)) * n / 100)
    rank = min(max(rank, 1), n)
    return sorted(values)[rank - 1]


def percentile_threshold(scores: CentralityScores, p: float) -> CoordinationReport:
    """Flag nodes whose score is strictly above the nearest-rank percentile.

    Ties at the threshold value are excluded, which keeps the flagged set
    conservative.
    """
    if not scores.scores:
        raise EmptyResultError("no scores to threshold")
    threshold = nearest_rank_percentile(list(scores.scores.values()), p)
    flagged = {u for u, s in scores.scores.items() if s > threshold}
    return CoordinationReport(
        flagged=flagged,
        percentile=float(p),
        threshold_value=float(threshold),
        scores=dict(scores.scores),
        mode=scores.mode,
    )


def percentile_threshold_per_component(
    g: SimilarityNetwork, scores: CentralityScores, p: float
) -> CoordinationReport:
    """Flag per-component percentiles; thresholds recorded per component."""
    if not scores.scores:
        raise EmptyResultError("no scores to threshold")
    flagged: set[str] = set()
    thresholds: dict[int, float] = {}
    for idx, comp in enumerate(connected_components(g)):
        comp_scores = {g.nodes[v]: scores.scores[g.nodes[v]] for v in comp}
        t = nearest_rank_percentile(list(comp_scores.values()), p)
        thresholds[idx] = float(t)
        flagged.update(u for u, s in comp_scores.items() if s > t)
    return CoordinationReport(
        flagged=flagged,
        percentile=float(p),
        threshold_value=float(min(thresholds.values())) if thresholds else 0.0,
        scores=dict(scores.scores),
        mode="per_component",
        component_thresholds=thresholds,
    )


def extract_clusters(
    g: SimilarityNetwork,
    flagged: set[str],
    matrix: UserUrlMatrix | None = None,
    top_n: int = 10,
) -> list[Cluster]:
    """Connected components of the flagged-induced subgraph.

    Flagged users absent from the graph become singleton clusters, so the
    clusters always partition the flagged set. When *matrix* is given,
    clusters are annotated with the URLs shared by at least two members
    (ranked by total TF-IDF weight) and the domains those URLs roll up to.
    """
    node_ids = {u: i for i, u in enumerate(g.nodes)}
    flagged_ids = {node_ids[u] for u in flagged if u in node_ids}

    parent: dict[int, int] = {v: v for v in flagged_ids}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in zip(g.src.tolist(), g.dst.tolist()):
        if a in flagged_ids and b in flagged_ids:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
    groups: dict[int, list[str]] = defaultdict(list)
    for v in flagged_ids:
        groups[find(v)].append(g.nodes[v])
    clusters = [sorted(members) for members in groups.values()]
    clusters.extend([u] for u in sorted(flagged - set(node_ids)))
    clusters.sort(key=lambda c: (-len(c), c[0]))
    return [_annotate_cluster(members, matrix, top_n) for members in clusters]


def _annotate_cluster(members: list[str], matrix: UserUrlMatrix | None, top_n: int) -> Cluster:
    if matrix is None:
        return Cluster(members=members)
    user_rows = {u: i for i, u in enumerate(matrix.users)}
    url_weight: dict[int, float] = defaultdict(float)
    url_members: dict[int, int] = defaultdict(int)
    for u in members:
        i = user_rows.get(u)
        if i is None:
            continue
        lo, hi = int(matrix.indptr[i]), int(matrix.indptr[i + 1])
        for c, w in zip(matrix.indices[lo:hi].tolist(), matrix.weights[lo:hi].tolist()):
            url_weight[c] += w
            url_members[c] += 1
    shared = [(c, w) for c, w in url_weight.items() if url_members[c] >= 2]
    shared.sort(key=lambda cw: (-cw[1], matrix.urls[cw[0]]))
    top_urls = [(matrix.urls[c], w) for c, w in shared[:top_n]]
    domain_weight: dict[str, float] = defaultdict(float)
    for c, w in shared:
        domain = matrix.urls[c].split("://", 1)[-1].split("/", 1)[0]
        domain_weight[domain] += w
    top_domains = sorted(domain_weight.items(), key=lambda dw: (-dw[1], dw[0]))[:top_n]
    return Cluster(members=members, top_urls=top_urls, top_domains=top_domains)


def annotate_suspensions(
    report: CoordinationReport,
    suspended_handles: set[str],
    handle_by_user: dict[str, str],
) -> CoordinationReport:
    """Count flagged users whose handle appears in the suspension list."""
    normalized = {h.lstrip("@").casefold() for h in suspended_handles}
    suspended_users = set()
    unmatched = 0
    for user in report.flagged:
        handle = handle_by_user.get(user)
        if handle is None:
            unmatched += 1
            continue
        if handle.lstrip("@").casefold() in normalized:
            suspended_users.add(user)
    if unmatched:
        log.warning("%d flagged user(s) have no profile handle", unmatched)
    report.suspended_users = suspended_users
    report.suspended_count = len(suspended_users)
    report.unmatched_handles = unmatched
    return report


def report_to_dict(report: CoordinationReport, scores: CentralityScores | None = None) -> dict:
    flagged_sorted = sorted(report.flagged, key=lambda u: (-report.scores.get(u, 0.0), u))
    payload = {
        "mode": report.mode,
        "percentile": report.percentile,
        "threshold_value": report.threshold_value,
        "flagged": [
            {"user_id": u, "score": report.scores.get(u, 0.0),
             "suspended": u in report.suspended_users}
            for u in flagged_sorted
        ],
        "clusters": [
            {
                "members": c.members,
                "top_urls": [[u, w] for u, w in c.top_urls],
                "top_domains": [[d, w] for d, w in c.top_domains],
            }
            for c in report.clusters
        ],
        "suspended_count": report.suspended_count,
        "unmatched_handles": report.unmatched_handles,
    }
    if report.component_thresholds:
        payload["component_thresholds"] = {
            str(k): v for k, v in report.component_thresholds.items()
        }
    if scores is not None:
        payload["centrality"] = {
            "normalization": scores.normalization,
            "iterations_used": scores.iterations_used,
            "converged": scores.converged,
        }
    return payload


def write_report_json(report: CoordinationReport, path: str,
                      scores: CentralityScores | None = None) -> None:
    with atomic_open(path) as fh:
        json.dump(report_to_dict(report, scores), fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_report_csv(report: CoordinationReport, path: str) -> None:
    """Flat per-node table: user_id, score, flagged, cluster_id, suspended."""
    cluster_of = {}
    for idx, cluster in enumerate(report.clusters):
        for u in cluster.members:
            cluster_of[u] = idx
    with atomic_open(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "score", "flagged", "cluster_id", "suspended"])
        for u in sorted(report.scores, key=lambda u: (-report.scores[u], u)):
            writer.writerow([
                u,
                repr(report.scores[u]),
                str(u in report.flagged).lower(),
                cluster_of.get(u, ""),
                str(u in report.suspended_users).lower(),
            ])
