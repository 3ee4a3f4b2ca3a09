"""Cosine projection of the share matrix, k-core filtering, graph exports.

The projection scores only user pairs that co-share at least one URL, via a
static inverted index over each user's rarest URLs. A per-row prefix bound
(see kernels) prunes pairs that provably fall below the similarity
threshold, which keeps ubiquitously-shared URLs from exploding the
candidate set. Output is exact: identical to dense all-pairs cosine
restricted to the threshold.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from . import kernels
from .fileio import atomic_open
from .models import EmptyResultError, SimilarityNetwork, UserUrlMatrix

log = logging.getLogger(__name__)


def _probe_ranges(indptr: np.ndarray, threads: int) -> list[tuple[int, int]]:
    """Split probe rows into contiguous ranges with roughly equal nnz."""
    n = indptr.shape[0] - 1
    threads = max(1, min(threads, n))
    total = int(indptr[-1])
    bounds = [0]
    for t in range(1, threads):
        target = total * t // threads
        bounds.append(int(np.searchsorted(indptr, target)))
    bounds.append(n)
    return [(bounds[i], bounds[i + 1]) for i in range(threads) if bounds[i] < bounds[i + 1]]


def project_similarity(
    m: UserUrlMatrix,
    threshold: float = 0.5,
    threads: int = 1,
    backend=None,
) -> SimilarityNetwork:
    """Build the user similarity network from TF-IDF rows.

    Edge (i, j) is present iff cosine(weights_i, weights_j) >= threshold and
    > 0. Users whose weight rows are entirely zero are excluded and listed
    in `excluded_users`. Values are independent of the thread count: each
    pair's cosine is a merge over both rows in a fixed ascending order.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("similarity threshold must be in [0, 1]")
    if len(m.users) == 0:
        raise EmptyResultError("cannot project an empty matrix")
    impl = backend if backend is not None else kernels.active

    # Drop zero weights (idf == 0 columns) and the rows they empty out.
    keep = m.weights != 0.0
    rows_all = np.repeat(np.arange(len(m.users), dtype=np.int64), np.diff(m.indptr))
    rows = rows_all[keep]
    cols = m.indices[keep]
    vals = m.weights[keep].astype(np.float64)

    row_nnz = np.bincount(rows, minlength=len(m.users))
    live = row_nnz > 0
    excluded = [u for u, ok in zip(m.users, live) if not ok]
    nodes = [u for u, ok in zip(m.users, live) if ok]
    if not nodes:
        return SimilarityNetwork(
            nodes=[], src=np.empty(0, np.int64), dst=np.empty(0, np.int64),
            weight=np.empty(0, np.float64), threshold=threshold, excluded_users=excluded,
        )
    row_map = np.cumsum(live) - 1
    rows = row_map[rows]
    n = len(nodes)

    # Relabel columns by ascending document frequency so each row ends with
    # its most popular URLs; those become the pruned suffix.
    col_df = np.bincount(cols, minlength=len(m.urls))
    order = np.lexsort((np.arange(len(m.urls)), col_df))
    rank = np.empty(len(m.urls), dtype=np.int64)
    rank[order] = np.arange(len(m.urls))
    cols = rank[cols]
    perm = np.lexsort((cols, rows))
    rows, cols, vals = rows[perm], cols[perm], vals[perm]

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)

    norms = np.sqrt(np.add.reduceat(vals * vals, indptr[:-1]))
    vals = vals / norms[rows]

    colmax = np.zeros(len(m.urls), dtype=np.float64)
    np.maximum.at(colmax, cols, vals)

    cuts = impl.prefix_cuts(indptr, cols, vals, colmax, float(threshold))
    prefix_mask = np.arange(vals.shape[0], dtype=np.int64) < np.asarray(cuts)[rows]
    idx_cols = cols[prefix_mask]
    idx_rows_raw = rows[prefix_mask]
    idx_perm = np.lexsort((idx_rows_raw, idx_cols))
    idx_rows = idx_rows_raw[idx_perm]
    idx_indptr = np.zeros(len(m.urls) + 1, dtype=np.int64)
    np.add.at(idx_indptr, idx_cols + 1, 1)
    idx_indptr = np.cumsum(idx_indptr)

    ranges = _probe_ranges(indptr, threads)
    if len(ranges) == 1:
        parts = [impl.probe_pairs(ranges[0][0], ranges[0][1], indptr, cols, vals,
                                  idx_indptr, idx_rows, float(threshold))]
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            futures = [
                pool.submit(impl.probe_pairs, lo, hi, indptr, cols, vals,
                            idx_indptr, idx_rows, float(threshold))
                for lo, hi in ranges
            ]
            parts = [f.result() for f in futures]

    src = np.concatenate([p[0] for p in parts]) if parts else np.empty(0, np.int64)
    dst = np.concatenate([p[1] for p in parts]) if parts else np.empty(0, np.int64)
    sim = np.concatenate([p[2] for p in parts]) if parts else np.empty(0, np.float64)
    edge_order = np.lexsort((dst, src))
    return SimilarityNetwork(
        nodes=nodes,
        src=src[edge_order],
        dst=dst[edge_order],
        weight=sim[edge_order],
        threshold=threshold,
        excluded_users=excluded,
    )


def _adjacency(g: SimilarityNetwork) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = defaultdict(set)
    for a, b in zip(g.src.tolist(), g.dst.tolist()):
        adj[a].add(b)
        adj[b].add(a)
    return adj


def k_core(g: SimilarityNetwork, k: int) -> SimilarityNetwork:
    """Maximal subgraph in which every node has at least k neighbors.

    Degree counts edges, not weights. k=0 returns the graph unchanged
    (isolated nodes included).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return g
    adj = _adjacency(g)
    degree = {v: len(nbrs) for v, nbrs in adj.items()}
    queue = [v for v, d in degree.items() if d < k]
    removed: set[int] = set()
    while queue:
        v = queue.pop()
        if v in removed:
            continue
        removed.add(v)
        for w in adj[v]:
            if w in removed:
                continue
            degree[w] -= 1
            if degree[w] < k:
                queue.append(w)
    surviving = [v for v in range(len(g.nodes)) if v in adj and v not in removed]
    new_ids = {v: i for i, v in enumerate(surviving)}
    keep = np.array(
        [a in new_ids and b in new_ids for a, b in zip(g.src.tolist(), g.dst.tolist())],
        dtype=bool,
    ) if g.n_edges else np.empty(0, dtype=bool)
    remap = np.vectorize(new_ids.get, otypes=[np.int64]) if new_ids else None
    return SimilarityNetwork(
        nodes=[g.nodes[v] for v in surviving],
        src=remap(g.src[keep]) if remap is not None and keep.any() else np.empty(0, np.int64),
        dst=remap(g.dst[keep]) if remap is not None and keep.any() else np.empty(0, np.int64),
        weight=g.weight[keep] if g.n_edges else np.empty(0, np.float64),
        threshold=g.threshold,
        excluded_users=list(g.excluded_users),
    )


def connected_components(g: SimilarityNetwork) -> list[list[int]]:
    """Node-index components, largest first (ties by smallest member)."""
    parent = list(range(len(g.nodes)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in zip(g.src.tolist(), g.dst.tolist()):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    groups: dict[int, list[int]] = defaultdict(list)
    for v in range(len(g.nodes)):
        groups[find(v)].append(v)
    return sorted(groups.values(), key=lambda c: (-len(c), c[0]))


def graph_metrics(g: SimilarityNetwork) -> dict:
    """Node/edge counts, degree distribution, and component sizes."""
    degree = np.zeros(len(g.nodes), dtype=np.int64)
    if g.n_edges:
        np.add.at(degree, g.src, 1)
        np.add.at(degree, g.dst, 1)
    dist: dict[int, int] = defaultdict(int)
    for d in degree.tolist():
        dist[d] += 1
    components = connected_components(g)
    return {
        "nodes": len(g.nodes),
        "edges": g.n_edges,
        "degree_distribution": dict(sorted(dist.items())),
        "component_sizes": [len(c) for c in components],
    }


def write_edgelist_csv(g: SimilarityNetwork, path: str) -> None:
    with atomic_open(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "target", "weight"])
        for a, b, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist()):
            writer.writerow([g.nodes[a], g.nodes[b], repr(w)])


def write_graphml(g: SimilarityNetwork, path: str) -> None:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="w" for="edge" attr.name="weight" attr.type="double"/>',
        '  <graph edgedefault="undirected">',
    ]
    for node in g.nodes:
        lines.append(f"    <node id={quoteattr(node)}/>")
    for a, b, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist()):
        lines.append(
            f"    <edge source={quoteattr(g.nodes[a])} target={quoteattr(g.nodes[b])}>"
            f"<data key=\"w\">{escape(repr(w))}</data></edge>"
        )
    lines.append("  </graph>")
    lines.append("</graphml>")
    with atomic_open(path) as fh:
        fh.write("\n".join(lines) + "\n")


def save_network(g: SimilarityNetwork, path: str) -> None:
    """JSON snapshot used by the export command."""
    payload = {
        "threshold": g.threshold,
        "nodes": g.nodes,
        "edges": [
            [g.nodes[a], g.nodes[b], w]
            for a, b, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist())
        ],
        "excluded_users": g.excluded_users,
    }
    with atomic_open(path) as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_network(path: str) -> SimilarityNetwork:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    nodes = payload["nodes"]
    ids = {u: i for i, u in enumerate(nodes)}
    edges = payload["edges"]
    src = np.array([ids[e[0]] for e in edges], dtype=np.int64)
    dst = np.array([ids[e[1]] for e in edges], dtype=np.int64)
    weight = np.array([e[2] for e in edges], dtype=np.float64)
    return SimilarityNetwork(
        nodes=nodes, src=src, dst=dst, weight=weight,
        threshold=payload.get("threshold", 0.0),
        excluded_users=payload.get("excluded_users", []),
    )
