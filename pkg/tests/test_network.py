import csv
import itertools
import math
import random
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_network, peel_oracle, random_graph
from coshare.matrix import build_matrix, from_dense
from coshare.models import EmptyResultError
from coshare.network import (
    connected_components,
    graph_metrics,
    k_core,
    load_network,
    project_similarity,
    save_network,
    write_edgelist_csv,
    write_graphml,
)


def test_identical_vectors_edge_weight_one():
    m = from_dense(["u1", "u2"], ["a", "b"], [[1, 1], [1, 1]],
                   weights=[[0.3, 0.7], [0.3, 0.7]])
    g = project_similarity(m, 0.5)
    assert g.edges == [("u1", "u2", pytest.approx(1.0, abs=1e-12))]


def test_disjoint_vectors_no_edge():
    m = from_dense(["u1", "u2"], ["a", "b"], [[1, 0], [0, 1]],
                   weights=[[1.0, 0.0], [0.0, 2.0]])
    g = project_similarity(m, 0.0)
    assert g.n_edges == 0


def test_partial_overlap_weight():
    m = from_dense(["u1", "u2"], ["a", "b"], [[1, 1], [1, 0]],
                   weights=[[1.0, 1.0], [1.0, 0.0]])
    g = project_similarity(m, 0.5)
    (edge,) = g.edges
    assert edge[2] == pytest.approx(1 / math.sqrt(2), abs=1e-9)


def test_zero_weight_rows_excluded():
    m = from_dense(["u1", "u2", "u3"], ["a", "b"],
                   [[1, 0], [1, 1], [0, 1]],
                   weights=[[0.0, 0.0], [0.5, 0.5], [0.0, 0.4]])
    g = project_similarity(m, 0.0)
    assert g.excluded_users == ["u1"]
    assert g.nodes == ["u2", "u3"]


def test_projection_empty_matrix_errors():
    m = from_dense([], [], np.zeros((0, 0), dtype=np.int64))
    with pytest.raises(EmptyResultError):
        project_similarity(m, 0.5)


def test_projection_matches_dense_oracle():
    rng = random.Random(77)
    for _ in range(40):
        users = [f"u{i}" for i in range(rng.randint(2, 25))]
        shares = [(u, f"url{rng.randint(0, 30)}")
                  for u in users for _ in range(rng.randint(1, 8))]
        threshold = rng.choice([0.1, 0.4, 0.5, 0.8])
        m = build_matrix(shares, set(users))
        g = project_similarity(m, threshold, threads=rng.choice([1, 2]))
        dense = np.zeros(m.shape)
        rows = np.repeat(np.arange(len(m.users)), np.diff(m.indptr))
        dense[rows, m.indices] = m.weights
        got = {(g.nodes[a], g.nodes[b]): w for a, b, w in zip(g.src, g.dst, g.weight)}
        for i, j in itertools.combinations(range(len(m.users)), 2):
            ni, nj = np.linalg.norm(dense[i]), np.linalg.norm(dense[j])
            if ni == 0 or nj == 0:
                continue
            cos = float(dense[i] @ dense[j] / (ni * nj))
            key = (m.users[i], m.users[j])
            if key in got:
                assert got[key] == pytest.approx(cos, abs=1e-9)
                assert cos >= threshold - 1e-12 and cos > 0
            else:
                assert cos < threshold + 1e-12 or cos <= 0


def test_threshold_monotone():
    rng = random.Random(3)
    users = [f"u{i}" for i in range(15)]
    shares = [(u, f"url{rng.randint(0, 10)}") for u in users for _ in range(5)]
    m = build_matrix(shares, set(users))
    edges_at = {}
    for t in (0.0, 0.3, 0.6, 0.9):
        g = project_similarity(m, t)
        edges_at[t] = {(a, b) for a, b, _ in zip(g.src.tolist(), g.dst.tolist(), g.weight)}
    assert edges_at[0.9] <= edges_at[0.6] <= edges_at[0.3] <= edges_at[0.0]


def test_row_scaling_leaves_weights_unchanged():
    base = np.array([[1.0, 2.0, 0.0], [0.5, 1.0, 1.0], [0.0, 1.0, 3.0]])
    m1 = from_dense(["a", "b", "c"], ["x", "y", "z"], (base > 0).astype(int), weights=base)
    scaled = base.copy()
    scaled[1] *= 37.5
    m2 = from_dense(["a", "b", "c"], ["x", "y", "z"], (scaled > 0).astype(int), weights=scaled)
    g1 = project_similarity(m1, 0.2)
    g2 = project_similarity(m2, 0.2)
    assert g1.edges == [(a, b, pytest.approx(w, abs=1e-9)) for a, b, w in g2.edges]


def test_kcore_triangle_survives():
    g = make_network(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    out = k_core(g, 2)
    assert out.nodes == g.nodes and out.n_edges == 3


def test_kcore_star_collapses():
    g = make_network(6, [(0, i, 1.0) for i in range(1, 6)])
    out = k_core(g, 2)
    assert out.nodes == [] and out.n_edges == 0


def test_kcore_zero_is_identity():
    g = make_network(4, [(0, 1, 0.9)])
    assert k_core(g, 0) is g


def test_kcore_matches_peeling_oracle():
    rng = random.Random(13)
    for _ in range(50):
        n = rng.randint(1, 40)
        edges = random_graph(rng, n, rng.uniform(0.02, 0.3))
        g = make_network(n, edges)
        for k in (1, 2, 3, 5):
            got = set(k_core(g, k).nodes)
            want = {f"n{v}" for v in peel_oracle(n, edges, k)}
            # oracle keeps isolated nodes at k=0 only; both drop them for k>=1
            assert got == want


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 6))
def test_kcore_nesting(seed, k):
    rng = random.Random(seed)
    n = rng.randint(1, 30)
    g = make_network(n, random_graph(rng, n, 0.2))
    inner = k_core(g, k + 1)
    outer = k_core(g, k)
    assert set(inner.nodes) <= set(outer.nodes)
    inner_edges = {(inner.nodes[a], inner.nodes[b]) for a, b in zip(inner.src, inner.dst)}
    outer_edges = {(outer.nodes[a], outer.nodes[b]) for a, b in zip(outer.src, outer.dst)}
    assert inner_edges <= outer_edges


def test_metrics_triangle():
    g = make_network(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    metrics = graph_metrics(g)
    assert metrics["nodes"] == 3 and metrics["edges"] == 3
    assert metrics["component_sizes"] == [3]
    assert metrics["degree_distribution"] == {2: 3}


def test_metrics_two_disjoint_edges():
    g = make_network(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert graph_metrics(g)["component_sizes"] == [2, 2]


def test_metrics_match_adjacency_recount():
    rng = random.Random(21)
    n = 40
    edges = random_graph(rng, n, 0.08)
    g = make_network(n, edges)
    metrics = graph_metrics(g)
    # independent adjacency-list recount
    adj = {v: set() for v in range(n)}
    for a, b, _ in edges:
        adj[a].add(b)
        adj[b].add(a)
    assert metrics["nodes"] == n
    assert metrics["edges"] == len(edges)
    degree_hist = {}
    for v in range(n):
        degree_hist[len(adj[v])] = degree_hist.get(len(adj[v]), 0) + 1
    assert metrics["degree_distribution"] == degree_hist
    seen, sizes = set(), []
    for v in range(n):
        if v in seen:
            continue
        stack, comp = [v], set()
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            stack.extend(adj[x] - comp)
        seen |= comp
        sizes.append(len(comp))
    assert sorted(metrics["component_sizes"], reverse=True) == sorted(sizes, reverse=True)


def test_connected_components_ordering():
    g = make_network(5, [(3, 4, 1.0), (0, 1, 1.0), (1, 2, 1.0)])
    comps = connected_components(g)
    assert comps == [[0, 1, 2], [3, 4]]


def test_edgelist_csv_roundtrip(tmp_path):
    g = make_network(3, [(0, 1, 0.75), (1, 2, 0.5)])
    path = tmp_path / "edges.csv"
    write_edgelist_csv(g, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["source", "target", "weight"]
    assert rows[1] == ["n0", "n1", "0.75"]
    assert len(rows) == 3


def test_graphml_is_valid_xml(tmp_path):
    g = make_network(2, [(0, 1, 0.9)])
    path = tmp_path / "net.graphml"
    write_graphml(g, str(path))
    root = ET.parse(path).getroot()
    ns = "{http://graphml.graphdrawing.org/xmlns}"
    graph = root.find(f"{ns}graph")
    assert len(graph.findall(f"{ns}node")) == 2
    (edge,) = graph.findall(f"{ns}edge")
    assert edge.get("source") == "n0" and edge.get("target") == "n1"
    assert edge.find(f"{ns}data").text == "0.9"


def test_network_snapshot_roundtrip(tmp_path):
    g = make_network(3, [(0, 2, 0.6)])
    g.excluded_users.append("ghost")
    path = tmp_path / "network.json"
    save_network(g, str(path))
    back = load_network(str(path))
    assert back.nodes == g.nodes
    assert back.edges == g.edges
    assert back.excluded_users == ["ghost"]
