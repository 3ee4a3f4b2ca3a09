import random

import numpy as np
import pytest

from coshare import kernels
from coshare.models import SimilarityNetwork


def make_network(n_nodes: int, edges: list[tuple[int, int, float]]) -> SimilarityNetwork:
    """Build a SimilarityNetwork from (a, b, weight) tuples on integer nodes."""
    edges = sorted((min(a, b), max(a, b), w) for a, b, w in edges)
    return SimilarityNetwork(
        nodes=[f"n{i}" for i in range(n_nodes)],
        src=np.array([a for a, _, _ in edges], dtype=np.int64),
        dst=np.array([b for _, b, _ in edges], dtype=np.int64),
        weight=np.array([w for _, _, w in edges], dtype=np.float64),
    )


def random_graph(rng: random.Random, n: int, p: float, connected: bool = False):
    """Erdos-Renyi style edge list; optionally forced connected via a spanning tree."""
    edges = {}
    if connected and n > 1:
        order = list(range(n))
        rng.shuffle(order)
        for i in range(1, n):
            j = order[rng.randint(0, i - 1)]
            a, b = min(order[i], j), max(order[i], j)
            edges[(a, b)] = rng.uniform(0.05, 1.0)
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in edges and rng.random() < p:
                edges[(a, b)] = rng.uniform(0.05, 1.0)
    return [(a, b, w) for (a, b), w in sorted(edges.items())]


def peel_oracle(n: int, edges: list[tuple[int, int, float]], k: int) -> set[int]:
    """Brute-force k-core: repeatedly remove any node of degree < k."""
    alive = set(range(n))
    while True:
        degree = {v: 0 for v in alive}
        for a, b, _ in edges:
            if a in alive and b in alive:
                degree[a] += 1
                degree[b] += 1
        doomed = {v for v in alive if degree[v] < k}
        if not doomed:
            return alive
        alive -= doomed


def backend_params():
    return [pytest.param(kernels.load_backend(name), id=name)
            for name in kernels.available_backends()]
