"""Undirected communication topologies over ``n`` agents."""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    """Invalid graph size, probability or topology."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    Edges are stored canonically as sorted ``(i, j)`` tuples with ``i < j``.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"graph needs at least one vertex, got n={self.n}")
        canon = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) outside 0..{self.n - 1}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        nbrs = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        object.__setattr__(self, "neighbors", tuple(tuple(sorted(v)) for v in nbrs))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n))
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        return adj

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [[i, j] for i, j in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        return cls.from_dict(json.loads(text))


def ring(n: int) -> Graph:
    """Cycle graph; ``n=2`` degenerates to a single edge."""
    if n < 2:
        raise GraphError(f"ring needs n >= 2, got {n}")
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def path(n: int) -> Graph:
    if n < 2:
        raise GraphError(f"path needs n >= 2, got {n}")
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def star(n: int) -> Graph:
    """Star with center 0."""
    if n < 2:
        raise GraphError(f"star needs n >= 2, got {n}")
    return Graph(n, tuple((0, j) for j in range(1, n)))


def complete(n: int) -> Graph:
    if n < 2:
        raise GraphError(f"complete graph needs n >= 2, got {n}")
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def _prufer_tree(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    # Decoding a uniform Prufer sequence gives a uniform spanning tree of K_n.
    if n == 2:
        return [(0, 1)]
    seq = [int(v) for v in rng.integers(0, n, size=n - 2)]
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    tree = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        tree.append((min(leaf, v), max(leaf, v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u, w = heapq.heappop(leaves), heapq.heappop(leaves)
    tree.append((min(u, w), max(u, w)))
    return tree


def erdos_renyi_connected(n: int, edge_prob: float, seed: int) -> Graph:
    """Random connected graph: uniform spanning tree plus Bernoulli(edge_prob) extras.

    A pure function of ``(n, edge_prob, seed)``.
    """
    if n < 2:
        raise GraphError(f"erdos_renyi_connected needs n >= 2, got {n}")
    if not 0 < edge_prob <= 1:
        raise GraphError(f"edge_prob must lie in (0, 1], got {edge_prob}")
    rng = np.random.default_rng(seed)
    edges = set(_prufer_tree(n, rng))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) in edges:
                continue
            if rng.random() < edge_prob:
                edges.add((i, j))
    return Graph(n, tuple(edges))


def is_connected(g: Graph) -> bool:
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u in g.neighbors[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return len(seen) == g.n


def degrees(g: Graph) -> np.ndarray:
    return np.array([len(nb) for nb in g.neighbors], dtype=int)


GENERATORS = {
    "ring": ring,
    "path": path,
    "star": star,
    "complete": complete,
    "erdos_renyi": erdos_renyi_connected,
}
