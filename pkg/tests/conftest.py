import numpy as np
import pytest
from hypothesis import settings, strategies as st

from ttextra.graph import degrees, erdos_renyi_connected
from ttextra.mixing import laplacian_based, metropolis

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@st.composite
def connected_graphs(draw, min_n=2, max_n=9):
    n = draw(st.integers(min_n, max_n))
    prob = draw(st.floats(0.05, 1.0))
    seed = draw(st.integers(0, 2**31 - 1))
    return erdos_renyi_connected(n, prob, seed)


@st.composite
def valid_mixing(draw, min_n=2, max_n=9):
    g = draw(connected_graphs(min_n, max_n))
    if draw(st.booleans()):
        return metropolis(g)
    extra = draw(st.floats(0.01, 3.0))
    return laplacian_based(g, float(degrees(g).max()) + extra)


def bfs_reachable(n, edges):
    adj = {v: set() for v in range(n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    seen, frontier = {0}, [0]
    while frontier:
        nxt = []
        for v in frontier:
            for u in adj[v] - seen:
                seen.add(u)
                nxt.append(u)
        frontier = nxt
    return seen


def central_diff_grad(fun, x, h=None):
    x = np.asarray(x, dtype=float)
    h = 1e-6 * (1 + np.linalg.norm(x)) if h is None else h
    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
