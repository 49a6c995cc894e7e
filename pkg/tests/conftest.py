import random

import pytest
from hypothesis import strategies as st

from robloc.graph import Graph


def random_connected_graph(rng: random.Random, n: int, p: float = 0.4) -> Graph:
    """A random spanning tree plus independent extra edges, so always connected."""
    edges = set()
    for v in range(1, n):
        edges.add((rng.randrange(v), v))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.add((u, v))
    return Graph(n, edges)


@st.composite
def connected_graphs(draw, min_n=1, max_n=6):
    n = draw(st.integers(min_n, max_n))
    parents = [draw(st.integers(0, v - 1)) for v in range(1, n)]
    edges = {(p, v) for v, p in enumerate(parents, 1)}
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    extra = draw(st.lists(st.sampled_from(pairs), max_size=len(pairs))) if pairs else []
    return Graph(n, edges | set(extra))


@st.composite
def subdivision_specs(draw, max_n=5, max_len=4):
    g = draw(connected_graphs(max_n=max_n))
    lengths = {e: draw(st.integers(1, max_len)) for e in g.edges}
    return g, lengths


@pytest.fixture
def rng():
    return random.Random(20240611)
