"""Base graphs, matchings and implicit subdivisions with an exact distance oracle.

Vertices of a subdivided graph are dense integers.  Branch vertex ``b`` has id
``b``; the interior vertices of each thread follow, thread by thread, in
canonical edge order, so ``Inner(u, v, i)`` (``u < v``) sits at
``start[(u, v)] + i - 1``.  Laying threads out contiguously lets belief
expansion move along a thread with a single shift of the bitmask.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping

import numpy as np

from robloc.errors import GraphError

Edge = tuple[int, int]


def edge(u: int, v: int) -> Edge:
    """Canonical (sorted) form of an unordered pair."""
    return (u, v) if u < v else (v, u)


def bits(mask: int) -> Iterator[int]:
    """Yield the indices of the set bits of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def to_mask(vertices: Iterable[int]) -> int:
    mask = 0
    for x in vertices:
        mask |= 1 << x
    return mask


@dataclass(frozen=True)
class Graph:
    """A simple undirected graph on vertices ``0..n-1``."""

    n: int
    edges: tuple[Edge, ...]

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]) -> None:
        if n < 1:
            raise GraphError("graph needs at least one vertex")
        seen: set[Edge] = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"loop at vertex {u}")
            e = edge(u, v)
            if e in seen:
                raise GraphError(f"parallel edge {e}")
            seen.add(e)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(a) for a in adj)

    def neighbors(self, v: int) -> list[int]:
        return sorted(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def is_connected(self) -> bool:
        seen = {0}
        todo = [0]
        while todo:
            for w in self.adjacency[todo.pop()]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return len(seen) == self.n

    def relabel(self, perm: list[int]) -> Graph:
        """Graph with vertex ``v`` renamed ``perm[v]``."""
        return Graph(self.n, [(perm[u], perm[v]) for u, v in self.edges])


# Small named graphs used throughout the tests and the CLI.

def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def complete_bipartite(r: int, s: int) -> Graph:
    return Graph(r + s, [(i, r + j) for i in range(r) for j in range(s)])


def star_graph(leaves: int) -> Graph:
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def paw_graph() -> Graph:
    """Triangle with a pendant vertex."""
    return Graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])


@dataclass(frozen=True)
class Matching:
    graph: Graph
    edges: tuple[Edge, ...]

    def __init__(self, graph: Graph, edges: Iterable[tuple[int, int]]) -> None:
        es = tuple(sorted(edge(u, v) for u, v in edges))
        used: set[int] = set()
        for u, v in es:
            if not graph.has_edge(u, v):
                raise GraphError(f"matching edge ({u}, {v}) is not an edge of the graph")
            if u in used or v in used:
                raise GraphError(f"matching edges share a vertex at ({u}, {v})")
            used.update((u, v))
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "edges", es)

    @property
    def k(self) -> int:
        return len(self.edges)

    @cached_property
    def matched(self) -> frozenset[int]:
        return frozenset(x for e in self.edges for x in e)

    @cached_property
    def unmatched(self) -> tuple[int, ...]:
        """The vertices left uncovered (the set X)."""
        return tuple(v for v in range(self.graph.n) if v not in self.matched)

    def partner(self, v: int) -> int:
        for a, b in self.edges:
            if v == a:
                return b
            if v == b:
                return a
        raise GraphError(f"vertex {v} is unmatched")

    def edge_of(self, v: int) -> Edge:
        return edge(v, self.partner(v))

    def is_maximal(self) -> bool:
        x = set(self.unmatched)
        return not any(u in x and v in x for u, v in self.graph.edges)


def greedy_maximal_matching(g: Graph, order: Iterable[tuple[int, int]] | None = None) -> Matching:
    """Scan edges in ``order`` (default: canonical) and keep every edge that fits."""
    if not g.is_connected():
        raise GraphError("graph is not connected")
    chosen: list[Edge] = []
    used: set[int] = set()
    for u, v in (g.edges if order is None else order):
        if not g.has_edge(u, v):
            raise GraphError(f"({u}, {v}) is not an edge")
        if u not in used and v not in used:
            chosen.append(edge(u, v))
            used.update((u, v))
    # the order may omit edges; finish canonically so the result is maximal
    for u, v in g.edges:
        if u not in used and v not in used:
            chosen.append((u, v))
            used.update((u, v))
    return Matching(g, chosen)


def min_maximal_matching(g: Graph) -> Matching:
    """A maximal matching of minimum size, by exhaustive branch and bound.

    Any maximal matching extending the partial one must use an edge at one end
    of each still-uncovered edge, so we branch on those.  One matching edge can
    dominate at most two edges of a vertex-disjoint packing of uncovered edges,
    which gives the pruning bound.  Exponential; meant for small graphs.
    """
    if not g.is_connected():
        raise GraphError("graph is not connected")
    if not g.edges:
        return Matching(g, [])
    adj = g.adjacency
    best: list[Edge] = list(greedy_maximal_matching(g).edges)

    def lower_bound(used: set[int]) -> int:
        # every matching edge covers at most two edges of a disjoint packing
        # of uncovered edges
        packed: set[int] = set()
        count = 0
        for u, v in g.edges:
            if u in used or v in used or u in packed or v in packed:
                continue
            packed.update((u, v))
            count += 1
        return (count + 1) // 2

    def search(chosen: list[Edge], used: set[int]) -> None:
        nonlocal best
        free_edge = next(((u, v) for u, v in g.edges if u not in used and v not in used), None)
        if free_edge is None:
            if len(chosen) < len(best):
                best = list(chosen)
            return
        if len(chosen) + max(1, lower_bound(used)) >= len(best):
            return
        u, v = free_edge
        options = sorted({edge(x, w) for x in (u, v) for w in adj[x] if w not in used})
        for a, b in options:
            chosen.append((a, b))
            used.update((a, b))
            search(chosen, used)
            used.difference_update((a, b))
            chosen.pop()

    search([], set())
    return Matching(g, best)


_BRANCH_RE = re.compile(r"^b:(\d+)$")
_INNER_RE = re.compile(r"^i:(\d+)/(\d+)/(\d+)$")


@dataclass(frozen=True, eq=False)
class SubdividedGraph:
    """``G^{1/l}``: every base edge replaced by a path of length ``lengths[e]``.

    The graph is never materialized except on request (:meth:`explicit`), which
    exists to cross-check the distance oracle.
    """

    base: Graph
    lengths: Mapping[Edge, int]
    starts: dict[Edge, int] = field(repr=False)
    order: int

    def __init__(self, base: Graph, lengths: Mapping[Edge, int]) -> None:
        if not base.is_connected():
            raise GraphError("base graph is not connected")
        norm: dict[Edge, int] = {}
        for (u, v), length in lengths.items():
            e = edge(u, v)
            if not base.has_edge(*e):
                raise GraphError(f"length given for non-edge {e}")
            if int(length) != length or length < 1:
                raise GraphError(f"edge {e} has non-positive length {length}")
            norm[e] = int(length)
        missing = [e for e in base.edges if e not in norm]
        if missing:
            raise GraphError(f"no length for edges {missing}")
        starts: dict[Edge, int] = {}
        nxt = base.n
        for e in base.edges:
            starts[e] = nxt
            nxt += norm[e] - 1
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "lengths", norm)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "order", nxt)

    # -- vertex model -------------------------------------------------

    @property
    def n(self) -> int:
        return self.base.n

    def length(self, u: int, v: int) -> int:
        return self.lengths[edge(u, v)]

    @cached_property
    def constant_length(self) -> int | None:
        values = set(self.lengths.values())
        return values.pop() if len(values) == 1 else None

    def is_branch(self, x: int) -> bool:
        return 0 <= x < self.base.n

    @cached_property
    def _coords(self) -> list[tuple[int, int, int]]:
        """``(u, v, i)`` for each vertex; branch vertices are ``(b, b, 0)``."""
        out = [(b, b, 0) for b in range(self.base.n)]
        for e in self.base.edges:
            out.extend((e[0], e[1], i) for i in range(1, self.lengths[e]))
        return out

    def coords(self, x: int) -> tuple[int, int, int]:
        self._check(x)
        return self._coords[x]

    def thread_of(self, x: int) -> Edge | None:
        u, v, i = self.coords(x)
        return None if i == 0 else (u, v)

    def thread_vertex(self, u: int, v: int, i: int) -> int:
        """Vertex at distance ``i`` from ``u`` along the thread ``u...v``."""
        if not self.base.has_edge(u, v):
            raise GraphError(f"({u}, {v}) is not a base edge")
        length = self.length(u, v)
        if not 0 <= i <= length:
            raise GraphError(f"offset {i} outside thread of length {length}")
        if i == 0:
            return u
        if i == length:
            return v
        if u > v:
            u, v, i = v, u, length - i
        return self.starts[(u, v)] + i - 1

    def offset(self, end: int, x: int) -> int:
        """Offset of ``x`` from branch ``end`` along ``x``'s own thread."""
        u, v, i = self.coords(x)
        if i == 0:
            if x == end:
                return 0
            raise GraphError(f"branch vertex {x} is not {end}")
        if end == u:
            return i
        if end == v:
            return self.lengths[(u, v)] - i
        raise GraphError(f"vertex {self.label(x)} is not on a thread at {end}")

    def branch_distance(self, x: int) -> int:
        """Distance along its thread from ``x`` to its nearest thread end."""
        u, v, i = self.coords(x)
        return 0 if i == 0 else min(i, self.lengths[(u, v)] - i)

    def label(self, x: int) -> str:
        u, v, i = self.coords(x)
        return f"b:{u}" if i == 0 else f"i:{u}/{v}/{i}"

    def parse_vertex(self, text: str) -> int:
        text = text.strip()
        if mb := _BRANCH_RE.match(text):
            b = int(mb.group(1))
            if b >= self.base.n:
                raise GraphError(f"no branch vertex {b}")
            return b
        if mi := _INNER_RE.match(text):
            u, v, i = map(int, mi.groups())
            if not self.base.has_edge(u, v):
                raise GraphError(f"({u}, {v}) is not a base edge")
            if not 0 < i < self.length(u, v):
                raise GraphError(f"{text}: offset must be strictly inside the thread")
            return self.thread_vertex(u, v, i)
        raise GraphError(f"cannot parse vertex {text!r}")

    def _check(self, x: int) -> None:
        if not (isinstance(x, (int, np.integer)) and 0 <= x < self.order):
            raise GraphError(f"invalid vertex id {x!r}")

    # -- adjacency ----------------------------------------------------

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.order)]
        for u, v in self.base.edges:
            chain = [self.thread_vertex(u, v, i) for i in range(self.lengths[(u, v)] + 1)]
            for a, b in zip(chain, chain[1:]):
                adj[a].append(b)
                adj[b].append(a)
        return tuple(tuple(sorted(a)) for a in adj)

    def neighbors(self, x: int) -> tuple[int, ...]:
        self._check(x)
        return self.adjacency[x]

    def closed_neighbors(self, x: int) -> tuple[int, ...]:
        return tuple(sorted((x, *self.adjacency[x])))

    @cached_property
    def all_mask(self) -> int:
        return (1 << self.order) - 1

    @cached_property
    def branch_mask(self) -> int:
        return (1 << self.base.n) - 1

    @cached_property
    def _shift_masks(self) -> tuple[int, int]:
        """Inner vertices whose successor (resp. predecessor) on the thread is inner."""
        up = down = 0
        for e, start in self.starts.items():
            inner = self.lengths[e] - 1
            for j in range(inner):
                if j < inner - 1:
                    up |= 1 << (start + j)
                if j > 0:
                    down |= 1 << (start + j)
        return up, down

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        return tuple(to_mask(a) for a in self.adjacency)

    def expand(self, belief: int) -> int:
        """Closed neighbourhood of a vertex set given as a bitmask."""
        up, down = self._shift_masks
        out = belief | ((belief & up) << 1) | ((belief & down) >> 1)
        nbr = self.neighbor_masks
        for b in bits(belief & self.branch_mask):
            out |= nbr[b]
        for b in range(self.base.n):
            if belief & nbr[b]:
                out |= 1 << b
        return out

    # -- distances ----------------------------------------------------

    @cached_property
    def branch_distances(self) -> np.ndarray:
        """Weighted all-pairs distances between branch vertices (Floyd-Warshall)."""
        n = self.base.n
        inf = np.iinfo(np.int64).max // 4
        d = np.full((n, n), inf, dtype=np.int64)
        np.fill_diagonal(d, 0)
        for (u, v), length in self.lengths.items():
            d[u, v] = d[v, u] = min(d[u, v], length)
        for k in range(n):
            d = np.minimum(d, d[:, k, None] + d[None, k, :])
        return d

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """All-pairs distances from branch distances plus offset arithmetic."""
        coords = self._coords
        e1 = np.array([c[0] for c in coords])
        e2 = np.array([c[1] for c in coords])
        o1 = np.array([c[2] for c in coords])
        o2 = np.array([0 if c[2] == 0 else self.lengths[(c[0], c[1])] - c[2] for c in coords])
        bd = self.branch_distances
        best = None
        for ex, ox in ((e1, o1), (e2, o2)):
            for ey, oy in ((e1, o1), (e2, o2)):
                cand = ox[:, None] + bd[np.ix_(ex, ey)] + oy[None, :]
                best = cand if best is None else np.minimum(best, cand)
        assert best is not None
        for e, start in self.starts.items():
            stop = start + self.lengths[e] - 1
            idx = np.arange(1, self.lengths[e])
            direct = np.abs(idx[:, None] - idx[None, :])
            best[start:stop, start:stop] = np.minimum(best[start:stop, start:stop], direct)
        best = best.astype(np.int32)
        best.setflags(write=False)
        return best

    def distance(self, x: int, y: int) -> int:
        self._check(x)
        self._check(y)
        return int(self.distance_matrix[x, y])

    @cached_property
    def _classes(self) -> dict[int, dict[int, int]]:
        return {}

    def distance_classes(self, probe: int) -> dict[int, int]:
        """Map distance -> bitmask of the vertices at that distance from ``probe``."""
        cache = self._classes
        got = cache.get(probe)
        if got is None:
            self._check(probe)
            got = {}
            for x, d in enumerate(self.distance_matrix[probe].tolist()):
                got[d] = got.get(d, 0) | (1 << x)
            cache[probe] = got
        return got

    def refine(self, belief: int, probe: int, d: int) -> int:
        return belief & self.distance_classes(probe).get(d, 0)

    def explicit(self):
        """The subdivided graph materialized as a networkx graph (test oracle)."""
        import networkx as nx

        h = nx.Graph()
        h.add_nodes_from(range(self.order))
        for x, nbrs in enumerate(self.adjacency):
            h.add_edges_from((x, y) for y in nbrs)
        return h


def subdivide(g: Graph, lengths: Mapping[Edge, int] | int) -> SubdividedGraph:
    """Replace every edge of ``g`` with a path; an int means equal length ``m``."""
    if isinstance(lengths, int):
        if lengths < 1:
            raise GraphError(f"subdivision length must be positive, got {lengths}")
        lengths = {e: lengths for e in g.edges}
    return SubdividedGraph(g, lengths)


def parse_graph_text(text: str, source: str = "<graph>") -> tuple[Graph, dict[Edge, int] | None]:
    """Parse the graph text format.

    Line one holds ``n``; every other line is ``u v`` or ``u v L``.  ``#`` starts
    a comment.  Lengths must be given on every edge line or on none.
    """
    n: int | None = None
    edges: list[Edge] = []
    lengths: dict[Edge, int] = {}
    with_len = without_len = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise GraphError(f"{source}:{lineno}: expected integers, got {line!r}") from None
        if n is None:
            if len(nums) != 1 or nums[0] < 1:
                raise GraphError(f"{source}:{lineno}: first line must be the vertex count")
            n = nums[0]
            continue
        if len(nums) not in (2, 3):
            raise GraphError(f"{source}:{lineno}: expected 'u v' or 'u v L'")
        u, v = nums[0], nums[1]
        if u == v:
            raise GraphError(f"{source}:{lineno}: loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"{source}:{lineno}: vertex out of range 0..{n - 1}")
        e = edge(u, v)
        if e in lengths or e in edges:
            raise GraphError(f"{source}:{lineno}: repeated edge {e}")
        edges.append(e)
        if len(nums) == 3:
            if nums[2] < 1:
                raise GraphError(f"{source}:{lineno}: length must be positive")
            lengths[e] = nums[2]
            with_len += 1
        else:
            without_len += 1
    if n is None:
        raise GraphError(f"{source}: empty graph file")
    if with_len and without_len:
        raise GraphError(f"{source}: some edge lines carry lengths and some do not")
    g = Graph(n, edges)
    if not g.is_connected():
        raise GraphError(f"{source}: graph is not connected")
    return g, (lengths if with_len else None)


def format_graph_text(g: Graph, lengths: Mapping[Edge, int] | None = None) -> str:
    lines = [str(g.n)]
    for u, v in g.edges:
        lines.append(f"{u} {v}" if lengths is None else f"{u} {v} {lengths[(u, v)]}")
    return "\n".join(lines) + "\n"


def bfs_distances(s: SubdividedGraph, source: int) -> list[int]:
    """Plain breadth-first search over the adjacency lists."""
    dist = [-1] * s.order
    dist[source] = 0
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in s.adjacency[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist
