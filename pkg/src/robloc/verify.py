"""Exhaustive adversarial verification and the small-graph enumeration checks.

``adversarial_verify`` explores every robber play against a fixed deterministic
strategy.  A search node is ``(strategy state, belief, robber position)``.  The
strategy sees only the belief and its own state, so if a node repeats on the
current path the robber can walk the same loop forever: that is a proof of
evasion, not a heuristic.  Without repetition, every leaf is a capture and the
memoized maximum depth is the exact worst-case capture round.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterator

from robloc.engine import CopStrategy, Round
from robloc.errors import GraphError, ResourceLimit, StrategyError
from robloc.graph import (
    Graph,
    SubdividedGraph,
    complete_bipartite,
    complete_graph,
    min_maximal_matching,
)

DEFAULT_MAX_STATES = 10_000_000


@dataclass
class Verdict:
    kind: str  # AllCaptured | EvasionFound | StrategyErrorFound
    states_explored: int
    max_rounds: int | None = None
    max_probes_per_reduction: int | None = None
    witness: list[Round] | None = None
    loop_start: int | None = None
    error: str | None = None
    metrics: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.kind == "AllCaptured"

    def robber_script(self, repeats: int = 3) -> list[int]:
        """Robber positions reproducing the witness, looping it ``repeats`` times."""
        assert self.witness is not None
        path = [r.robber for r in self.witness]
        if self.loop_start is None:
            return path
        loop = path[self.loop_start:]
        return path + loop * repeats

    def to_json(self, s: SubdividedGraph | None = None) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": self.kind,
            "max_rounds": self.max_rounds,
            "max_probes_per_reduction": self.max_probes_per_reduction,
            "states_explored": self.states_explored,
        }
        if self.metrics:
            out["metrics"] = self.metrics
        if self.error:
            out["error"] = self.error
        if self.witness is not None:
            label = s.label if s is not None else str
            out["witness_trace"] = [
                {"round": r.round, "robber": label(r.robber), "probe": label(r.probe),
                 "dist": r.dist, "belief_size": r.belief_size}
                for r in self.witness
            ]
            out["loop_start"] = self.loop_start
        return out


class _Metrics:
    """Running maxima of the numbers strategies report through ``describe``."""

    def __init__(self) -> None:
        self.values: dict[str, int] = {}
        self.lemmas: dict[str, dict[str, int]] = {}

    def add(self, info: dict[str, Any]) -> None:
        for key, val in info.items():
            if key == "lemmas":
                for name, used, budget in val:
                    rec = self.lemmas.setdefault(name, {"max_used": 0, "max_excess": -10**9})
                    rec["max_used"] = max(rec["max_used"], used)
                    rec["max_excess"] = max(rec["max_excess"], used - budget)
            elif isinstance(val, int) and not isinstance(val, bool):
                self.values[key] = max(self.values.get(key, val), val)

    def as_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = dict(sorted(self.values.items()))
        if self.lemmas:
            out["lemmas"] = {k: self.lemmas[k] for k in sorted(self.lemmas)}
        return out


def adversarial_verify(
    s: SubdividedGraph,
    strategy: CopStrategy,
    bound: int = 100_000,
    max_states: int = DEFAULT_MAX_STATES,
) -> Verdict:
    """Decide whether ``strategy`` catches every robber on ``s``.

    ``bound`` caps the search depth in rounds; hitting it without a repeated
    node raises :class:`ResourceLimit` (inconclusive), which is distinct from a
    found evasion.
    """
    if s.order == 1:
        return Verdict("AllCaptured", 1, max_rounds=0)
    metrics = _Metrics()
    intern: dict[Hashable, int] = {}
    states: list[Hashable] = []
    probes: list[int] = []
    transitions: dict[tuple[int, int, int], int] = {}
    describe = getattr(strategy, "describe", None)

    def sid_of(state: Hashable, probe: int) -> int:
        key = (state, probe)
        sid = intern.get(key)
        if sid is None:
            sid = intern[key] = len(states)
            states.append(state)
            probes.append(probe)
            if describe is not None:
                metrics.add(describe(state))
        return sid

    def advance(sid: int, d: int, belief: int) -> int:
        key = (sid, d, belief)
        nxt = transitions.get(key)
        if nxt is None:
            state, probe = strategy.step(states[sid], d, belief)
            s.coords(probe)
            nxt = transitions[key] = sid_of(state, probe)
        return nxt

    dist = s.distance_matrix
    memo: dict[tuple[int, int, int], int] = {}
    on_path: dict[tuple[int, int, int], int] = {}
    # stack entries: [key, belief, reach, probe, moves iterator, best, incoming Round]
    stack: list[list[Any]] = []

    def witness() -> list[Round]:
        return [fr[6] for fr in stack if fr[6] is not None]

    def fail(kind: str, err: str | None = None, extra: Round | None = None, loop: int | None = None):
        w = witness()
        if extra is not None:
            w.append(extra)
        return Verdict(kind, len(memo) + len(on_path), witness=w, loop_start=loop,
                       error=err, metrics=metrics.as_dict())

    try:
        root_sid = sid_of(*strategy.step(strategy.initial_state(), None, s.all_mask))
    except StrategyError as exc:
        return fail("StrategyErrorFound", str(exc))
    everything = s.all_mask
    root = (root_sid, everything, -1)
    stack.append([root, everything, s.expand(everything), probes[root_sid],
                  iter(range(s.order)), 0, None])
    on_path[root] = 0
    result = 0
    while stack:
        frame = stack[-1]
        key, belief, reach, probe, moves, best, _ = frame
        pushed = False
        for y in moves:
            d = int(dist[probe, y])
            nb = s.refine(reach, probe, d)
            rnd = len(stack)
            step_round = Round(rnd, y, probe, d, nb.bit_count())
            if nb & (nb - 1) == 0:
                frame[5] = max(frame[5], 1)
                continue
            try:
                child_sid = advance(key[0], d, nb)
            except StrategyError as exc:
                return fail("StrategyErrorFound", str(exc), step_round)
            child = (child_sid, nb, y)
            got = memo.get(child)
            if got is not None:
                frame[5] = max(frame[5], got + 1)
                continue
            if child in on_path:
                return fail("EvasionFound", None, step_round, on_path[child])
            if len(stack) >= bound:
                raise ResourceLimit(f"search depth exceeded {bound} rounds without a repeat")
            if len(memo) >= max_states:
                raise ResourceLimit(f"verification budget of {max_states} states exhausted")
            on_path[child] = len(stack)
            cprobe = probes[child_sid]
            stack.append([child, nb, s.expand(nb), cprobe,
                          iter(s.closed_neighbors(y)), 0, step_round])
            pushed = True
            break
        if pushed:
            continue
        stack.pop()
        del on_path[key]
        value = frame[5]
        memo[key] = value
        if stack:
            parent = stack[-1]
            parent[5] = max(parent[5], value + 1)
        else:
            result = value
    info = metrics.as_dict()
    return Verdict(
        "AllCaptured",
        len(memo),
        max_rounds=result,
        max_probes_per_reduction=info.get("reduction_probes"),
        metrics=info,
    )


# -- small graph enumeration ---------------------------------------------

def _refine(adj: list[int], colors: list[int]) -> list[int]:
    """Colour refinement to a stable, label-independent ordered partition."""
    n = len(adj)
    while True:
        sig = [
            (colors[v], tuple(sorted(colors[w] for w in range(n) if adj[v] >> w & 1)))
            for v in range(n)
        ]
        order = sorted(set(sig))
        new = [order.index(x) for x in sig]
        if len(order) == len(set(colors)):
            return new
        colors = new


def canonical_form(g: Graph) -> tuple[int, ...]:
    """Lexicographically least adjacency code over refinement-respecting labelings.

    Individualize a vertex of the first non-singleton cell, refine, recurse;
    the minimum over all leaves is an isomorphism invariant.
    """
    n = g.n
    adj = [0] * n
    for u, v in g.edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    best: tuple[int, ...] | None = None

    def code(colors: list[int]) -> tuple[int, ...]:
        pos = colors  # discrete: colour is the new label
        rows = [0] * n
        for v in range(n):
            r = 0
            for w in range(n):
                if adj[v] >> w & 1:
                    r |= 1 << (n - 1 - pos[w])
            rows[pos[v]] = r
        return tuple(rows)

    def search(colors: list[int]) -> None:
        nonlocal best
        colors = _refine(adj, colors)
        if len(set(colors)) == n:
            c = code(colors)
            if best is None or c < best:
                best = c
            return
        counts: dict[int, int] = {}
        for c in colors:
            counts[c] = counts.get(c, 0) + 1
        target = min(c for c, k in counts.items() if k > 1)
        for v in range(n):
            if colors[v] == target:
                # v goes first within its cell; everything else keeps its order
                search([2 * c if c < target or u == v else 2 * c + 1 for u, c in enumerate(colors)])

    search([g.degree(v) for v in range(n)])
    assert best is not None
    return best


def graph_from_code(code: tuple[int, ...]) -> Graph:
    n = len(code)
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n) if code[i] >> (n - 1 - j) & 1])


def code_matrix(code: tuple[int, ...]) -> list[str]:
    n = len(code)
    return [format(r, f"0{n}b") for r in code]


def _all_graph_codes(v: int) -> list[tuple[int, ...]]:
    """Canonical codes of every graph (connected or not) on ``v`` vertices."""
    if v == 1:
        return [(0,)]
    out: set[tuple[int, ...]] = set()
    for code in _all_graph_codes(v - 1):
        base = graph_from_code(code)
        for subset in range(1 << (v - 1)):
            extra = [(u, v - 1) for u in range(v - 1) if subset >> u & 1]
            out.add(canonical_form(Graph(v, list(base.edges) + extra)))
    return sorted(out)


MAX_ENUMERATION_VERTICES = 8


def enumerate_connected_graphs(v: int, dedupe: bool = True) -> Iterator[Graph]:
    """Connected graphs on ``v`` labelled vertices, optionally one per iso class."""
    if not 1 <= v <= MAX_ENUMERATION_VERTICES:
        raise GraphError(f"enumeration supports 1..{MAX_ENUMERATION_VERTICES} vertices, got {v}")
    if dedupe:
        for code in _all_graph_codes(v):
            g = graph_from_code(code)
            if g.is_connected():
                yield g
        return
    pairs = list(itertools.combinations(range(v), 2))
    for subset in range(1 << len(pairs)):
        g = Graph(v, [p for i, p in enumerate(pairs) if subset >> i & 1])
        if g.is_connected():
            yield g


def classify(g: Graph) -> str:
    """Name the graph when it is complete or balanced complete bipartite."""
    n, e = g.n, len(g.edges)
    if e == n * (n - 1) // 2:
        return f"K_{n}"
    if n % 2 == 0:
        r = n // 2
        if canonical_form(g) == canonical_form(complete_bipartite(r, r)):
            return f"K_{{{r},{r}}}"
    return "other"


def check_mmm_lemma(r: int) -> dict[str, Any]:
    """Connected graphs on ``2r`` vertices whose smallest maximal matching is perfect.

    The structural claim is that these are exactly ``K_{2r}`` and ``K_{r,r}``.
    """
    if not 1 <= r <= MAX_ENUMERATION_VERTICES // 2:
        raise GraphError(f"r must be in 1..{MAX_ENUMERATION_VERTICES // 2}")
    extremal = []
    total = 0
    for g in enumerate_connected_graphs(2 * r):
        total += 1
        if min_maximal_matching(g).k == r:
            extremal.append({
                "name": classify(g),
                "edges": [list(e) for e in g.edges],
                "adjacency": code_matrix(canonical_form(g)),
            })
    expected = {canonical_form(complete_graph(2 * r)), canonical_form(complete_bipartite(r, r))}
    found = {tuple(int(row, 2) for row in e["adjacency"]) for e in extremal}
    return {
        "r": r,
        "vertices": 2 * r,
        "graphs_checked": total,
        "extremal": extremal,
        "holds": found == expected,
    }

