"""Cop strategy for subdivisions whose every thread has length at least 2n."""

from __future__ import annotations

from typing import Any, Mapping

from robloc.engine import BaseStrategy
from robloc.errors import GraphError, StrategyError
from robloc.graph import Edge, Graph, SubdividedGraph, bits, subdivide
from robloc.scripted import Context, replay


def candidate_probes(s: SubdividedGraph, u: int, d_prime: int) -> list[int]:
    """The probe list used after probing ``u`` returned ``d_prime`` (> 0).

    For each base neighbour ``y`` of ``u`` in ascending order whose thread is long
    enough, the vertex at offset ``d_prime + n - 1`` from ``u`` on ``u...y``.
    """
    n = s.n
    reach = d_prime + n - 1
    return [
        s.thread_vertex(u, y, reach)
        for y in s.base.neighbors(u)
        if reach <= s.length(u, y)
    ]


def choose_pair(dists: list[int]) -> tuple[int, int]:
    """Ordered pair of distinct branch vertices minimizing ``(d_u, d_v)``; lowest ids on ties."""
    n = len(dists)
    return min(((u, v) for u in range(n) for v in range(n) if u != v),
               key=lambda p: (dists[p[0]], dists[p[1]], p))


class UnequalStrategy(BaseStrategy):
    name = "unequal"

    def __init__(self, s: SubdividedGraph) -> None:
        n = s.n
        for e, length in sorted(s.lengths.items()):
            if length < 2 * n:
                raise GraphError(f"edge {e} has length {length} < 2n = {2 * n}")
        self.s = s
        self._info: dict[Any, dict[str, Any]] = {}

    def initial_state(self):
        return ()

    def step(self, state, result, belief):
        results = state if result is None else state + (result,)
        out = replay(self.s, self._routine, self.s.all_mask, results)
        if out.probe is None:
            raise StrategyError(f"strategy ran out of probes with {belief.bit_count()} candidates left")
        if out.context.belief != belief:
            raise StrategyError("replayed belief disagrees with the engine")
        self._info[results] = {"tag": out.tag, "probes": out.context.probes}
        return results, out.probe

    def describe(self, state):
        return self._info.get(state, {})

    def _routine(self, ctx: Context):
        s = self.s
        n = s.n
        dists = []
        for x in range(n):
            dists.append((yield from ctx.probe(x, f"sweep:{x}")))
        u, v = choose_pair(dists)
        self._check_sweep_invariant(ctx, u, v)
        d = yield from ctx.probe(v, "probe-v")
        if d <= n:
            raise ctx.fail(f"probe of v returned {d} <= n but the robber is not located")
        d_prime = yield from ctx.probe(u, "probe-u")
        if d_prime == 0:
            raise ctx.fail("probe of u returned 0 but the robber is not located")
        stop_at = min(2 * (n - 1), d_prime + n - 1)
        cands = candidate_probes(s, u, d_prime)
        if len(cands) > n - 1:
            raise ctx.fail(f"{len(cands)} candidates exceeds n - 1")
        for i, p in enumerate(cands):
            r = yield from ctx.probe(p, f"scan:{i}")
            if r <= stop_at:
                raise ctx.fail(f"scan answer {r} <= {stop_at} but the robber is not located")
        raise ctx.fail("candidate scan exhausted without locating the robber")

    def _check_sweep_invariant(self, ctx: Context, u: int, v: int) -> None:
        """Every position possible at the next probe is on a thread at ``u``,
        reached from ``u`` along that thread, with nearest branch vertex ``u`` or ``v``."""
        s = self.s
        for p in bits(s.expand(ctx.belief)):
            if p == u:
                continue
            a, b, i = s.coords(p)
            if i == 0 or u not in (a, b):
                raise ctx.fail(f"{s.label(p)} is possible but not on a thread at u={u}")
            off = s.offset(u, p)
            if s.distance(u, p) != off:
                raise ctx.fail(f"shortest path from u to {s.label(p)} leaves its thread")
            other = b if a == u else a
            near = {u} if off < s.length(u, other) - off else (
                {other} if off > s.length(u, other) - off else {u, other})
            if not near & {u, v}:
                raise ctx.fail(f"nearest branch vertex of {s.label(p)} is neither u nor v")


def build_unequal_strategy(g: Graph, lengths: Mapping[Edge, int] | SubdividedGraph) -> UnequalStrategy:
    s = lengths if isinstance(lengths, SubdividedGraph) else subdivide(g, dict(lengths))
    return UnequalStrategy(s)
