"""Cop strategy for equal subdivisions ``G^{1/m}`` driven by a maximal matching.

Outline.  Probe branch vertices round-robin until an answer that is a multiple
of ``m`` shows the robber standing on a branch vertex.  From then on the cop
always knows, right after some probe, a set ``A ∪ Y`` of branch vertices
holding the robber (``A`` matched, ``Y`` unmatched), and each *reduction*
shrinks that set by the time the robber next stands on a branch vertex:

* case I   (``A`` empty): probe next to some ``y ∈ Y``;
* case II  (``A`` is one matched vertex or one matching edge): probe two steps
  along that edge;
* case III (otherwise): probe some ``a ∈ A`` and then sweep the matching edges.

Sub-routines (named by their role):

* ``astar(u, Z)``: robber on a thread between ``u`` and ``Z ⊆ X``; probe ``Z``.
* ``noturnback(v, W)``: robber adjacent to an unknown branch vertex ``x``;
  probe ``v`` then each edge of ``W`` (midpoint, or both ends when the robber
  might be on a branch vertex).
* ``gamma(Z, a)``: robber one step from ``Z`` heading to ``V(M) - {a}``.
* ``delta(a)``: robber one step from ``a`` on a thread not leading to ``a'``.

Every branch of the case analysis checks the engine's belief, so a reading of
the argument that does not hold on some robber play surfaces as
:class:`StrategyError` instead of a silently wrong probe.
"""

from __future__ import annotations

from typing import Any, Iterable

from robloc.engine import BaseStrategy
from robloc.errors import GraphError, StrategyError
from robloc.graph import Edge, Graph, Matching, bits, subdivide, to_mask
from robloc.scripted import Context, replay

MIN_LENGTH = 12


class MatchingStrategy(BaseStrategy):
    name = "matching"

    def __init__(self, g: Graph, matching: Matching, m: int) -> None:
        if matching.graph != g:
            raise GraphError("matching belongs to a different graph")
        if not matching.is_maximal():
            raise GraphError("matching is not maximal")
        if g.n > 1 and not g.edges:
            raise GraphError("graph has no edges")
        k = matching.k
        if m < k + 1:
            raise GraphError(f"m >= k+1 violated: m={m}, k={k}")
        if m < MIN_LENGTH:
            raise GraphError(f"m >= {MIN_LENGTH} violated: m={m}")
        self.g = g
        self.M = matching
        self.k = k
        self.m = m
        self.t = (m - 1) // 2 if m % 2 else None
        self.X = tuple(matching.unmatched)
        self.x_mask = to_mask(self.X)
        self.s = subdivide(g, m)
        self.n = g.n
        self._info: dict[Any, dict[str, Any]] = {}

    # -- strategy contract ----------------------------------------------

    def initial_state(self):
        return ("sweep", 0)

    def step(self, state, result, belief):
        s = self.s
        kind = state[0]
        if kind == "sweep":
            if result is None:
                return self._emit(("sweep", 0), 0, {"tag": "sweep:b:0"})
            if belief & ~s.branch_mask == 0:
                return self._start_reduction(1, belief)
            end = self._single_thread_end(s.expand(belief))
            if end is not None:
                return self._emit(("endgame", end), end, {"tag": "sweep:thread-end"})
            cursor = (state[1] + 1) % self.n
            return self._emit(("sweep", cursor), cursor, {"tag": f"sweep:b:{cursor}"})
        if kind == "endgame":
            raise StrategyError("probing an end of the robber's only possible thread did not locate him")
        _, count, anchor, results = state
        results = results + (result,)
        out = replay(s, lambda ctx: self._reduction(ctx, anchor), anchor, results,
                     max_probes=self.n + 2)
        if out.context.belief != belief:
            raise StrategyError("replayed belief disagrees with the engine")
        if out.probe is None:
            self._check_measure(anchor, belief)
            return self._start_reduction(count + 1, belief)
        info = {"tag": out.tag, "reduction_probes": out.context.probes,
                "reductions": count, "lemmas": out.usage}
        return self._emit(("reduce", count, anchor, results), out.probe, info)

    def describe(self, state):
        return self._info.get(state, {})

    def _emit(self, state, probe, info):
        self._info[state] = info
        return state, probe

    def _start_reduction(self, count: int, anchor: int):
        if count > self.n - 1:
            raise StrategyError(f"reduction {count} exceeds the limit of n-1 = {self.n - 1}")
        out = replay(self.s, lambda ctx: self._reduction(ctx, anchor), anchor, (),
                     max_probes=self.n + 2)
        if out.probe is None:
            raise StrategyError("reduction finished without probing")
        info = {"tag": out.tag, "reduction_probes": out.context.probes,
                "reductions": count, "lemmas": out.usage}
        return self._emit(("reduce", count, anchor, ()), out.probe, info)

    def _single_thread_end(self, reach: int) -> int | None:
        """Lower end of the one closed thread containing ``reach``, if there is one."""
        s = self.s
        inner = reach & ~s.branch_mask
        threads = {s.thread_of(x) for x in bits(inner)}
        if len(threads) != 1:
            return None
        (u, v), = threads
        if reach & s.branch_mask & ~((1 << u) | (1 << v)):
            return None
        return u

    def split(self, anchor: int) -> tuple[frozenset[int], frozenset[int]]:
        """``(A, Y)``: the matched and unmatched parts of a branch-vertex belief."""
        vs = set(bits(anchor))
        return frozenset(vs & self.M.matched), frozenset(vs - self.M.matched)

    def case_of(self, anchor: int) -> str:
        a_set, _ = self.split(anchor)
        if not a_set:
            return "I"
        if len(a_set) == 1 or (len(a_set) == 2 and self.M.partner(min(a_set)) == max(a_set)):
            return "II"
        return "III"

    def _check_measure(self, old: int, new: int) -> None:
        before, after = self.case_of(old), self.case_of(new)
        a0, y0 = self.split(old)
        a1, y1 = self.split(new)
        ok = (
            (before == "I" and after == "I" and y1 < y0)
            or (before == "II" and after == "I")
            or (before == "III" and after in ("I", "II"))
            or (before == "III" and after == "III" and a1 < a0 and y1 <= y0)
        )
        if not ok:
            raise StrategyError(
                f"reduction from case {before} {sorted(a0)}|{sorted(y0)} to case {after} "
                f"{sorted(a1)}|{sorted(y1)} does not shrink the candidate set"
            )

    # -- vertex helpers -------------------------------------------------

    def on(self, u: int, v: int, i: int) -> int:
        return self.s.thread_vertex(u, v, i)

    def midpoint(self, w: int, w2: int) -> int:
        lo, hi = min(w, w2), max(w, w2)
        return self.on(lo, hi, self.m // 2 if self.t is None else self.t)

    def off_midpoint(self, w: int, w2: int) -> int:
        lo, hi = min(w, w2), max(w, w2)
        assert self.t is not None
        return self.on(lo, hi, self.t - 1)

    def other_edges(self, *exclude: Edge) -> list[Edge]:
        return [e for e in self.M.edges if e not in exclude]

    # -- belief predicates -----------------------------------------------

    def at_branch(self, b: int) -> bool:
        return b & ~self.s.branch_mask == 0

    def threads(self, b: int) -> set[Edge]:
        s = self.s
        return {s.thread_of(x) for x in bits(b & ~s.branch_mask)}

    def meets(self, b: int, ends: Iterable[int]) -> str:
        """Whether the robber's thread has an end in ``ends``: yes, no or mixed."""
        ends = set(ends)
        hits = {bool(ends & set(e)) for e in self.threads(b)}
        if hits == {True}:
            return "yes"
        if hits == {False}:
            return "no"
        return "mixed"

    def branch_distances(self, b: int) -> set[int]:
        s = self.s
        return {s.branch_distance(x) for x in bits(b)}

    def far_from(self, b: int, targets: Iterable[int], r: int) -> bool:
        """Every candidate is at distance at least ``r`` from every target."""
        s = self.s
        return all(s.distance(x, y) >= r for x in bits(b) for y in targets)

    def within_threads(self, b: int, left: Iterable[int], right: Iterable[int]) -> bool:
        """Every candidate lies inside a thread from ``left`` to ``right``."""
        left, right = set(left), set(right)
        if b & self.s.branch_mask:
            return False
        return all((u in left and v in right) or (v in left and u in right)
                   for u, v in self.threads(b))

    # -- generic moves ---------------------------------------------------

    def capture(self, ctx: Context, seq: Iterable[int], tag: str):
        """Probe ``seq`` in order; the argument says this must locate the robber."""
        for i, p in enumerate(seq):
            yield from ctx.probe(p, f"{tag}:{i}")
        raise ctx.fail(f"{tag}: probe sequence did not locate the robber")

    def scan(self, ctx: Context, candidates: Iterable[int], tag: str):
        """Probe ``candidates`` in turn until the robber stands on a branch vertex."""
        for p in sorted(set(candidates)):
            if self.at_branch(ctx.belief):
                return
            yield from ctx.probe(p, f"{tag}:{p}")
        if not self.at_branch(ctx.belief):
            raise ctx.fail(f"{tag}: scan ended with the robber off the branch vertices")

    def require_in(self, ctx: Context, target: int, what: str) -> None:
        b = ctx.belief
        if b & ~target:
            raise ctx.fail(f"expected the robber in {what}")

    # -- reductions ------------------------------------------------------

    def _reduction(self, ctx: Context, anchor: int):
        a_set, y_set = self.split(anchor)
        case = self.case_of(anchor)
        if case == "I":
            yield from self.case_one(ctx, y_set)
        elif case == "II":
            yield from self.case_two(ctx, a_set, y_set)
        else:
            yield from self.case_three(ctx, a_set, y_set)
        if not self.at_branch(ctx.belief):
            raise ctx.fail("reduction ended with the robber off the branch vertices")

    def case_one(self, ctx: Context, y_set: frozenset[int]):
        m = self.m
        y = min(y_set)
        a = min(self.g.neighbors(y))
        d = yield from ctx.probe(self.on(y, a, 1), "I:next-to-y")
        rest = y_set - {y}
        if d in (0, 1):
            raise ctx.fail("I: expected capture")
        if d == 2:
            yield from self.gamma(ctx, frozenset({y}), a)
        elif d == 2 * m - 2:
            yield from self.astar(ctx, a, rest)
        elif d % m in (1, m - 1):
            self.require_in(ctx, to_mask(rest), "Y - {y}")
        elif d > 2 * m - 2 and d % m in (0, 2, m - 2):
            yield from self.gamma(ctx, rest, a)
        else:
            raise ctx.fail(f"I: answer {d} is outside the case analysis")

    def case_two(self, ctx: Context, a_set: frozenset[int], y_set: frozenset[int]):
        m = self.m
        a = min(a_set)
        a2 = self.M.partner(a)
        d = yield from ctx.probe(self.on(a, a2, 2), "II:two-from-a")
        if d in (1, 2, m - 3, m - 2):
            raise ctx.fail("II: expected capture")
        if d == 3:
            yield from self.delta(ctx, a)
        elif d == m - 1:
            yield from self.delta(ctx, a2)
        elif d == m + 1:
            yield from self.astar(ctx, a, y_set)
        elif d > m + 1 and d % m in (2, m - 2):
            self.require_in(ctx, to_mask(y_set), "Y")
        elif d > m + 1:
            yield from self.gamma(ctx, y_set, a)
        else:
            raise ctx.fail(f"II: answer {d} is outside the case analysis")

    def case_three(self, ctx: Context, a_set: frozenset[int], y_set: frozenset[int]):
        m, s = self.m, self.s
        first = next(e for e in self.M.edges if set(e) & a_set)
        a = min(set(first) & a_set)
        a2 = self.M.partner(a)
        d = yield from ctx.probe(a, "III:a")
        if d == 0:
            raise ctx.fail("III: expected capture")
        if d % m == 0:
            self.require_in(ctx, to_mask((a_set | y_set) - {a}), "A ∪ Y - {a}")
            return
        b, b2 = next(e for e in self.M.edges if e != first)
        stages = self.other_edges(first, (b, b2))
        probed: list[tuple[int, ...]] = [(a,)]

        def interrupt(stage: int, _: tuple[int, ...]) -> bool:
            probed.append((a2,) if stage == 0 else stages[stage - 1])
            return bool(self._case_three_plan(ctx, probed))

        reason, _ = yield from self.noturnback(ctx, a2, stages, interrupt, "III")
        if reason == "branch":
            self.require_in(ctx, to_mask(a_set | y_set), "A ∪ Y")
            return
        if reason == "stop":
            seq = self._case_three_plan(ctx, probed)
            yield from self.capture(ctx, seq, "III:interrupt")
        yes = [p for p in probed if self.meets(ctx.belief, p) == "yes"]
        bb = (b, b2)
        if not yes:
            # (a): both ends among b, b' and X
            if not self.within_threads(ctx.belief, bb + self.X, bb + self.X):
                raise ctx.fail("III(a): thread ends outside {b, b'} ∪ X")
            yield from self.scan(ctx, bb + self.X, "III(a):scan")
            return
        if len(yes) > 1:
            raise ctx.fail("III: several probed sets meet the thread")
        c = yes[0][0]
        c2 = self.M.partner(c)
        if not self.within_threads(ctx.belief, (c, c2), bb + self.X):
            raise ctx.fail("III(b): thread does not run from {c, c'} to {b, b'} ∪ X")
        b_mask = ctx.belief
        if min(self.branch_distances(b_mask)) >= 2:
            yield from ctx.probe(self.midpoint(b, b2), "III(b):mid-bb'")
            status = self.meets(ctx.belief, bb)
            if status == "yes":
                if self.far_from(ctx.belief, bb, 2):
                    yield from self.capture(ctx, (c, b, b2), "III(b):c-b-b'")
                elif self.far_from(ctx.belief, (c, c2), 2):
                    yield from self.capture(ctx, (b, c, c2), "III(b):b-c-c'")
                raise ctx.fail("III(b): robber may be near both ends")
            if status == "no":
                yield from self.scan(ctx, (c, c2) + self.X, "III(b):scan")
                return
            raise ctx.fail("III(b): midpoint answer leaves the b-side open")
        if max(self.branch_distances(b_mask)) > 2:
            raise ctx.fail("III(b): last answer neither near nor far from a branch vertex")
        d = yield from ctx.probe(self.on(b, b2, 3), "III(b):three-from-b")
        if d in (3, m - 3):
            raise ctx.fail("III(b): expected capture")
        if d > 3 and d % m in (3, m - 3):
            self.require_in(ctx, to_mask((c, c2) + self.X), "{c, c'} ∪ X")
            return
        if d in (4, 5, 6, m + 1, m + 2, m - 2, m - 1):
            yield from self.capture(ctx, (c,), "III(b):c")
        if d == m:
            yield from self.capture(ctx, (b, c), "III(b):b-c")
        yield from ctx.probe(b2, "III(b):b'")
        status = self.meets(ctx.belief, (b2,))
        if status == "yes":
            yield from self.capture(ctx, (c,), "III(b):c")
        if status == "no" or self.at_branch(ctx.belief):
            yield from self.scan(ctx, (c, c2) + self.X, "III(b):scan")
            return
        raise ctx.fail(f"III(b): answer {d} at b' leaves the thread open")

    def _case_three_plan(self, ctx: Context, probed: list[tuple[int, ...]]) -> list[int] | None:
        """Probe sequence for an interrupt of case III, or ``None`` to keep going."""
        b = ctx.belief
        threads = self.threads(b)
        if b & self.s.branch_mask:
            return None
        if len(threads) == 1:
            (u, _), = threads
            return [u]
        status = [(p, self.meets(b, p)) for p in probed]
        if any(st == "mixed" for _, st in status):
            raise ctx.fail("III: a probed set neither meets nor misses the thread")
        yes = [p for p, st in status if st == "yes"]
        singles = [p for p in yes if len(p) == 1]
        pairs = [p for p in yes if len(p) == 2]
        if singles and pairs:
            (x,), (w, _) = singles[0], pairs[0]
            return [w, x]
        if len(pairs) >= 2:
            (wi, wi2), (wj, wj2) = pairs[0], pairs[1]
            if self.far_from(b, (wj, wj2), 3):
                return [wi, wj, wj2]
            if self.far_from(b, (wi, wi2), 3):
                return [wj, wi, wi2]
            raise ctx.fail("III: robber may be near both matched edges")
        return None

    # -- sub-routines ----------------------------------------------------

    def astar(self, ctx: Context, u: int, z_set: Iterable[int]):
        z_set = frozenset(z_set)
        s = self.s
        if not self.within_threads(ctx.belief & ~s.branch_mask, (u,), z_set) or (
            ctx.belief & s.branch_mask & ~to_mask(z_set | {u})
        ):
            raise ctx.fail("astar: robber not known to be between u and Z")
        with ctx.budget("astar", len(z_set)):
            for z in sorted(z_set):
                if not self.g.has_edge(u, z):
                    continue
                d = yield from ctx.probe(z, f"astar:{z}")
                if self.at_branch(ctx.belief):
                    self.require_in(ctx, to_mask(z_set), "Z")
                    return
                if d < self.m:
                    raise ctx.fail("astar: expected capture")
        raise ctx.fail("astar: Z exhausted before the robber was placed")

    def noturnback(self, ctx: Context, v: int, stages: list[Edge], stop, tag: str):
        """Probe ``v`` then each staged edge; returns ``(reason, stage)``.

        ``reason`` is ``"branch"`` when the robber is seen on a branch vertex,
        ``"stop"`` when ``stop(stage, set)`` asks to interrupt, else ``"done"``.
        """
        s, m = self.s, self.m
        b = ctx.belief
        if b & s.branch_mask or any(s.branch_distance(x) != 1 for x in bits(b)):
            raise ctx.fail("noturnback: robber not known to be next to a branch vertex")
        # candidates for the robber's position, per choice of the starting vertex x
        track = {x: b & s.neighbor_masks[x] for x in range(self.n) if b & s.neighbor_masks[x]}

        def after_probe() -> bool:
            nonlocal track
            cur = ctx.belief
            track = {x: s.expand(mask) & cur for x, mask in track.items()}
            track = {x: mask for x, mask in track.items() if mask}
            if cur & s.branch_mask:
                if not self.at_branch(cur):
                    raise ctx.fail("noturnback: branch vertex possible but not identified")
                for x, mask in track.items():
                    if mask & s.branch_mask & ~(1 << x):
                        raise ctx.fail("noturnback: robber reached a branch vertex other than x")
                return True
            return False

        limit = max(2 * self.k - 3, 0)
        with ctx.budget("noturnback", limit):
            yield from ctx.probe(v, f"{tag}:noturnback:v")
            if after_probe():
                return "branch", 0
            if stop(0, (v,)):
                return "stop", 0
            for i, (w, w2) in enumerate(stages, 1):
                if s.expand(ctx.belief) & s.branch_mask:
                    for p in (w, w2):
                        yield from ctx.probe(p, f"{tag}:noturnback:{i}:end")
                        if after_probe():
                            return "branch", i
                else:
                    use_off = (
                        self.t is not None and m == self.k + 1 and i == self.t
                        and self._distance_possible(track, self.t + 1)
                        and self._distance_possible(track, self.t - 1)
                    )
                    p = self.off_midpoint(w, w2) if use_off else self.midpoint(w, w2)
                    yield from ctx.probe(p, f"{tag}:noturnback:{i}:{'off' if use_off else 'mid'}")
                    if after_probe():
                        return "branch", i
                if stop(i, (w, w2)):
                    return "stop", i
        return "done", len(stages)

    def _distance_possible(self, track: dict[int, int], r: int) -> bool:
        s = self.s
        return any(s.distance(x, y) == r for x, mask in track.items() for y in bits(mask))

    def gamma(self, ctx: Context, z_set: frozenset[int], a: int):
        m = self.m
        a2 = self.M.partner(a)
        z_mask = to_mask(z_set)
        with ctx.budget("gamma", 2 * self.k - 2 + len(z_set)):
            if self.k == 1:
                yield from self.astar(ctx, a2, z_set)
                return
            aa = self.M.edge_of(a)
            bb = next(e for e in self.M.edges if e != aa)
            stages = self.other_edges(aa, bb)

            def stop(stage: int, probed: tuple[int, ...]) -> bool:
                return self.meets(ctx.belief, probed) == "yes"

            reason, stage = yield from self.noturnback(ctx, a2, stages, stop, "gamma")
            if reason == "branch":
                self.require_in(ctx, z_mask, "Z")
                return
            if reason == "stop":
                c, c2 = (a2, a) if stage == 0 else stages[stage - 1]
            else:
                c, c2 = bb
            if not self.within_threads(ctx.belief, z_set, (c, c2)):
                raise ctx.fail("gamma: robber not known to be between Z and {c, c'}")
            dists = self.branch_distances(ctx.belief)
            if min(dists) >= 2:
                d = yield from ctx.probe(c, "gamma:c")
                if d < m:
                    yield from self.astar(ctx, c, z_set)
                elif d > m and d % m:
                    yield from self.astar(ctx, c2, z_set)
                else:
                    raise ctx.fail(f"gamma: answer {d} at c is outside the case analysis")
                return
            if max(dists) > 2:
                raise ctx.fail("gamma: last answer neither near nor far from a branch vertex")
            d = yield from ctx.probe(self.on(c, c2, 4), "gamma:four-from-c")
            if d in (m + 4, 2 * m - 4):
                self.require_in(ctx, z_mask, "Z")
            elif d in (4, m - 4):
                raise ctx.fail("gamma: expected capture")
            elif d in (5, 6, 7, m + 1, m + 2, m + 3):
                yield from self.astar(ctx, c, z_set)
            elif d in (m - 3, m - 2, m - 1, m + 5, m + 6, m + 7, 2 * m - 7, 2 * m - 6, 2 * m - 5):
                yield from self.astar(ctx, c2, z_set)
            else:
                raise ctx.fail(f"gamma: answer {d} is outside the case analysis")

    def delta(self, ctx: Context, a: int):
        m, s = self.m, self.s
        x_set = frozenset(self.X)
        with ctx.budget("delta", 2 * self.k - 2 + len(x_set)):
            if self.k == 1:
                yield from self.astar(ctx, a, x_set)
                return
            aa = self.M.edge_of(a)
            b, b2 = next(e for e in self.M.edges if e != aa)
            stages = self.other_edges(aa, (b, b2))

            def stop(stage: int, probed: tuple[int, ...]) -> bool:
                return self.meets(ctx.belief, probed) == "yes"

            reason, stage = yield from self.noturnback(ctx, b, stages, stop, "delta")
            if reason == "branch":
                self.require_in(ctx, self.x_mask, "X")
                return
            if reason == "stop":
                if len(self.threads(ctx.belief)) == 1:
                    (u, _), = self.threads(ctx.belief)
                    yield from self.capture(ctx, (u,), "delta:thread-end")
                w = b if stage == 0 else stages[stage - 1][0]
                yield from ctx.probe(w, "delta:w")
                if len(self.threads(ctx.belief)) == 1 and not ctx.belief & s.branch_mask:
                    yield from self.capture(ctx, (a,), "delta:a")
                raise ctx.fail("delta: probing w did not pin the thread")
            if not self.g.has_edge(a, b2):
                yield from self.astar(ctx, a, x_set)
                return
            dists = self.branch_distances(ctx.belief)
            if min(dists) >= 2:
                d = yield from ctx.probe(b2, "delta:b'")
                if d < m:
                    raise ctx.fail("delta: expected capture")
                yield from self.astar(ctx, a, x_set)
                return
            if max(dists) > 2:
                raise ctx.fail("delta: last answer neither near nor far from a branch vertex")
            d = yield from ctx.probe(self.on(a, b2, 3), "delta:three-from-a")
            if d in (3, m - 3, 0, 1, 2, m - 6, m - 5, m - 4):
                raise ctx.fail("delta: expected capture")
            if d == m + 3:
                self.require_in(ctx, self.x_mask, "X")
            elif d in (4, 5, 6, m, m + 1, m + 2):
                yield from self.astar(ctx, a, x_set)
            else:
                raise ctx.fail(f"delta: answer {d} is outside the case analysis")


def build_matching_strategy(g: Graph, matching: Matching, m: int) -> MatchingStrategy:
    return MatchingStrategy(g, matching, m)


def matching_report(g: Graph, matching: Matching) -> dict[str, Any]:
    """Summary used by the ``mmm`` command."""
    return {
        "n": g.n,
        "k": matching.k,
        "matching": [list(e) for e in matching.edges],
        "unmatched": list(matching.unmatched),
        "maximal": matching.is_maximal(),
        "min_m": max(matching.k + 1, MIN_LENGTH),
    }
