"""Exact locatability by a least fixpoint over reachable beliefs.

The cop wins from a belief ``B`` (taken right after a probe) when ``|B| = 1``,
or when some probe splits ``expand(B)`` into distance classes that are all
winning.  Beliefs reachable from the full vertex set are discovered forward;
ranks are then propagated backward, attractor style, so that a belief's rank is
the worst-case number of further rounds the cop needs under optimal play.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any

from robloc.engine import BaseStrategy
from robloc.errors import ResourceLimit, RobLocError, StrategyError
from robloc.graph import SubdividedGraph, bits

DEFAULT_MAX_VERTICES = 64
DEFAULT_MAX_STATES = 2_000_000


@dataclass
class SolveResult:
    locatable: bool
    capture_bound: int | None
    states_explored: int
    # solver tables, kept for strategy extraction and certificates
    rank: dict[int, int] = field(default_factory=dict, repr=False)
    explored: list[int] = field(default_factory=list, repr=False)
    graph: SubdividedGraph | None = field(default=None, repr=False)

    def to_json(self) -> dict[str, Any]:
        return {
            "locatable": self.locatable,
            "capture_bound": self.capture_bound,
            "states_explored": self.states_explored,
        }


def split(s: SubdividedGraph, reach: int, probe: int) -> list[int]:
    """Nonempty distance classes of ``reach`` under ``probe``."""
    return [reach & m for m in s.distance_classes(probe).values() if reach & m]


def decide_locatable(
    s: SubdividedGraph,
    max_vertices: int = DEFAULT_MAX_VERTICES,
    max_states: int = DEFAULT_MAX_STATES,
) -> SolveResult:
    if s.order > max_vertices:
        raise ResourceLimit(
            f"{s.order} vertices exceeds the exact-solver limit of {max_vertices}; "
            "raise it explicitly to proceed"
        )
    start = s.all_mask
    if s.order == 1:
        return SolveResult(True, 0, 1, {start: 0}, [start], s)

    index: dict[int, int] = {start: 0}
    beliefs = [start]
    # options[i]: distinct child tuples (non-singleton classes) over all probes
    options: list[list[tuple[int, ...]]] = []
    i = 0
    while i < len(beliefs):
        reach = s.expand(beliefs[i])
        seen: set[tuple[int, ...]] = set()
        for p in range(s.order):
            kids = []
            for cls in split(s, reach, p):
                if cls.bit_count() < 2:
                    continue
                j = index.get(cls)
                if j is None:
                    j = index[cls] = len(beliefs)
                    beliefs.append(cls)
                    if len(beliefs) > max_states:
                        raise ResourceLimit(f"belief budget of {max_states} states exhausted")
                kids.append(j)
            seen.add(tuple(sorted(set(kids))))
        options.append(sorted(seen))
        i += 1

    # backward propagation in rank order
    parents: dict[int, list[tuple[int, int]]] = defaultdict(list)
    pending: list[list[int]] = []
    rank: dict[int, int] = {}
    frontier: list[int] = []
    for b, opts in enumerate(options):
        counts = []
        for o, kids in enumerate(opts):
            counts.append(len(kids))
            for c in kids:
                parents[c].append((b, o))
            if not kids and b not in rank:
                rank[b] = 1
                frontier.append(b)
        pending.append(counts)
    level = 1
    while frontier:
        nxt: list[int] = []
        for c in frontier:
            for b, o in parents[c]:
                pending[b][o] -= 1
                if pending[b][o] == 0 and b not in rank:
                    rank[b] = level + 1
                    nxt.append(b)
        frontier = nxt
        level += 1

    by_mask = {beliefs[b]: r for b, r in rank.items()}
    locatable = 0 in rank
    return SolveResult(
        locatable=locatable,
        capture_bound=rank[0] if locatable else None,
        states_explored=len(beliefs),
        rank=by_mask,
        explored=beliefs,
        graph=s,
    )


class OptimalStrategy(BaseStrategy):
    """Rank-decreasing probes read off a solved instance; lowest id breaks ties."""

    name = "optimal"

    def __init__(self, s: SubdividedGraph, result: SolveResult) -> None:
        self.s = s
        self.result = result
        self._choice: dict[int, int] = {}

    def best_probe(self, belief: int) -> int:
        got = self._choice.get(belief)
        if got is not None:
            return got
        rank = self.result.rank
        target = rank.get(belief)
        if target is None:
            raise StrategyError(f"belief of size {belief.bit_count()} is not a solved cop win")
        reach = self.s.expand(belief)
        for p in range(self.s.order):
            worst = 0
            for cls in split(self.s, reach, p):
                r = 0 if cls.bit_count() == 1 else rank.get(cls)
                if r is None:
                    break
                worst = max(worst, r + 1)
            else:
                if worst == target:
                    self._choice[belief] = p
                    return p
        raise StrategyError("no rank-optimal probe found; solver tables are inconsistent")

    def step(self, state, result, belief):
        return state, self.best_probe(belief)


def extract_strategy(s: SubdividedGraph, result: SolveResult) -> OptimalStrategy:
    if not result.locatable:
        raise RobLocError("instance is not locatable; ask for an evasion certificate instead")
    return OptimalStrategy(s, result)


def evasion_certificate(s: SubdividedGraph, result: SolveResult) -> list[frozenset[int]]:
    """Inclusion-minimal losing beliefs; closed under every probe (see verify_certificate)."""
    if result.locatable:
        raise RobLocError("instance is locatable; no evasion certificate exists")
    losing = [b for b in result.explored if b not in result.rank]
    losing.sort(key=lambda b: (b.bit_count(), b))
    minimal: list[int] = []
    for b in losing:
        if not any(m & b == m for m in minimal):
            minimal.append(b)
    return [frozenset(bits(b)) for b in minimal]


def verify_certificate(s: SubdividedGraph, family) -> bool:
    """Re-check a certificate by direct enumeration, without solver tables.

    Every member must have at least two vertices, and for every member ``B``
    and every probe, some distance class of the closed neighbourhood of ``B``
    must contain a member.  A nonempty family then lets the robber keep the
    cop's belief non-singleton forever starting from the full vertex set,
    since every member lies inside it.
    """
    fam = [frozenset(f) for f in family]
    if not fam:
        return False
    if any(len(f) < 2 or not all(0 <= v < s.order for v in f) for f in fam):
        return False
    for b in fam:
        reach = set(b)
        for v in b:
            reach.update(s.neighbors(v))
        for p in range(s.order):
            classes: dict[int, set[int]] = defaultdict(set)
            for v in reach:
                classes[s.distance(p, v)].add(v)
            if not any(len(c) >= 2 and any(f <= c for f in fam) for c in classes.values()):
                return False
    return True


def format_certificate(s: SubdividedGraph, family) -> str:
    """One belief per line, as a sorted list of vertex labels."""
    return "".join(" ".join(s.label(v) for v in sorted(f)) + "\n" for f in family)
