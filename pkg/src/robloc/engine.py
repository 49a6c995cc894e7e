"""Game semantics: belief tracking, the strategy contract, robber policies, play.

A belief is an ``int`` bitmask over the vertices of a :class:`SubdividedGraph`.
It is the set of robber positions consistent with every probe answer so far.
The engine, not the strategy, decides when the cop has won: that happens
exactly when the refined belief is a singleton.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Protocol, Sequence

from robloc.errors import GraphError, IllegalMove, ProtocolViolation, StrategyError
from robloc.graph import SubdividedGraph, bits

TRACE_FORMAT = 1


def expand(s: SubdividedGraph, belief: int) -> int:
    """Positions reachable after one robber move (stay or step)."""
    return s.expand(belief)


def refine(s: SubdividedGraph, belief: int, probe: int, d: int) -> int:
    """Keep the candidates at distance ``d`` from ``probe``.

    An empty result can only come from an answer no robber could have produced.
    """
    out = s.refine(belief, probe, d)
    if not out:
        raise ProtocolViolation(
            f"no candidate at distance {d} from {s.label(probe)}; the answer is inconsistent"
        )
    return out


def belief_vertices(belief: int) -> list[int]:
    return list(bits(belief))


class CopStrategy(Protocol):
    """A deterministic probe selector.

    ``step(state, result, belief)`` receives the answer to the previous probe
    (``None`` before the first probe) together with the engine's refined
    belief, and returns the successor state and the next probe.  States must be
    hashable and equal exactly when they behave identically; the adversary
    search memoizes on them.
    """

    name: str

    def initial_state(self) -> Hashable: ...

    def step(self, state: Hashable, result: int | None, belief: int) -> tuple[Hashable, int]: ...

    def describe(self, state: Hashable) -> dict[str, Any]: ...


class BaseStrategy:
    """Defaults for :class:`CopStrategy` implementations."""

    name = "strategy"

    def initial_state(self) -> Hashable:
        return ()

    def describe(self, state: Hashable) -> dict[str, Any]:
        return {}

    def serialize(self, state: Hashable) -> str:
        """Canonical text form of a state: equal states give equal strings."""
        return json.dumps(_jsonable(state), separators=(",", ":"))


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, (tuple, list)):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, frozenset):
        return sorted(_jsonable(o) for o in obj)
    return obj


class AlwaysProbe(BaseStrategy):
    """Probe the same vertex every round."""

    def __init__(self, s: SubdividedGraph, vertex: int) -> None:
        s.coords(vertex)
        self.vertex = vertex
        self.name = f"always:{s.label(vertex)}"

    def step(self, state, result, belief):
        return state, self.vertex


# -- robber policies -----------------------------------------------------

class RobberPolicy(Protocol):
    def start(self, s: SubdividedGraph) -> int: ...

    def move(self, s: SubdividedGraph, rnd: int, position: int, probe: int, belief: int) -> int: ...


class ScriptedRobber:
    """Follow a list of positions, one per round; stay put when it runs out.

    ``positions[0]`` is where the robber stands when the first probe is made.
    """

    def __init__(self, positions: Sequence[int]) -> None:
        if not positions:
            raise ValueError("a robber script needs at least one position")
        self.positions = list(positions)

    def start(self, s):
        return self.positions[0]

    def move(self, s, rnd, position, probe, belief):
        return self.positions[rnd - 1] if rnd - 1 < len(self.positions) else position


class RandomRobber:
    """Seeded uniform choice among staying and the neighbours."""

    def __init__(self, seed: int, start: int | None = None) -> None:
        self.rng = random.Random(seed)
        self._start = start

    def start(self, s):
        return self.rng.randrange(s.order) if self._start is None else self._start

    def move(self, s, rnd, position, probe, belief):
        if rnd == 1:
            return position
        return self.rng.choice(s.closed_neighbors(position))


class GreedyRobber:
    """Knows the next probe and moves to keep the cop's belief as large as possible.

    A heuristic adversary for single plays; :func:`robloc.verify.adversarial_verify`
    is the exhaustive one.
    """

    def __init__(self, start: int | None = None) -> None:
        self._start = start

    def start(self, s):
        return 0 if self._start is None else self._start

    def move(self, s, rnd, position, probe, belief):
        reach = s.expand(belief)
        options = range(s.order) if rnd == 1 else s.closed_neighbors(position)
        dist = s.distance_matrix[probe]
        return max(options, key=lambda y: (s.refine(reach, probe, int(dist[y])).bit_count(), -y))


class CallbackRobber:
    """Delegate every move to ``fn(s, rnd, position, probe, belief)``."""

    def __init__(self, fn: Callable[..., int], start: int = 0) -> None:
        self.fn = fn
        self._start = start

    def start(self, s):
        return self._start

    def move(self, s, rnd, position, probe, belief):
        return self.fn(s, rnd, position, probe, belief)


# -- traces --------------------------------------------------------------

@dataclass(frozen=True)
class Round:
    round: int
    robber: int
    probe: int
    dist: int
    belief_size: int
    tag: str = ""


@dataclass
class GameTrace:
    rounds: list[Round] = field(default_factory=list)
    outcome: str = "Evaded"  # Captured | Evaded | StrategyError
    located: int | None = None
    detail: str = ""

    @property
    def captured(self) -> bool:
        return self.outcome == "Captured"

    @property
    def capture_round(self) -> int | None:
        return len(self.rounds) if self.captured else None

    def to_jsonl(self, s: SubdividedGraph, reveal_robber: bool = False) -> str:
        """Line-delimited JSON: one object per round, then a terminal record."""
        lines = []
        for r in self.rounds:
            rec: dict[str, Any] = {
                "round": r.round,
                "probe": s.label(r.probe),
                "dist": r.dist,
                "belief_size": r.belief_size,
            }
            if reveal_robber:
                rec["robber"] = s.label(r.robber)
            if r.tag:
                rec["tag"] = r.tag
            lines.append(json.dumps(rec))
        term: dict[str, Any] = {
            "outcome": self.outcome,
            "rounds": len(self.rounds),
            "located": None if self.located is None else s.label(self.located),
        }
        if self.detail:
            term["detail"] = self.detail
        lines.append(json.dumps(term))
        return "\n".join(lines) + "\n"


def play(
    s: SubdividedGraph,
    strategy: CopStrategy,
    robber: RobberPolicy,
    max_rounds: int = 1000,
) -> GameTrace:
    """Simulate one game and record every round."""
    trace = GameTrace()
    belief = s.all_mask
    position = robber.start(s)
    s.coords(position)
    if s.order == 1:
        trace.outcome, trace.located = "Captured", 0
        return trace
    state = strategy.initial_state()
    result: int | None = None
    for rnd in range(1, max_rounds + 1):
        try:
            state, probe = strategy.step(state, result, belief)
            s.coords(probe)
        except (StrategyError, GraphError) as exc:
            trace.outcome, trace.detail = "StrategyError", str(exc)
            return trace
        nxt = robber.move(s, rnd, position, probe, belief)
        if rnd == 1:
            s.coords(nxt)
        elif nxt != position and nxt not in s.adjacency[position]:
            raise IllegalMove(
                f"round {rnd}: robber cannot move from {s.label(position)} to {s.label(nxt)}"
            )
        position = nxt
        result = s.distance(probe, position)
        belief = refine(s, s.expand(belief), probe, result)
        describe = getattr(strategy, "describe", None)
        tag = describe(state).get("tag", "") if describe else ""
        trace.rounds.append(Round(rnd, position, probe, result, belief.bit_count(), tag))
        if belief.bit_count() == 1:
            trace.outcome, trace.located = "Captured", position
            return trace
    trace.outcome = "Evaded"
    return trace
