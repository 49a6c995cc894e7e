"""Generator-driven strategies with replayable, canonical state.

The constructive strategies read naturally as straight-line procedures with nested
sub-routines, so they are written as generators: a routine yields
``(probe, tag)`` and is sent back ``(distance, belief)``.  Generators cannot be
copied or hashed, which the adversary search needs, so a strategy state is the
routine's *input*: the anchor belief it started from plus the tuple of answers
received since.  ``step`` re-runs the routine from the anchor over those
answers.  Routines are short (bounded probe budgets), so replay is cheap.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Generator, Iterator

from robloc.errors import StrategyError
from robloc.graph import SubdividedGraph

Routine = Generator[tuple[int, str], tuple[int, int], Any]


@dataclass
class Budget:
    name: str
    limit: int
    used: int = 0


class Context:
    """Mutable bookkeeping for one replay of a routine."""

    def __init__(self, s: SubdividedGraph, belief: int, max_probes: int | None = None) -> None:
        self.s = s
        self.belief = belief
        self.budgets: list[Budget] = []
        self.probes = 0
        self.max_probes = max_probes
        self.tag = ""
        self.history: list[tuple[int, int]] = []

    def probe(self, vertex: int, tag: str) -> Generator[tuple[int, str], tuple[int, int], int]:
        """Yield one probe and return its answer; charges every open budget."""
        for b in self.budgets:
            b.used += 1
            if b.used > b.limit:
                raise StrategyError(
                    f"{b.name} needs more than its budget of {b.limit} probes "
                    f"(history {self.describe_history()})"
                )
        self.probes += 1
        self.tag = tag
        if self.max_probes is not None and self.probes > self.max_probes:
            raise self.fail(f"routine needs more than {self.max_probes} probes")
        d, belief = yield (vertex, tag)
        self.belief = belief
        self.history.append((vertex, d))
        return d

    @contextmanager
    def budget(self, name: str, limit: int) -> Iterator[Budget]:
        b = Budget(name, limit)
        self.budgets.append(b)
        try:
            yield b
        finally:
            self.budgets.remove(b)

    def fail(self, why: str) -> StrategyError:
        return StrategyError(f"{why} [{self.tag}; history {self.describe_history()}]")

    def describe_history(self) -> str:
        return ", ".join(f"{self.s.label(v)}->{d}" for v, d in self.history) or "empty"

    def lemma_usage(self) -> list[tuple[str, int, int]]:
        return [(b.name, b.used, b.limit) for b in self.budgets]


@dataclass
class ReplayOutcome:
    probe: int | None  # None when the routine finished
    tag: str
    value: Any
    context: Context
    usage: list[tuple[str, int, int]]


def replay(
    s: SubdividedGraph,
    routine: Callable[[Context], Routine],
    anchor: int,
    results: tuple[int, ...],
    max_probes: int | None = None,
) -> ReplayOutcome:
    """Run ``routine`` from ``anchor`` through ``results``; report what comes next."""
    ctx = Context(s, anchor, max_probes)
    gen = routine(ctx)
    belief = anchor
    try:
        probe, tag = next(gen)
        for d in results:
            belief = s.refine(s.expand(belief), probe, d)
            if not belief:
                raise StrategyError(f"answer {d} at {s.label(probe)} is inconsistent")
            probe, tag = gen.send((d, belief))
    except StopIteration as stop:
        return ReplayOutcome(None, ctx.tag, stop.value, ctx, ctx.lemma_usage())
    return ReplayOutcome(probe, tag, None, ctx, ctx.lemma_usage())
