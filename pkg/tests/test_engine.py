import json
import random
from pathlib import Path

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from robloc.engine import (
    AlwaysProbe,
    BaseStrategy,
    CallbackRobber,
    GreedyRobber,
    RandomRobber,
    ScriptedRobber,
    expand,
    play,
    refine,
)
from robloc.errors import IllegalMove, ProtocolViolation, StrategyError
from robloc.graph import (
    Graph,
    complete_graph,
    min_maximal_matching,
    paw_graph,
    path_graph,
    star_graph,
    subdivide,
    to_mask,
)
from robloc.matching import build_matching_strategy
from robloc.solver import decide_locatable, extract_strategy
from robloc.unequal import build_unequal_strategy

from conftest import subdivision_specs

FIXTURES = Path(__file__).parent / "fixtures"


class Spy(BaseStrategy):
    """Round-robin prober that records the beliefs it is shown."""

    def __init__(self, s):
        self.s = s
        self.seen = []

    def step(self, state, result, belief):
        self.seen.append(belief)
        nxt = 0 if result is None else (state + 1) % self.s.order
        return nxt, nxt


class TestExpandRefine:
    def test_path_examples(self):
        s = subdivide(path_graph(3), 1)
        assert expand(s, 0b001) == 0b011
        assert refine(s, s.all_mask, 0, 1) == 0b010

    def test_star_leaf_probe(self):
        s = subdivide(star_graph(3), 1)
        assert refine(s, s.all_mask, 1, 2) == to_mask([2, 3])

    def test_six_cycle_branch_probe(self):
        s = subdivide(complete_graph(3), 2)
        got = refine(s, s.all_mask, 0, 2)
        oracle = nx.single_source_shortest_path_length(s.explicit(), 0)
        assert got == to_mask(x for x, d in oracle.items() if d == 2)
        assert got == to_mask([1, 2])

    def test_empty_refinement_is_a_protocol_violation(self):
        s = subdivide(path_graph(3), 1)
        with pytest.raises(ProtocolViolation):
            refine(s, 0b001, 0, 2)

    @settings(max_examples=40, deadline=None)
    @given(subdivision_specs(), st.integers(0, 2**20), st.integers(0, 10**6))
    def test_refine_is_monotone(self, spec, raw, pick):
        g, lengths = spec
        s = subdivide(g, lengths)
        belief = (raw & s.all_mask) or 1
        reach = expand(s, belief)
        assert belief & ~reach == 0
        p = pick % s.order
        classes = s.distance_classes(p)
        parts = [reach & mask for mask in classes.values() if reach & mask]
        assert sum(parts) == reach
        assert all(part & ~reach == 0 for part in parts)


class TestPlay:
    def test_path_endpoint_captures_in_one_round(self):
        s = subdivide(path_graph(5), 1)
        for start in range(5):
            trace = play(s, AlwaysProbe(s, 0), RandomRobber(start, start))
            assert trace.outcome == "Captured" and len(trace.rounds) == 1

    def test_star_centre_never_captures_a_leaf_sitter(self):
        s = subdivide(star_graph(3), 1)
        trace = play(s, AlwaysProbe(s, 0), ScriptedRobber([1]), max_rounds=50)
        assert trace.outcome == "Evaded" and len(trace.rounds) == 50

    def test_k3_fixed_probe_evaded_by_greedy_robber(self):
        s = subdivide(complete_graph(3), 1)
        trace = play(s, AlwaysProbe(s, 0), GreedyRobber(1), max_rounds=40)
        assert trace.outcome == "Evaded"

    def test_single_vertex_is_captured_at_round_zero(self):
        s = subdivide(Graph(1, []), 1)
        trace = play(s, AlwaysProbe(s, 0), ScriptedRobber([0]))
        assert trace.outcome == "Captured" and trace.rounds == [] and trace.located == 0

    def test_illegal_move_is_rejected(self):
        s = subdivide(path_graph(5), 1)
        robber = CallbackRobber(lambda s, rnd, pos, probe, belief: 0 if rnd == 1 else 4, start=0)
        with pytest.raises(IllegalMove):
            play(s, AlwaysProbe(s, 2), robber)

    def test_first_round_may_start_anywhere(self):
        s = subdivide(path_graph(5), 1)
        trace = play(s, AlwaysProbe(s, 0), ScriptedRobber([4]))
        assert trace.located == 4

    def test_strategy_errors_are_reported(self):
        class Broken(BaseStrategy):
            def step(self, state, result, belief):
                raise StrategyError("boom")

        s = subdivide(path_graph(3), 1)
        trace = play(s, Broken(), ScriptedRobber([0]))
        assert trace.outcome == "StrategyError" and "boom" in trace.detail

    def test_strategy_sees_engine_belief(self):
        s = subdivide(complete_graph(3), 3)
        spy = Spy(s)
        play(s, spy, RandomRobber(1), max_rounds=20)
        assert spy.seen[0] == s.all_mask

    def test_trace_is_deterministic(self):
        g = complete_graph(4)
        strat = build_matching_strategy(g, min_maximal_matching(g), 12)
        a = play(strat.s, strat, RandomRobber(11)).to_jsonl(strat.s, True)
        b = play(strat.s, strat, RandomRobber(11)).to_jsonl(strat.s, True)
        assert a == b


def _record_belief_membership(s, strategy, seed, rounds=60):
    """Play with a random robber and check the robber is always a candidate."""
    rng = random.Random(seed)
    beliefs = []

    class Watch(BaseStrategy):
        def initial_state(self):
            return strategy.initial_state()

        def step(self, state, result, belief):
            beliefs.append(belief)
            return strategy.step(state, result, belief)

    trace = play(s, Watch(), RandomRobber(rng.randrange(10**9)), max_rounds=rounds)
    # beliefs[i] is the belief after round i (beliefs[0] is the initial V)
    for r, belief in zip(trace.rounds, beliefs[1:]):
        assert belief >> r.robber & 1
        assert r.dist == s.distance(r.probe, r.robber)
    if trace.captured:
        assert trace.located == trace.rounds[-1].robber
    return trace


@pytest.mark.parametrize("seed", range(30))
def test_belief_contains_robber(seed):
    rng = random.Random(seed)
    g = complete_graph(3 + seed % 3)
    s = subdivide(g, {e: rng.randint(1, 4) for e in g.edges})
    _record_belief_membership(s, Spy(s), seed)


class TestGoldenTraces:
    def test_matching_k4_random(self):
        g = complete_graph(4)
        strat = build_matching_strategy(g, min_maximal_matching(g), 12)
        got = play(strat.s, strat, RandomRobber(7)).to_jsonl(strat.s, reveal_robber=True)
        assert got == (FIXTURES / "k4_m12_random7.jsonl").read_text()

    def test_matching_k4_scripted_thread_walk(self):
        g = complete_graph(4)
        strat = build_matching_strategy(g, min_maximal_matching(g), 12)
        s = strat.s
        labels = (FIXTURES / "k4_m12_script.robber").read_text().split()
        robber = ScriptedRobber([s.parse_vertex(x) for x in labels])
        got = play(s, strat, robber).to_jsonl(s, reveal_robber=True)
        assert got == (FIXTURES / "k4_m12_script.jsonl").read_text()

    def test_unequal_paw_random(self):
        g = paw_graph()
        strat = build_unequal_strategy(g, {(0, 1): 8, (0, 2): 9, (1, 2): 10, (2, 3): 12})
        got = play(strat.s, strat, RandomRobber(3)).to_jsonl(strat.s, reveal_robber=True)
        assert got == (FIXTURES / "paw_unequal_random3.jsonl").read_text()

    def test_jsonl_schema(self):
        s = subdivide(path_graph(3), 2)
        text = play(s, AlwaysProbe(s, 0), ScriptedRobber([4])).to_jsonl(s)
        lines = [json.loads(x) for x in text.splitlines()]
        assert set(lines[0]) == {"round", "probe", "dist", "belief_size"}
        assert lines[-1] == {"outcome": "Captured", "rounds": 1, "located": "i:1/2/1"}


def test_optimal_strategy_on_star():
    s = subdivide(star_graph(3), 1)
    result = decide_locatable(s)
    strat = extract_strategy(s, result)
    for start in range(4):
        trace = play(s, strat, GreedyRobber(start))
        assert trace.captured and len(trace.rounds) <= result.capture_bound
