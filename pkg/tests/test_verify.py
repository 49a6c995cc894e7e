import math
import random

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from robloc.engine import AlwaysProbe, BaseStrategy, ScriptedRobber, play
from robloc.errors import GraphError, ResourceLimit, StrategyError
from robloc.graph import (
    Graph,
    complete_bipartite,
    complete_graph,
    cycle_graph,
    min_maximal_matching,
    path_graph,
    star_graph,
    subdivide,
)
from robloc.matching import build_matching_strategy
from robloc.verify import (
    adversarial_verify,
    canonical_form,
    check_mmm_lemma,
    classify,
    enumerate_connected_graphs,
)

from conftest import connected_graphs


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


class TestAdversarialVerify:
    def test_claw_centre_probe_is_evaded(self):
        s = subdivide(star_graph(3), 1)
        verdict = adversarial_verify(s, AlwaysProbe(s, 0))
        assert verdict.kind == "EvasionFound"
        assert verdict.loop_start is not None
        script = verdict.robber_script(repeats=5)
        trace = play(s, AlwaysProbe(s, 0), ScriptedRobber(script), max_rounds=len(script))
        assert not trace.captured

    def test_path_end_probe_captures_in_one_round(self):
        s = subdivide(path_graph(5), 1)
        verdict = adversarial_verify(s, AlwaysProbe(s, 0))
        assert verdict.kind == "AllCaptured"
        assert verdict.max_rounds == 1

    def test_cycle_single_probe_is_evaded(self):
        s = subdivide(cycle_graph(4), 1)
        assert adversarial_verify(s, AlwaysProbe(s, 0)).kind == "EvasionFound"

    def test_single_vertex_is_trivially_captured(self):
        s = subdivide(Graph(1, []), 1)
        assert adversarial_verify(s, AlwaysProbe(s, 0)).max_rounds == 0

    def test_strategy_error_is_reported_with_witness(self):
        class Faulty(BaseStrategy):
            def initial_state(self):
                return 0

            def step(self, state, result, belief):
                if state == 1:
                    raise StrategyError("out of ideas")
                return state + 1, 0

        s = subdivide(cycle_graph(3), 2)
        verdict = adversarial_verify(s, Faulty())
        assert verdict.kind == "StrategyErrorFound"
        assert "out of ideas" in verdict.error
        assert len(verdict.witness) == 1

    def test_depth_bound_is_inconclusive(self):
        g = complete_graph(4)
        strat = build_matching_strategy(g, min_maximal_matching(g), 12)
        with pytest.raises(ResourceLimit, match="depth"):
            adversarial_verify(strat.s, strat, bound=2)

    def test_state_budget_is_inconclusive(self):
        g = complete_graph(4)
        strat = build_matching_strategy(g, min_maximal_matching(g), 12)
        with pytest.raises(ResourceLimit, match="budget"):
            adversarial_verify(strat.s, strat, max_states=5)

    def test_verdict_json_labels_witness(self):
        s = subdivide(star_graph(3), 1)
        out = adversarial_verify(s, AlwaysProbe(s, 0)).to_json(s)
        assert out["kind"] == "EvasionFound"
        assert all(r["probe"] == "b:0" for r in out["witness_trace"])


@settings(max_examples=30, deadline=None)
@given(connected_graphs(1, 5), st.integers(1, 3), st.data())
def test_evasion_witness_replays(g, m, data):
    """Every evasion witness, looped, keeps a fixed-probe cop from locating."""
    s = subdivide(g, m)
    probe = data.draw(st.integers(0, s.order - 1))
    verdict = adversarial_verify(s, AlwaysProbe(s, probe))
    if verdict.kind == "EvasionFound":
        script = verdict.robber_script(repeats=4)
        trace = play(s, AlwaysProbe(s, probe), ScriptedRobber(script), max_rounds=len(script))
        assert not trace.captured
    else:
        assert verdict.ok


class TestEnumeration:
    @pytest.mark.parametrize("v, count", [(1, 1), (2, 1), (3, 2), (4, 6), (5, 21), (6, 112)])
    def test_iso_class_counts(self, v, count):
        assert sum(1 for _ in enumerate_connected_graphs(v)) == count

    @pytest.mark.parametrize("v, labelled", [(1, 1), (2, 1), (3, 4), (4, 38), (5, 728), (6, 26704)])
    def test_orbit_counting_matches_labelled_counts(self, v, labelled):
        """Sum of v!/|Aut(G)| over classes counts labelled connected graphs."""
        total = 0
        for g in enumerate_connected_graphs(v):
            h = to_nx(g)
            aut = sum(1 for _ in nx.isomorphism.GraphMatcher(h, h).isomorphisms_iter())
            total += math.factorial(v) // aut
        assert total == labelled

    @pytest.mark.parametrize("v", [3, 4, 5])
    def test_deduped_classes_cover_labelled_graphs(self, v):
        classes = {canonical_form(g) for g in enumerate_connected_graphs(v)}
        labelled = list(enumerate_connected_graphs(v, dedupe=False))
        assert {canonical_form(g) for g in labelled} == classes

    def test_classes_are_pairwise_non_isomorphic(self):
        graphs = [to_nx(g) for g in enumerate_connected_graphs(5)]
        for i, a in enumerate(graphs):
            for b in graphs[i + 1:]:
                assert not nx.is_isomorphic(a, b)

    def test_out_of_range(self):
        with pytest.raises(GraphError):
            list(enumerate_connected_graphs(9))


@settings(max_examples=60, deadline=None)
@given(connected_graphs(2, 7), st.randoms(use_true_random=False))
def test_canonical_form_is_relabel_invariant(g, rnd):
    perm = list(range(g.n))
    rnd.shuffle(perm)
    assert canonical_form(g.relabel(perm)) == canonical_form(g)


def test_canonical_form_separates_non_isomorphic_pairs():
    rng = random.Random(5)
    graphs = list(enumerate_connected_graphs(6))
    for _ in range(300):
        a, b = rng.sample(graphs, 2)
        same = canonical_form(a) == canonical_form(b)
        assert same == nx.is_isomorphic(to_nx(a), to_nx(b))


class TestMmmLemma:
    @pytest.mark.parametrize("r, names", [
        (1, {"K_2"}),
        (2, {"K_4", "K_{2,2}"}),
        (3, {"K_6", "K_{3,3}"}),
    ])
    def test_extremal_graphs(self, r, names):
        report = check_mmm_lemma(r)
        assert report["holds"]
        assert {e["name"] for e in report["extremal"]} == names
        assert len(report["extremal"]) == len(names)

    def test_rejects_r_out_of_range(self):
        with pytest.raises(GraphError):
            check_mmm_lemma(0)
        with pytest.raises(GraphError):
            check_mmm_lemma(5)

    def test_classify(self):
        assert classify(complete_graph(5)) == "K_5"
        assert classify(complete_bipartite(3, 3).relabel([0, 3, 1, 4, 2, 5])) == "K_{3,3}"
        assert classify(path_graph(4)) == "other"
