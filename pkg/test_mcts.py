#!/usr/bin/env python3
"""
Tests for UCB scoring and Monte Carlo tree search
"""
import math
import sys
import time
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from routing.baselines import optimal_swap_count
from routing.circuit import LogicalCircuit, generate_benchmark
from routing.env import init_state, route, step, trivial_mapping, verify
from routing.mcts import SearchNode, search, search_policy, ucb, zero_value
from routing.topology import build_topology
from utils.errors import RoutingError

TWO_SWAP = LogicalCircuit.from_pairs(5, [(0, 2), (1, 3), (1, 4), (3, 4)])
RING5 = build_topology("ring", 5)


def test_ucb_values():
    assert ucb(2, 1, 1.0, math.sqrt(2)) == pytest.approx(2.17741, abs=1e-4)
    assert ucb(10, 2, 2.0, math.sqrt(2)) == pytest.approx(2.5175, abs=1e-4)
    assert ucb(10, 1, 1.0, math.sqrt(2)) == pytest.approx(3.1459, abs=1e-4)


def test_ucb_unvisited_is_infinite():
    assert ucb(5, 0, 0.0) == math.inf


def _tree_consistent(node: SearchNode):
    if not node.children:
        return
    assert node.visit_count == 1 + sum(c.visit_count for c in node.children)
    for child in node.children:
        if child.visit_count:
            _tree_consistent(child)


def test_one_swap_from_terminal():
    state, _ = step(init_state(TWO_SWAP, RING5, trivial_mapping(5)), (1, 2))
    result = search(state, zero_value, rollouts=50)
    assert result.best_action == (3, 4)
    rewards = {s.edge: s.reward for s in result.child_stats}
    assert rewards[(3, 4)] == 1
    # (2, 3) schedules only the first of the two remaining gates
    assert rewards[(2, 3)] == 0
    assert all(r == -1 for e, r in rewards.items() if e not in {(3, 4), (2, 3)})


def test_rollouts_equal_to_edges_visit_each_child_once():
    state = init_state(TWO_SWAP, RING5, trivial_mapping(5))
    result = search(state, zero_value, rollouts=RING5.num_edges)
    assert [s.visits for s in result.child_stats] == [1] * RING5.num_edges
    assert result.root.visit_count == RING5.num_edges + 1


def test_tree_consistency():
    state = init_state(TWO_SWAP, RING5, trivial_mapping(5))
    result = search(state, zero_value, rollouts=300)
    assert result.root.visit_count == 301
    _tree_consistent(result.root)


def test_two_swap_instance_with_zero_value_agent():
    start = time.perf_counter()
    routed = route(TWO_SWAP, RING5, trivial_mapping(5), search_policy(zero_value, rollouts=2000))
    assert routed.swap_count == 2
    assert verify(routed, TWO_SWAP, RING5).ok
    assert time.perf_counter() - start < 5.0


def test_search_deterministic():
    circuit = generate_benchmark("random", 5, seed=3, gates=6)
    state = init_state(circuit, RING5, trivial_mapping(5))
    if state.remaining:
        first = search(state, zero_value, rollouts=100)
        second = search(state, zero_value, rollouts=100)
        assert first.best_action == second.best_action
        assert first.child_stats == second.child_stats


def test_search_uses_evaluator():
    calls = []

    def evaluator(state):
        calls.append(state)
        return 0.5

    state = init_state(TWO_SWAP, RING5, trivial_mapping(5))
    result = search(state, evaluator, rollouts=10)
    assert calls[0] is state
    assert len(calls) <= 11
    assert result.root_value == pytest.approx(result.root.value_sum / result.root.visit_count)


def test_search_never_beats_oracle():
    for seed in range(10):
        circuit = generate_benchmark("random", 5, seed=seed, gates=5)
        best = optimal_swap_count(circuit, RING5, trivial_mapping(5))
        routed = route(circuit, RING5, trivial_mapping(5), search_policy(rollouts=100))
        assert routed.swap_count >= best


def test_search_errors():
    done = init_state(generate_benchmark("ghz", 5), RING5, trivial_mapping(5))
    with pytest.raises(RoutingError):
        search(done)
    state = init_state(TWO_SWAP, RING5, trivial_mapping(5))
    with pytest.raises(RoutingError):
        search(state, rollouts=0)


def test_child_stats_carry_predicted_values():
    state = init_state(TWO_SWAP, RING5, trivial_mapping(5))
    result = search(state, lambda s: 0.5, rollouts=RING5.num_edges)
    assert [s.predicted_value for s in result.child_stats] == [0.5] * RING5.num_edges
    assert result.root.predicted_value == 0.5

    partial = search(state, lambda s: 0.5, rollouts=2)
    assert [s.predicted_value for s in partial.child_stats].count(None) == RING5.num_edges - 2

    near_done, _ = step(state, (1, 2))
    finishing = {s.edge: s for s in search(near_done, lambda s: 0.5, rollouts=50).child_stats}
    assert finishing[(3, 4)].predicted_value == 0.0
    assert finishing[(0, 1)].predicted_value == 0.5
