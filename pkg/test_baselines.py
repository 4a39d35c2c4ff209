#!/usr/bin/env python3
"""
Tests for the reference routers and the exhaustive oracle, including the
oracle lower-bound fuzz over small instances
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from routing.baselines import (
    RouterConfig, make_router, optimal_actions, optimal_swap_count, route_basic, route_optimal,
    route_sabre, route_stochastic, shortest_path,
)
from routing.circuit import LogicalCircuit, generate_benchmark
from routing.env import Mapping, init_state, random_mapping, route, trivial_mapping, verify
from routing.mcts import search_policy
from routing.topology import build_topology
from utils.errors import RoutingError

TWO_SWAP = LogicalCircuit.from_pairs(5, [(0, 2), (1, 3), (1, 4), (3, 4)])
RING5 = build_topology("ring", 5)
LINE5 = build_topology("line", 5)

ROUTERS = {
    "basic": route_basic,
    "stochastic": lambda c, t, m: route_stochastic(c, t, m, trials=5, seed=1),
    "sabre": route_sabre,
}


def test_shortest_path_prefers_low_vertex():
    grid = build_topology("grid", 2, 2)
    assert shortest_path(grid, 0, 3) == [0, 1, 3]
    assert shortest_path(RING5, 0, 2) == [0, 1, 2]


@pytest.mark.parametrize("name", sorted(ROUTERS))
def test_single_gate_distance(name):
    circuit = LogicalCircuit.from_pairs(5, [(0, 4)])
    routed = ROUTERS[name](circuit, LINE5, trivial_mapping(5))
    assert verify(routed, circuit, LINE5).ok
    if name == "basic":
        assert routed.swap_count == 3
    assert routed.swap_count >= 3


@pytest.mark.parametrize("name", sorted(ROUTERS))
def test_compliant_circuit_needs_no_swaps(name):
    ghz = generate_benchmark("ghz", 5)
    assert ROUTERS[name](ghz, RING5, trivial_mapping(5)).swap_count == 0


@pytest.mark.parametrize("name", sorted(ROUTERS))
def test_two_swap_routes_validly(name):
    routed = ROUTERS[name](TWO_SWAP, RING5, trivial_mapping(5))
    assert routed.swap_count >= 2
    assert verify(routed, TWO_SWAP, RING5).ok


def test_basic_two_swap_trace():
    routed = route_basic(TWO_SWAP, RING5, trivial_mapping(5))
    assert routed.swap_count == 3


def test_routers_deterministic():
    circuit = generate_benchmark("random", 12, seed=4, gates=40)
    grid = build_topology("grid", 3, 4)
    m = random_mapping(12, 4)
    assert route_basic(circuit, grid, m) == route_basic(circuit, grid, m)
    assert route_sabre(circuit, grid, m) == route_sabre(circuit, grid, m)
    assert route_stochastic(circuit, grid, m, seed=8) == route_stochastic(circuit, grid, m, seed=8)


def test_stochastic_more_trials_helps_on_average():
    grid = build_topology("grid", 3, 4)
    few, many = [], []
    for seed in range(50):
        circuit = generate_benchmark("random", 12, seed=seed, gates=15)
        few.append(route_stochastic(circuit, grid, trivial_mapping(12), trials=1, seed=seed).swap_count)
        many.append(route_stochastic(circuit, grid, trivial_mapping(12), trials=20, seed=seed).swap_count)
    assert np.mean(many) <= np.mean(few)


def test_stochastic_rejects_zero_trials():
    with pytest.raises(RoutingError):
        route_stochastic(TWO_SWAP, RING5, trivial_mapping(5), trials=0)


@pytest.mark.parametrize("decay", [0.0, 0.001])
def test_sabre_terminates_on_opposing_pulls(decay):
    # qubit 2 is pulled toward both ends of the line
    circuit = LogicalCircuit.from_pairs(5, [(2, 0), (2, 4), (2, 0), (2, 4), (1, 3)])
    routed = route_sabre(circuit, LINE5, trivial_mapping(5), decay=decay)
    assert verify(routed, circuit, LINE5).ok
    assert routed.swap_count <= 10 * len(circuit) + 50


def test_make_router():
    assert make_router(RouterConfig(kind="basic")) is route_basic
    routed = make_router(RouterConfig(kind="stochastic", trials=3, seed=2))(TWO_SWAP, RING5, trivial_mapping(5))
    assert verify(routed, TWO_SWAP, RING5).ok
    with pytest.raises(RoutingError):
        RouterConfig(kind="magic")


def test_oracle_two_swap():
    assert optimal_swap_count(TWO_SWAP, RING5, trivial_mapping(5)) == 2
    routed = route_optimal(TWO_SWAP, RING5, trivial_mapping(5))
    assert routed.swap_count == 2
    assert verify(routed, TWO_SWAP, RING5).ok


def test_oracle_simple_cases():
    assert optimal_swap_count(generate_benchmark("ghz", 5), RING5, trivial_mapping(5)) == 0
    assert optimal_swap_count(LogicalCircuit.from_pairs(5, [(0, 4)]), LINE5, trivial_mapping(5)) == 3


def test_oracle_exhaustion_returns_none():
    # no single swap finishes the two-swap instance, so one state is never enough
    state = init_state(TWO_SWAP, RING5, trivial_mapping(5))
    assert optimal_actions(state, limit=1) is None
    assert optimal_swap_count(TWO_SWAP, RING5, trivial_mapping(5), limit=1) is None
    with pytest.raises(RoutingError):
        route_optimal(TWO_SWAP, RING5, trivial_mapping(5), limit=1)


def test_oracle_invariant_under_rotation():
    for seed in range(20):
        circuit = generate_benchmark("random", 5, seed=seed, gates=5)
        m = random_mapping(5, seed)
        rotated = Mapping.from_log_to_phys([(p + 1) % 5 for p in m.log_to_phys])
        assert optimal_swap_count(circuit, RING5, m) == optimal_swap_count(circuit, RING5, rotated)


def test_oracle_lower_bound_fuzz():
    topologies = [build_topology("ring", 4), build_topology("ring", 5), build_topology("line", 4)]
    rng = np.random.default_rng(2024)
    mcts = search_policy(rollouts=20)
    checked = 0
    for instance in range(210):
        topology = topologies[instance % len(topologies)]
        n = topology.num_qubits
        circuit = generate_benchmark("random", n, seed=instance, gates=int(rng.integers(1, 7)))
        mapping = random_mapping(n, instance)
        best = optimal_swap_count(circuit, topology, mapping)
        assert best is not None
        routed_all = {name: router(circuit, topology, mapping) for name, router in ROUTERS.items()}
        routed_all["oracle"] = route_optimal(circuit, topology, mapping)
        routed_all["mcts"] = route(circuit, topology, mapping, mcts)
        for name, routed in routed_all.items():
            report = verify(routed, circuit, topology)
            assert report.ok, f"{name} on instance {instance}: {report.summary()}"
            assert routed.swap_count >= best, f"{name} beat the oracle on instance {instance}"
        assert routed_all["oracle"].swap_count == best
        checked += 1
    assert checked >= 200
