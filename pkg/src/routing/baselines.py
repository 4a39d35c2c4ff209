"""
Classical reference routers (Basic, Stochastic, SABRE-lite) and the
exhaustive minimal-SWAP oracle
"""
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import sys

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from utils.logger import get_logger
from utils.errors import RoutingError

from .circuit import LogicalCircuit, front_layer
from .env import (
    Edge, Mapping, RouteRecorder, RoutedCircuit, RoutingState, Router,
    init_state, step,
)
from .topology import Topology

logger = get_logger(__name__)

ROUTER_KINDS = ("basic", "stochastic", "sabre")

# Fixed defaults of the reference routers
STOCHASTIC_TRIALS = 20
STOCHASTIC_ATTEMPT_CAP = 50
SABRE_WINDOW = 20
SABRE_LOOKAHEAD_WEIGHT = 0.5
SABRE_DECAY = 0.001
ORACLE_STATE_LIMIT = 200_000


@dataclass(frozen=True)
class RouterConfig:
    """Parameters of a classical router"""
    kind: str = "sabre"
    trials: int = STOCHASTIC_TRIALS
    lookahead_weight: float = SABRE_LOOKAHEAD_WEIGHT
    decay: float = SABRE_DECAY
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ROUTER_KINDS:
            raise RoutingError(f"unknown router kind {self.kind!r}; expected one of {', '.join(ROUTER_KINDS)}")
        if self.trials < 1:
            raise RoutingError(f"trials must be >= 1, got {self.trials}")
        if self.lookahead_weight < 0 or self.decay < 0:
            raise RoutingError("lookahead_weight and decay must be >= 0")


def make_router(config: RouterConfig) -> Router:
    """Bind a RouterConfig into a (circuit, topology, mapping) -> RoutedCircuit callable"""
    if config.kind == "basic":
        return route_basic
    if config.kind == "stochastic":
        return lambda c, t, m: route_stochastic(c, t, m, trials=config.trials, seed=config.seed)
    return lambda c, t, m: route_sabre(c, t, m, lookahead_weight=config.lookahead_weight, decay=config.decay)


def _log_summary(name: str, circuit: LogicalCircuit, topology: Topology, routed: RoutedCircuit):
    logger.debug(f"{name}: {len(circuit)} gates on {topology.name} -> {routed.swap_count} swaps")


# ============================================================
# Basic
# ============================================================

def shortest_path(topology: Topology, source: int, target: int) -> List[int]:
    """Breadth-first shortest path, ties broken by the lowest next vertex"""
    dist = topology.distance
    path = [source]
    current = source
    while current != target:
        current = min(n for n in topology.neighbors(current) if dist[n, target] == dist[current, target] - 1)
        path.append(current)
    return path


def basic_walk(recorder: RouteRecorder):
    """Bring the earliest unscheduled gate's qubits together along a shortest
    path, moving the qubit on the lower-indexed physical endpoint"""
    state = recorder.state
    gate = min(state.remaining)
    p1, p2 = state.physical_pair(gate)
    path = shortest_path(state.topology, min(p1, p2), max(p1, p2))
    for current, nxt in zip(path[:-2], path[1:-1]):
        if gate not in recorder.state.remaining:
            break
        recorder.apply((current, nxt))


def complete_with_basic(recorder: RouteRecorder):
    """Finish routing from the recorder's current state with Basic moves"""
    while recorder.state.remaining:
        basic_walk(recorder)


def route_basic(circuit: LogicalCircuit, topology: Topology, mapping: Mapping) -> RoutedCircuit:
    """
    Greedy router: route gates in program order along shortest paths

    Args:
        circuit: Logical circuit
        topology: Coupling graph
        mapping: Initial mapping

    Returns:
        RoutedCircuit
    """
    recorder = RouteRecorder(init_state(circuit, topology, mapping))
    complete_with_basic(recorder)
    routed = recorder.result()
    _log_summary("basic", circuit, topology, routed)
    return routed


# ============================================================
# Stochastic
# ============================================================

def _layer_qubits(state: RoutingState, layer) -> set:
    return {p for g in layer if g in state.remaining for p in state.physical_pair(g)}


def _random_attempt(state: RoutingState, layer: List[int], rng: np.random.Generator,
                    attempt_cap: int) -> Optional[List[Edge]]:
    """Random swaps touching the layer until the whole layer schedules"""
    layer_set = set(layer)
    actions = []
    edges = state.topology.edges
    while layer_set & state.remaining:
        if len(actions) >= attempt_cap:
            return None
        qubits = _layer_qubits(state, layer_set)
        candidates = [e for e in edges if e[0] in qubits or e[1] in qubits]
        action = candidates[int(rng.integers(len(candidates)))]
        state, _ = step(state, action)
        actions.append(action)
    return actions


def route_stochastic(circuit: LogicalCircuit, topology: Topology, mapping: Mapping,
                     trials: int = STOCHASTIC_TRIALS, seed: int = 0,
                     attempt_cap: int = STOCHASTIC_ATTEMPT_CAP) -> RoutedCircuit:
    """
    Per front layer, keep the shortest of `trials` random swap sequences

    Args:
        circuit: Logical circuit
        topology: Coupling graph
        mapping: Initial mapping
        trials: Random attempts per layer (>= 1)
        seed: RNG seed; output is deterministic per seed
        attempt_cap: Maximum swaps per attempt

    Returns:
        RoutedCircuit
    """
    if trials < 1:
        raise RoutingError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    recorder = RouteRecorder(init_state(circuit, topology, mapping))
    while recorder.state.remaining:
        layer = front_layer(recorder.state.problem.dag, recorder.state.remaining)
        best = None
        for _ in range(trials):
            attempt = _random_attempt(recorder.state, layer, rng, attempt_cap)
            if attempt is not None and (best is None or len(attempt) < len(best)):
                best = attempt
        if best is None:
            # every attempt hit the cap; a Basic move guarantees progress
            basic_walk(recorder)
            continue
        for action in best:
            recorder.apply(action)
    routed = recorder.result()
    _log_summary("stochastic", circuit, topology, routed)
    return routed


# ============================================================
# SABRE-lite
# ============================================================

def _sabre_score(state: RoutingState, mapping: Mapping, front: List[int], window: List[int],
                 dist: np.ndarray, lookahead_weight: float) -> float:
    gates = state.circuit.gates
    l2p = mapping.log_to_phys
    score = float(sum(dist[l2p[gates[g].qubits[0]], l2p[gates[g].qubits[1]]] for g in front))
    if window and lookahead_weight:
        ahead = sum(dist[l2p[gates[g].qubits[0]], l2p[gates[g].qubits[1]]] for g in window)
        score += lookahead_weight * ahead / len(window)
    return score


def route_sabre(circuit: LogicalCircuit, topology: Topology, mapping: Mapping,
                lookahead_weight: float = SABRE_LOOKAHEAD_WEIGHT, decay: float = SABRE_DECAY,
                window: int = SABRE_WINDOW) -> RoutedCircuit:
    """
    SABRE-style heuristic router

    Scores every swap touching a front-layer qubit by front-layer distance
    plus a weighted mean distance over the next `window` gates, scaled by a
    decay penalty on recently swapped qubits. After 10 * diameter swaps
    without progress, a Basic move (release valve) forces progress.

    Args:
        circuit: Logical circuit
        topology: Coupling graph
        mapping: Initial mapping
        lookahead_weight: Weight of the lookahead term (>= 0)
        decay: Penalty increment per recent swap on a qubit (0 disables)
        window: Lookahead gate count beyond the front layer

    Returns:
        RoutedCircuit
    """
    if lookahead_weight < 0 or decay < 0:
        raise RoutingError("lookahead_weight and decay must be >= 0")
    dist = topology.distance
    recorder = RouteRecorder(init_state(circuit, topology, mapping))
    decay_values = np.ones(topology.num_qubits)
    valve = max(1, 10 * topology.diameter)
    stalled = 0

    while recorder.state.remaining:
        state = recorder.state
        if stalled >= valve:
            logger.warning(f"sabre: {stalled} swaps without progress on {topology.name}, applying release valve")
            basic_walk(recorder)
            decay_values[:] = 1.0
            stalled = 0
            continue

        front = front_layer(state.problem.dag, state.remaining)
        front_set = set(front)
        ahead = [g for g in state.ordered_remaining() if g not in front_set][:window]
        front_qubits = _layer_qubits(state, front)

        best_edge = None
        best_score = None
        for edge in topology.edges:
            p, q = edge
            if p not in front_qubits and q not in front_qubits:
                continue
            trial = state.mapping.swap_physical(p, q)
            score = _sabre_score(state, trial, front, ahead, dist, lookahead_weight)
            score *= max(decay_values[p], decay_values[q])
            if best_score is None or score < best_score:
                best_edge, best_score = edge, score

        recorder.apply(best_edge)
        decay_values[best_edge[0]] += decay
        decay_values[best_edge[1]] += decay
        if recorder.state.scheduled_last:
            decay_values[:] = 1.0
            stalled = 0
        else:
            stalled += 1

    routed = recorder.result()
    _log_summary("sabre", circuit, topology, routed)
    return routed


# ============================================================
# Exhaustive oracle
# ============================================================

def _canonical_key(state: RoutingState) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Placement of the qubits that still matter + sorted remaining gates"""
    gates = state.circuit.gates
    active = {q for g in state.remaining for q in gates[g].qubits}
    placement = tuple(l if l in active else -1 for l in state.mapping.phys_to_log)
    return placement, tuple(sorted(state.remaining))


def optimal_actions(state: RoutingState, limit: int = ORACLE_STATE_LIMIT) -> Optional[List[Edge]]:
    """
    Breadth-first search for a minimal SWAP sequence from `state`

    Args:
        state: Starting state
        limit: Maximum distinct states to visit

    Returns:
        Action list (empty when already terminal), or None when the search
        exceeded `limit` states
    """
    if not state.remaining:
        return []
    start = _canonical_key(state)
    parents: Dict[tuple, Optional[Tuple[tuple, Edge]]] = {start: None}
    queue = deque([(state, start)])
    while queue:
        current, key = queue.popleft()
        for edge in current.topology.edges:
            nxt, _ = step(current, edge)
            nxt_key = _canonical_key(nxt)
            if nxt_key in parents:
                continue
            parents[nxt_key] = (key, edge)
            if not nxt.remaining:
                actions = []
                cursor = nxt_key
                while parents[cursor] is not None:
                    cursor, action = parents[cursor]
                    actions.append(action)
                return actions[::-1]
            if len(parents) > limit:
                logger.warning(f"oracle exhausted after {len(parents)} states")
                return None
            queue.append((nxt, nxt_key))
    return None


def optimal_swap_count(circuit: LogicalCircuit, topology: Topology, mapping: Mapping,
                       limit: int = ORACLE_STATE_LIMIT) -> Optional[int]:
    """
    Minimal number of SWAPs to route the circuit from `mapping`

    Returns:
        Swap count, or None when the search is exhausted
    """
    actions = optimal_actions(init_state(circuit, topology, mapping), limit)
    return None if actions is None else len(actions)


def route_optimal(circuit: LogicalCircuit, topology: Topology, mapping: Mapping,
                  limit: int = ORACLE_STATE_LIMIT) -> RoutedCircuit:
    """Route along one minimal SWAP sequence (small instances only)"""
    recorder = RouteRecorder(init_state(circuit, topology, mapping))
    actions = optimal_actions(recorder.state, limit)
    if actions is None:
        raise RoutingError(f"oracle exhausted its {limit}-state budget; instance too large")
    for action in actions:
        recorder.apply(action)
    routed = recorder.result()
    _log_summary("oracle", circuit, topology, routed)
    return routed


def oracle_policy(limit: int = ORACLE_STATE_LIMIT):
    """Policy playing the first action of a minimal sequence from each state"""
    def policy(state: RoutingState) -> Edge:
        actions = optimal_actions(state, limit)
        if not actions:
            raise RoutingError("oracle exhausted its state budget")
        return actions[0]
    return policy
