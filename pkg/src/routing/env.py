"""
Routing environment: mappings, the SWAP transition with cascaded gate
scheduling, the policy-driven routing driver, an independent verifier and
bidirectional initial-mapping refinement
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union
import sys

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from utils.logger import get_logger
from utils.errors import RoutingError, TopologyError

from .circuit import DagIndex, LogicalCircuit, build_dag
from .topology import Topology

logger = get_logger(__name__)

Edge = Tuple[int, int]


# ============================================================
# Mapping
# ============================================================

@dataclass(frozen=True)
class Mapping:
    """Bijection between logical and physical qubits"""
    log_to_phys: Tuple[int, ...]
    phys_to_log: Tuple[int, ...]

    def __post_init__(self):
        n = len(self.log_to_phys)
        if sorted(self.log_to_phys) != list(range(n)):
            raise RoutingError(f"log_to_phys is not a permutation of 0..{n - 1}: {self.log_to_phys}")
        if len(self.phys_to_log) != n or any(self.phys_to_log[p] != l for l, p in enumerate(self.log_to_phys)):
            raise RoutingError("phys_to_log is not the inverse of log_to_phys")

    @classmethod
    def from_log_to_phys(cls, log_to_phys: Sequence[int]) -> "Mapping":
        l2p = tuple(int(p) for p in log_to_phys)
        if sorted(l2p) != list(range(len(l2p))):
            raise RoutingError(f"not a permutation: {list(l2p)}")
        p2l = [0] * len(l2p)
        for l, p in enumerate(l2p):
            p2l[p] = l
        return cls(l2p, tuple(p2l))

    def __len__(self) -> int:
        return len(self.log_to_phys)

    def swap_physical(self, p: int, q: int) -> "Mapping":
        """Exchange the logical qubits sitting on physical qubits p and q"""
        l2p = list(self.log_to_phys)
        p2l = list(self.phys_to_log)
        lp, lq = p2l[p], p2l[q]
        p2l[p], p2l[q] = lq, lp
        l2p[lp], l2p[lq] = q, p
        return Mapping(tuple(l2p), tuple(p2l))


def trivial_mapping(n: int) -> Mapping:
    """Logical qubit i on physical qubit i"""
    if n < 1:
        raise RoutingError(f"mapping size must be >= 1, got {n}")
    return Mapping.from_log_to_phys(range(n))


def random_mapping(n: int, seed: int) -> Mapping:
    """Uniformly random permutation, deterministic per seed"""
    if n < 1:
        raise RoutingError(f"mapping size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return Mapping.from_log_to_phys(rng.permutation(n).tolist())


# ============================================================
# State and transition
# ============================================================

@dataclass(frozen=True)
class RoutingProblem:
    """Shared immutable context of an episode"""
    circuit: LogicalCircuit
    dag: DagIndex
    topology: Topology


@dataclass(frozen=True)
class RoutingState:
    """Remaining gates + current mapping; `scheduled_last` holds the gates
    scheduled by the transition that produced this state"""
    problem: RoutingProblem
    remaining: frozenset
    mapping: Mapping
    swaps_applied: int = 0
    scheduled_last: Tuple[int, ...] = ()

    @property
    def circuit(self) -> LogicalCircuit:
        return self.problem.circuit

    @property
    def topology(self) -> Topology:
        return self.problem.topology

    def ordered_remaining(self) -> List[int]:
        return sorted(self.remaining)

    def physical_pair(self, gate_index: int) -> Edge:
        a, b = self.problem.circuit.gates[gate_index].qubits
        return self.mapping.log_to_phys[a], self.mapping.log_to_phys[b]


def _schedule(problem: RoutingProblem, remaining: frozenset, mapping: Mapping) -> Tuple[frozenset, Tuple[int, ...]]:
    """Schedule, in program order, every remaining gate whose predecessors are
    scheduled and whose mapped qubits are adjacent. One pass reaches the
    fixpoint because predecessors precede their successors."""
    pending = set(remaining)
    done = []
    gates = problem.circuit.gates
    preds = problem.dag.predecessors
    l2p = mapping.log_to_phys
    for g in sorted(remaining):
        if preds[g] & pending:
            continue
        a, b = gates[g].qubits
        if problem.topology.is_adjacent(l2p[a], l2p[b]):
            pending.discard(g)
            done.append(g)
    return frozenset(pending), tuple(done)


def _full_mapping(mapping: Mapping, circuit: LogicalCircuit, topology: Topology) -> Mapping:
    if circuit.num_qubits > topology.num_qubits:
        raise RoutingError(
            f"circuit needs {circuit.num_qubits} qubits but topology {topology.name!r} has {topology.num_qubits}"
        )
    if len(mapping) != topology.num_qubits:
        raise RoutingError(
            f"mapping covers {len(mapping)} qubits; topology {topology.name!r} has {topology.num_qubits}"
        )
    return mapping


def init_state(circuit: LogicalCircuit, topology: Topology, mapping: Mapping,
               dag: Optional[DagIndex] = None) -> RoutingState:
    """
    Initial state; gates executable under the initial mapping are
    pre-scheduled (no reward is attributed to them)

    Args:
        circuit: Logical circuit (may be narrower than the topology)
        topology: Coupling graph
        mapping: Bijection over all physical qubits; logical ids beyond the
                 circuit width are idle
        dag: Optional precomputed DAG

    Returns:
        RoutingState with swaps_applied = 0
    """
    mapping = _full_mapping(mapping, circuit, topology)
    problem = RoutingProblem(circuit, dag or build_dag(circuit), topology)
    remaining, done = _schedule(problem, frozenset(range(len(circuit))), mapping)
    return RoutingState(problem, remaining, mapping, 0, done)


def is_terminal(state: RoutingState) -> bool:
    return not state.remaining


def step(state: RoutingState, action: Edge) -> Tuple[RoutingState, int]:
    """
    Apply a SWAP on a topology edge, then schedule every gate it unblocks

    Args:
        state: Non-terminal state
        action: Physical edge (p, q)

    Returns:
        (next state, reward) with reward = |G_t| - |G_t+1| - 1
    """
    if not state.remaining:
        raise RoutingError("step called on a terminal state")
    try:
        state.topology.edge_index(action)
    except TopologyError as e:
        raise RoutingError(str(e)) from None
    p, q = action
    mapping = state.mapping.swap_physical(p, q)
    remaining, done = _schedule(state.problem, state.remaining, mapping)
    reward = len(state.remaining) - len(remaining) - 1
    return RoutingState(state.problem, remaining, mapping, state.swaps_applied + 1, done), reward


# ============================================================
# Routed output
# ============================================================

@dataclass(frozen=True)
class Swap:
    edge: Edge


@dataclass(frozen=True)
class Exec:
    gate: int
    phys: Edge


Op = Union[Swap, Exec]


@dataclass(frozen=True)
class RoutedCircuit:
    """Initial mapping plus the ordered SWAP / gate-execution stream"""
    initial_mapping: Mapping
    ops: Tuple[Op, ...]
    swap_count: int
    fallback_used: bool = False

    def final_mapping(self) -> Mapping:
        """Replay the swaps from the initial mapping"""
        mapping = self.initial_mapping
        for op in self.ops:
            if isinstance(op, Swap):
                mapping = mapping.swap_physical(*op.edge)
        return mapping


class RouteRecorder:
    """Accumulates ops while a state is advanced through `step`"""

    def __init__(self, state: RoutingState):
        self.initial_mapping = state.mapping
        self.state = state
        self.ops: List[Op] = []
        self.fallback_used = False
        self._record_exec(state)

    def _record_exec(self, state: RoutingState):
        for g in state.scheduled_last:
            self.ops.append(Exec(g, state.physical_pair(g)))

    def apply(self, action: Edge) -> int:
        p, q = action
        next_state, reward = step(self.state, action)
        self.ops.append(Swap((min(p, q), max(p, q))))
        self._record_exec(next_state)
        self.state = next_state
        return reward

    def result(self) -> RoutedCircuit:
        swaps = sum(1 for op in self.ops if isinstance(op, Swap))
        return RoutedCircuit(self.initial_mapping, tuple(self.ops), swaps, self.fallback_used)


def default_step_cap(circuit: LogicalCircuit) -> int:
    return 10 * len(circuit) + 50


Policy = Callable[[RoutingState], Edge]


def route(circuit: LogicalCircuit, topology: Topology, mapping: Mapping, policy: Policy,
          step_cap: Optional[int] = None) -> RoutedCircuit:
    """
    Route a circuit by repeatedly applying a policy's SWAP choice

    Args:
        circuit: Logical circuit
        topology: Coupling graph
        mapping: Initial mapping
        policy: Function RoutingState -> edge
        step_cap: Maximum policy steps (default 10*|G_0| + 50); when reached,
                  the Basic router completes the routing and
                  `fallback_used` is set

    Returns:
        RoutedCircuit
    """
    cap = default_step_cap(circuit) if step_cap is None else step_cap
    if cap < 1:
        raise RoutingError(f"step_cap must be >= 1, got {cap}")
    recorder = RouteRecorder(init_state(circuit, topology, mapping))
    steps = 0
    while recorder.state.remaining and steps < cap:
        action = policy(recorder.state)
        if not topology.has_edge(action):
            raise RoutingError(f"policy returned {action}, which is not an edge of {topology.name!r}")
        recorder.apply(action)
        steps += 1

    if recorder.state.remaining:
        from .baselines import complete_with_basic

        logger.warning(
            f"Policy hit the step cap ({cap}) with {len(recorder.state.remaining)} gates left; "
            f"completing with the Basic router"
        )
        recorder.fallback_used = True
        complete_with_basic(recorder)

    return recorder.result()


# ============================================================
# Verification (independent of the scheduler above)
# ============================================================

@dataclass(frozen=True)
class Violation:
    kind: str
    op_index: int
    message: str


@dataclass
class VerificationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, op_index: int, message: str):
        self.violations.append(Violation(kind, op_index, message))

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"[{v.kind}] op {v.op_index}: {v.message}" for v in self.violations)


def verify(routed: RoutedCircuit, circuit: LogicalCircuit, topology: Topology) -> VerificationReport:
    """
    Replay a routed circuit and check it against the circuit and topology

    Args:
        routed: Routed output
        circuit: Logical circuit it claims to implement
        topology: Coupling graph

    Returns:
        VerificationReport (ok when no violations)
    """
    report = VerificationReport()
    if circuit.num_qubits > topology.num_qubits:
        report.add("width", -1, f"circuit uses {circuit.num_qubits} qubits but the topology has {topology.num_qubits}")
        return report
    l2p = list(routed.initial_mapping.log_to_phys)
    if sorted(l2p) != list(range(topology.num_qubits)):
        report.add("mapping", -1, f"initial mapping is not a permutation of the {topology.num_qubits} physical qubits")
        return report
    p2l = [0] * len(l2p)
    for l, p in enumerate(l2p):
        p2l[p] = l
    edge_set = {frozenset(e) for e in topology.edges}

    # Per-qubit program order: each gate on a qubit must follow the previous one
    order_on_qubit = {}
    previous_on_qubit = []
    for gate in circuit.gates:
        previous_on_qubit.append(tuple(order_on_qubit.get(q) for q in gate.qubits))
        for q in gate.qubits:
            order_on_qubit[q] = gate.index

    executed = [0] * len(circuit)
    swaps = 0
    for i, op in enumerate(routed.ops):
        if isinstance(op, Swap):
            swaps += 1
            p, q = op.edge
            if frozenset((p, q)) not in edge_set or p == q:
                report.add("topology", i, f"swap on non-edge ({p}, {q})")
                continue
            lp, lq = p2l[p], p2l[q]
            p2l[p], p2l[q] = lq, lp
            l2p[lp], l2p[lq] = q, p
        elif isinstance(op, Exec):
            g = op.gate
            if not 0 <= g < len(circuit):
                report.add("coverage", i, f"unknown gate index {g}")
                continue
            executed[g] += 1
            if executed[g] > 1:
                report.add("multiplicity", i, f"gate {g} executed {executed[g]} times")
            a, b = circuit.gates[g].qubits
            if set(op.phys) != {l2p[a], l2p[b]}:
                report.add("mapping", i, f"gate {g} recorded on {op.phys} but its qubits sit on ({l2p[a]}, {l2p[b]})")
            if frozenset(op.phys) not in edge_set:
                report.add("topology", i, f"gate {g} executed on non-adjacent pair {op.phys}")
            for pred in previous_on_qubit[g]:
                if pred is not None and executed[pred] == 0:
                    report.add("dependency", i, f"gate {g} executed before its predecessor {pred}")
        else:
            report.add("format", i, f"unrecognized op {op!r}")

    for g, count in enumerate(executed):
        if count == 0:
            report.add("coverage", len(routed.ops), f"gate {g} never executed")
    if swaps != routed.swap_count:
        report.add("count", len(routed.ops), f"swap_count {routed.swap_count} but {swaps} swaps in ops")
    return report


# ============================================================
# Bidirectional initial mapping
# ============================================================

Router = Callable[[LogicalCircuit, Topology, Mapping], RoutedCircuit]


def bidirectional_initial_mapping(circuit: LogicalCircuit, topology: Topology, router: Router,
                                  initial: Mapping) -> Mapping:
    """
    Refine an initial mapping: route forward, then route the reversed
    circuit from the final mapping, and adopt where that pass ends

    Args:
        circuit: Logical circuit
        topology: Coupling graph
        router: Routing procedure (circuit, topology, mapping) -> RoutedCircuit
        initial: Starting mapping

    Returns:
        Refined mapping
    """
    forward = router(circuit, topology, initial)
    backward = router(circuit.reversed(), topology, forward.final_mapping())
    refined = backward.final_mapping()
    logger.debug(f"Bidirectional mapping: forward {forward.swap_count} swaps, backward {backward.swap_count} swaps")
    return refined


# ============================================================
# Routed-output JSON
# ============================================================

def serialize_routed(routed: RoutedCircuit) -> str:
    ops = []
    for op in routed.ops:
        if isinstance(op, Swap):
            ops.append({"swap": list(op.edge)})
        else:
            ops.append({"exec": {"gate": op.gate, "phys": list(op.phys)}})
    payload = {
        "initial_mapping": list(routed.initial_mapping.log_to_phys),
        "ops": ops,
        "swap_count": routed.swap_count,
        "fallback_used": routed.fallback_used,
    }
    return json.dumps(payload, separators=(",", ":"))


def parse_routed(text: str) -> RoutedCircuit:
    try:
        data = json.loads(text)
        mapping = Mapping.from_log_to_phys(data["initial_mapping"])
        ops: List[Op] = []
        for entry in data["ops"]:
            if "swap" in entry:
                p, q = entry["swap"]
                ops.append(Swap((int(p), int(q))))
            else:
                p, q = entry["exec"]["phys"]
                ops.append(Exec(int(entry["exec"]["gate"]), (int(p), int(q))))
        return RoutedCircuit(mapping, tuple(ops), int(data["swap_count"]), bool(data.get("fallback_used", False)))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise RoutingError(f"malformed routed-circuit JSON: {e}") from e
