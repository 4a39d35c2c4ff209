"""
Logical circuits: two-qubit gate sequences, their dependency DAG,
circuit-file I/O and the benchmark circuit families
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple
import sys

import networkx as nx
import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from utils.logger import get_logger
from utils.errors import CircuitError

logger = get_logger(__name__)

BENCHMARK_KINDS = ("regular", "erdos", "qft", "qv", "ghz", "bv", "hs", "random")


@dataclass(frozen=True)
class Gate:
    """Two-qubit gate at position `index` of the program"""
    index: int
    qubits: Tuple[int, int]

    def __post_init__(self):
        if len(self.qubits) != 2:
            raise CircuitError(f"gate {self.index} must act on exactly two qubits, got {self.qubits}")
        if self.qubits[0] == self.qubits[1]:
            raise CircuitError(f"gate {self.index} uses qubit {self.qubits[0]} twice")


@dataclass(frozen=True)
class LogicalCircuit:
    """Ordered two-qubit gates over `num_qubits` logical qubits"""
    num_qubits: int
    gates: Tuple[Gate, ...] = ()
    # Single-qubit entries dropped by parse_circuit, not part of equality
    dropped_single_qubit: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise CircuitError(f"num_qubits must be >= 1, got {self.num_qubits}")
        for position, gate in enumerate(self.gates):
            if gate.index != position:
                raise CircuitError(f"gate at position {position} carries index {gate.index}")
            for q in gate.qubits:
                if not 0 <= q < self.num_qubits:
                    raise CircuitError(
                        f"gate {gate.index}: qubit id {q} out of range for {self.num_qubits} qubits"
                    )

    @classmethod
    def from_pairs(cls, num_qubits: int, pairs: Iterable[Sequence[int]]) -> "LogicalCircuit":
        """Build a circuit from (q1, q2) pairs in program order"""
        gates = tuple(Gate(i, (int(a), int(b))) for i, (a, b) in enumerate(pairs))
        return cls(num_qubits, gates)

    def __len__(self) -> int:
        return len(self.gates)

    def pairs(self) -> List[Tuple[int, int]]:
        return [g.qubits for g in self.gates]

    def reversed(self) -> "LogicalCircuit":
        """Same gates in reverse program order (re-indexed)"""
        return LogicalCircuit.from_pairs(self.num_qubits, reversed(self.pairs()))


@dataclass(frozen=True)
class DagIndex:
    """Immediate-predecessor dependency DAG of a circuit"""
    predecessors: Tuple[frozenset, ...]
    successors: Tuple[frozenset, ...]
    depth: Tuple[int, ...]


def build_dag(circuit: LogicalCircuit) -> DagIndex:
    """
    Build the dependency DAG: each gate depends on the most recent earlier
    gate touching each of its two qubits

    Args:
        circuit: Circuit to index

    Returns:
        DagIndex with predecessors, successors and depths (1-based)
    """
    last_on_qubit = {}
    predecessors = []
    successors = [set() for _ in circuit.gates]
    depth = []
    for gate in circuit.gates:
        preds = frozenset(last_on_qubit[q] for q in gate.qubits if q in last_on_qubit)
        predecessors.append(preds)
        for p in preds:
            successors[p].add(gate.index)
        depth.append(1 + max((depth[p] for p in preds), default=0))
        for q in gate.qubits:
            last_on_qubit[q] = gate.index
    return DagIndex(
        predecessors=tuple(predecessors),
        successors=tuple(frozenset(s) for s in successors),
        depth=tuple(depth),
    )


def front_layer(dag: DagIndex, remaining: Iterable[int]) -> List[int]:
    """Remaining gates with no predecessor still remaining, in program order"""
    pending = set(remaining)
    return [g for g in sorted(pending) if not (dag.predecessors[g] & pending)]


# ============================================================
# Circuit JSON
# ============================================================

def parse_circuit(text: str) -> LogicalCircuit:
    """
    Parse circuit-file content

    Args:
        text: JSON of the form {"num_qubits": n, "gates": [[q1, q2], ...]}

    Returns:
        LogicalCircuit; single-qubit entries are dropped and counted in
        `dropped_single_qubit`
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise CircuitError(f"malformed circuit JSON: {e}") from e
    if not isinstance(data, dict) or "num_qubits" not in data or "gates" not in data:
        raise CircuitError("circuit JSON needs 'num_qubits' and 'gates' keys")
    num_qubits = data["num_qubits"]
    if not isinstance(num_qubits, int) or isinstance(num_qubits, bool):
        raise CircuitError(f"num_qubits must be an integer, got {num_qubits!r}")
    if not isinstance(data["gates"], list):
        raise CircuitError("'gates' must be a list")

    pairs = []
    dropped = 0
    for position, entry in enumerate(data["gates"]):
        if not isinstance(entry, list) or not all(isinstance(q, int) for q in entry):
            raise CircuitError(f"gate entry {position} must be a list of qubit ids, got {entry!r}")
        if len(entry) == 1:
            if not 0 <= entry[0] < num_qubits:
                raise CircuitError(f"gate entry {position}: qubit id {entry[0]} out of range")
            dropped += 1
            continue
        if len(entry) != 2:
            raise CircuitError(f"gate entry {position} has {len(entry)} qubits; only 1 or 2 supported")
        pairs.append(entry)

    circuit = LogicalCircuit.from_pairs(num_qubits, pairs)
    if dropped:
        logger.warning(f"Dropped {dropped} single-qubit gate(s); routing only needs two-qubit gates")
        circuit = LogicalCircuit(circuit.num_qubits, circuit.gates, dropped_single_qubit=dropped)
    return circuit


def serialize_circuit(circuit: LogicalCircuit) -> str:
    """Canonical (whitespace-free) circuit JSON"""
    payload = {"num_qubits": circuit.num_qubits, "gates": [list(g.qubits) for g in circuit.gates]}
    return json.dumps(payload, separators=(",", ":"))


def load_circuit(path) -> LogicalCircuit:
    """Read and parse a circuit file"""
    return parse_circuit(Path(path).read_text(encoding="utf-8"))


def save_circuit(circuit: LogicalCircuit, path):
    """Write a circuit file in canonical form"""
    Path(path).write_text(serialize_circuit(circuit), encoding="utf-8")


# ============================================================
# Benchmark families
# ============================================================

def _random_pairing(n: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    """Disjoint random pairs covering floor(n/2)*2 qubits"""
    perm = rng.permutation(n)
    return [(int(perm[2 * k]), int(perm[2 * k + 1])) for k in range(n // 2)]


def _qaoa_layers(graph: nx.Graph, layers: int) -> List[Tuple[int, int]]:
    edges = sorted(tuple(sorted(e)) for e in graph.edges())
    return [e for _ in range(layers) for e in edges]


def _check_layers(params: dict) -> int:
    layers = params.get("layers", 1)
    if not isinstance(layers, int) or layers < 1:
        raise CircuitError(f"QAOA layer count must be >= 1, got {layers!r}")
    return layers


def generate_benchmark(kind: str, num_qubits: int, seed: int = 0, **params) -> LogicalCircuit:
    """
    Generate a benchmark circuit (two-qubit gates only)

    Args:
        kind: One of regular, erdos, qft, qv, ghz, bv, hs, random
        num_qubits: Logical qubit count (>= 2)
        seed: RNG seed, the output is a pure function of (kind, n, seed, params)
        **params: layers (regular/erdos), p (erdos), hidden (bv bit string),
                  gates (random gate count)

    Returns:
        LogicalCircuit
    """
    if kind not in BENCHMARK_KINDS:
        raise CircuitError(f"unknown benchmark kind {kind!r}; expected one of {', '.join(BENCHMARK_KINDS)}")
    if not isinstance(num_qubits, int) or num_qubits < 2:
        raise CircuitError(f"benchmarks need num_qubits >= 2, got {num_qubits!r}")

    n = num_qubits
    rng = np.random.default_rng(seed)

    if kind == "ghz":
        pairs = [(i, i + 1) for i in range(n - 1)]

    elif kind == "qft":
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    elif kind == "bv":
        hidden = params.get("hidden")
        if hidden is None:
            hidden = "".join(str(int(b)) for b in rng.integers(0, 2, size=n - 1))
        if len(hidden) != n - 1 or set(hidden) - {"0", "1"}:
            raise CircuitError(f"bv hidden string must be {n - 1} bits of 0/1, got {hidden!r}")
        pairs = [(i, n - 1) for i, bit in enumerate(hidden) if bit == "1"]

    elif kind == "regular":
        layers = _check_layers(params)
        if n % 2 or n < 4:
            raise CircuitError(f"a 3-regular graph needs an even qubit count >= 4, got {n}")
        graph = nx.random_regular_graph(3, n, seed=seed)
        pairs = _qaoa_layers(graph, layers)

    elif kind == "erdos":
        layers = _check_layers(params)
        p = params.get("p", 0.5)
        if not 0 < p <= 1:
            raise CircuitError(f"edge probability must be in (0, 1], got {p}")
        graph = nx.erdos_renyi_graph(n, p, seed=seed)
        pairs = _qaoa_layers(graph, layers)

    elif kind == "qv":
        pairs = [pair for _ in range(n) for pair in _random_pairing(n, rng)]

    elif kind == "hs":
        first = _random_pairing(n, rng)
        second = _random_pairing(n, rng)
        pairs = first + first + second

    else:  # random
        m = params.get("gates", 10)
        if not isinstance(m, int) or m < 0:
            raise CircuitError(f"random gate count must be a non-negative integer, got {m!r}")
        pairs = [tuple(int(q) for q in rng.choice(n, size=2, replace=False)) for _ in range(m)]

    circuit = LogicalCircuit.from_pairs(n, pairs)
    logger.debug(f"Generated {kind} benchmark: {n} qubits, {len(circuit)} gates (seed={seed})")
    return circuit


def benchmark_width(kind: str, num_physical: int) -> int:
    """Largest logical width a benchmark family supports on `num_physical` qubits"""
    if kind == "regular" and num_physical % 2:
        return num_physical - 1
    return num_physical
