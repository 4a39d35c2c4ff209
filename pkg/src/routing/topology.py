"""
Coupling graphs (ring, line, grid, heavy-hex Guadalupe) and all-pairs
hop distances
"""
import hashlib
import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Tuple
import sys

import networkx as nx
import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from utils.logger import get_logger
from utils.errors import TopologyError

logger = get_logger(__name__)

# 16-qubit heavy-hexagon layout, max degree 3
GUADALUPE_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 5), (1, 4), (4, 7), (5, 8), (6, 7),
    (7, 10), (8, 9), (8, 11), (10, 12), (11, 14), (12, 13), (12, 15), (13, 14),
)

TOPOLOGY_KINDS = ("ring", "line", "grid", "guadalupe")


@dataclass(frozen=True)
class Topology:
    """
    Undirected, connected coupling graph over physical qubits

    Edges are stored canonically as sorted (p, q) pairs with p < q; the
    position of an edge in `edges` is its action index.
    """
    num_qubits: int
    edges: Tuple[Tuple[int, int], ...]
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if self.num_qubits < 2:
            raise TopologyError(f"a topology needs at least 2 qubits, got {self.num_qubits}")
        canonical = []
        for p, q in self.edges:
            if p == q:
                raise TopologyError(f"self-loop on qubit {p}")
            if not (0 <= p < self.num_qubits and 0 <= q < self.num_qubits):
                raise TopologyError(f"edge ({p}, {q}) references a qubit outside 0..{self.num_qubits - 1}")
            canonical.append((min(p, q), max(p, q)))
        if len(set(canonical)) != len(canonical):
            raise TopologyError("duplicate edges in topology")
        object.__setattr__(self, "edges", tuple(sorted(canonical)))
        if not nx.is_connected(self.graph):
            raise TopologyError(f"topology {self.name!r} is not connected")

    @cached_property
    def graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.num_qubits))
        graph.add_edges_from(self.edges)
        return graph

    @cached_property
    def distance(self) -> np.ndarray:
        return all_pairs_distance(self)

    @cached_property
    def _edge_lookup(self) -> Dict[Tuple[int, int], int]:
        return {edge: i for i, edge in enumerate(self.edges)}

    @cached_property
    def _neighbors(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(tuple(sorted(self.graph.neighbors(p))) for p in range(self.num_qubits))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def diameter(self) -> int:
        return int(self.distance.max())

    def is_adjacent(self, p: int, q: int) -> bool:
        return (min(p, q), max(p, q)) in self._edge_lookup

    def has_edge(self, edge) -> bool:
        p, q = edge
        return self.is_adjacent(p, q)

    def edge_index(self, edge) -> int:
        """Action index of an edge, raising TopologyError if it is not a coupling"""
        p, q = edge
        try:
            return self._edge_lookup[(min(p, q), max(p, q))]
        except KeyError:
            raise TopologyError(f"({p}, {q}) is not an edge of topology {self.name!r}") from None

    def neighbors(self, p: int) -> Tuple[int, ...]:
        """Neighbors of physical qubit p in ascending order"""
        return self._neighbors[p]

    def max_degree(self) -> int:
        return max(len(n) for n in self._neighbors)

    def fingerprint(self) -> str:
        """SHA-256 of the canonical topology JSON"""
        return hashlib.sha256(serialize_topology(self).encode("utf-8")).hexdigest()


def all_pairs_distance(topology: Topology) -> np.ndarray:
    """
    Unweighted shortest-path hop counts between every pair of physical qubits

    Args:
        topology: Connected topology

    Returns:
        |P| x |P| integer matrix
    """
    graph = topology.graph
    if not nx.is_connected(graph):
        raise TopologyError(f"topology {topology.name!r} is disconnected; distances undefined")
    dist = np.zeros((topology.num_qubits, topology.num_qubits), dtype=np.int64)
    for source, lengths in nx.all_pairs_shortest_path_length(graph):
        for target, hops in lengths.items():
            dist[source, target] = hops
    return dist


def build_topology(kind: str, *dims: int) -> Topology:
    """
    Build one of the standard coupling graphs

    Args:
        kind: "ring" (n), "line" (n), "grid" (rows, cols) or "guadalupe"
        *dims: Dimensions for the kind

    Returns:
        Topology
    """
    if kind == "ring":
        if len(dims) != 1 or dims[0] < 3:
            raise TopologyError(f"ring needs a single size n >= 3, got {dims}")
        n = dims[0]
        return Topology(n, tuple((i, (i + 1) % n) for i in range(n)), name=f"ring{n}")

    if kind == "line":
        if len(dims) != 1 or dims[0] < 2:
            raise TopologyError(f"line needs a single size n >= 2, got {dims}")
        n = dims[0]
        return Topology(n, tuple((i, i + 1) for i in range(n - 1)), name=f"line{n}")

    if kind == "grid":
        if len(dims) != 2 or dims[0] < 1 or dims[1] < 1 or dims[0] * dims[1] < 2:
            raise TopologyError(f"grid needs rows, cols >= 1 with rows*cols >= 2, got {dims}")
        rows, cols = dims
        edges = []
        for r in range(rows):
            for c in range(cols):
                node = r * cols + c
                if c + 1 < cols:
                    edges.append((node, node + 1))
                if r + 1 < rows:
                    edges.append((node, node + cols))
        return Topology(rows * cols, tuple(edges), name=f"grid{rows}x{cols}")

    if kind == "guadalupe":
        if dims:
            raise TopologyError("guadalupe takes no dimensions")
        return Topology(16, GUADALUPE_EDGES, name="guadalupe")

    raise TopologyError(f"unknown topology kind {kind!r}; expected one of {', '.join(TOPOLOGY_KINDS)}")


_PRESETS = {
    "tokyo": ("grid", 3, 4),
    "oqc": ("ring", 8),
    "guadalupe": ("guadalupe",),
}


def named_topology(name: str) -> Topology:
    """
    Resolve a preset name: tokyo, oqc, guadalupe, ringN, lineN or gridRxC

    Args:
        name: Preset name (case-insensitive)

    Returns:
        Topology
    """
    key = name.strip().lower()
    if key in _PRESETS:
        kind, *dims = _PRESETS[key]
        topology = build_topology(kind, *dims)
        return Topology(topology.num_qubits, topology.edges, name=key)
    match = re.fullmatch(r"(ring|line)(\d+)", key)
    if match:
        return build_topology(match.group(1), int(match.group(2)))
    match = re.fullmatch(r"grid(\d+)x(\d+)", key)
    if match:
        return build_topology("grid", int(match.group(1)), int(match.group(2)))
    raise TopologyError(f"unknown topology preset {name!r}")


# ============================================================
# Topology JSON
# ============================================================

def parse_topology(text: str, name: str = "custom") -> Topology:
    """Parse {"num_qubits": n, "edges": [[p, q], ...]}"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise TopologyError(f"malformed topology JSON: {e}") from e
    if not isinstance(data, dict) or "num_qubits" not in data or "edges" not in data:
        raise TopologyError("topology JSON needs 'num_qubits' and 'edges' keys")
    num_qubits = data["num_qubits"]
    if not isinstance(num_qubits, int) or isinstance(num_qubits, bool):
        raise TopologyError(f"num_qubits must be an integer, got {num_qubits!r}")
    if not isinstance(data["edges"], list):
        raise TopologyError("'edges' must be a list")
    edges: List[Tuple[int, int]] = []
    for entry in data["edges"]:
        if not isinstance(entry, list) or len(entry) != 2 or not all(isinstance(q, int) for q in entry):
            raise TopologyError(f"edge entries must be [p, q] integer pairs, got {entry!r}")
        edges.append((entry[0], entry[1]))
    return Topology(num_qubits, tuple(edges), name=str(data.get("name", name)))


def serialize_topology(topology: Topology) -> str:
    payload = {"num_qubits": topology.num_qubits, "edges": [list(e) for e in topology.edges]}
    return json.dumps(payload, separators=(",", ":"))


def load_topology(spec: str) -> Topology:
    """
    Load a topology from a JSON file path or a preset name

    Args:
        spec: Existing file path, or a name accepted by named_topology

    Returns:
        Topology
    """
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return parse_topology(path.read_text(encoding="utf-8"), name=path.stem)
    return named_topology(spec)
