"""Qubit routing package: circuits, topologies, environment, search and learning"""
from .circuit import LogicalCircuit, Gate, generate_benchmark, load_circuit, save_circuit
from .topology import Topology, build_topology, load_topology, named_topology
from .env import Mapping, RoutedCircuit, init_state, route, step, verify

__all__ = [
    'LogicalCircuit', 'Gate', 'generate_benchmark', 'load_circuit', 'save_circuit',
    'Topology', 'build_topology', 'load_topology', 'named_topology',
    'Mapping', 'RoutedCircuit', 'init_state', 'route', 'step', 'verify',
]
