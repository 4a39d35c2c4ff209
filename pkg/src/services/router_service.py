"""
Router service: builds a routing procedure from a method name, applies an
initial-mapping strategy and optionally verifies the output
"""
import math
from pathlib import Path
from typing import Optional
import sys

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from utils.logger import get_logger
from utils.errors import ConfigError, VerificationError

from routing.agent import AgentModel, ValueEvaluator, greedy_policy, load_checkpoint
from routing.baselines import (
    ORACLE_STATE_LIMIT, SABRE_DECAY, SABRE_LOOKAHEAD_WEIGHT, STOCHASTIC_TRIALS,
    route_basic, route_optimal, route_sabre, route_stochastic,
)
from routing.circuit import LogicalCircuit
from routing.env import (
    Mapping, RoutedCircuit, bidirectional_initial_mapping, random_mapping, route, trivial_mapping, verify,
)
from routing.mcts import DEFAULT_ROLLOUTS, search_policy, zero_value
from routing.topology import Topology

logger = get_logger(__name__)


class RouterService:
    """Service for routing circuits onto one topology with a chosen router"""

    # Routing methods
    METHOD_BASIC = "basic"
    METHOD_STOCHASTIC = "stochastic"
    METHOD_SABRE = "sabre"
    METHOD_MCTS = "mcts"
    METHOD_AGENT = "agent"
    METHOD_ORACLE = "oracle"
    METHODS = (METHOD_BASIC, METHOD_STOCHASTIC, METHOD_SABRE, METHOD_MCTS, METHOD_AGENT, METHOD_ORACLE)

    # Initial-mapping strategies
    MAPPING_TRIVIAL = "trivial"
    MAPPING_RANDOM = "random"
    MAPPING_BIDIRECTIONAL = "bidirectional"
    MAPPINGS = (MAPPING_TRIVIAL, MAPPING_RANDOM, MAPPING_BIDIRECTIONAL)

    def __init__(self, topology: Topology, method: str = METHOD_SABRE, seed: int = 0,
                 checkpoint: Optional[Path] = None, model: Optional[AgentModel] = None,
                 trials: int = STOCHASTIC_TRIALS, lookahead_weight: float = SABRE_LOOKAHEAD_WEIGHT,
                 decay: float = SABRE_DECAY, rollouts: int = DEFAULT_ROLLOUTS,
                 exploration: float = math.sqrt(2), oracle_limit: int = ORACLE_STATE_LIMIT):
        """
        Initialize router service

        Args:
            topology: Target coupling graph
            method: One of METHODS
            seed: Seed for the stochastic router and random mappings
            checkpoint: Trained agent (required for "agent"; optional value
                        function for "mcts")
            model: Already loaded agent, used instead of `checkpoint`
            trials, lookahead_weight, decay: Classical router parameters
            rollouts, exploration: MCTS parameters
            oracle_limit: State budget of the exhaustive oracle
        """
        if method not in self.METHODS:
            raise ConfigError(f"unknown router {method!r}; expected one of {', '.join(self.METHODS)}")
        self.topology = topology
        self.method = method
        self.seed = seed
        self.trials = trials
        self.lookahead_weight = lookahead_weight
        self.decay = decay
        self.rollouts = rollouts
        self.exploration = exploration
        self.oracle_limit = oracle_limit

        self.model = model
        if self.model is None and checkpoint is not None:
            self.model, _ = load_checkpoint(checkpoint, topology)
        if method == self.METHOD_AGENT and self.model is None:
            raise ConfigError("the agent router needs a checkpoint")

        logger.info(f"RouterService initialized with method: {method} on {topology.name}")

    def route_with_mapping(self, circuit: LogicalCircuit, mapping: Mapping) -> RoutedCircuit:
        """
        Route from a fixed initial mapping

        Args:
            circuit: Logical circuit
            mapping: Initial mapping over all physical qubits

        Returns:
            RoutedCircuit
        """
        if self.method == self.METHOD_BASIC:
            return route_basic(circuit, self.topology, mapping)
        if self.method == self.METHOD_STOCHASTIC:
            return route_stochastic(circuit, self.topology, mapping, trials=self.trials, seed=self.seed)
        if self.method == self.METHOD_SABRE:
            return route_sabre(circuit, self.topology, mapping,
                               lookahead_weight=self.lookahead_weight, decay=self.decay)
        if self.method == self.METHOD_ORACLE:
            return route_optimal(circuit, self.topology, mapping, self.oracle_limit)
        if self.method == self.METHOD_MCTS:
            evaluator = ValueEvaluator(self.model) if self.model is not None else zero_value
            return route(circuit, self.topology, mapping, search_policy(evaluator, self.rollouts, self.exploration))
        return route(circuit, self.topology, mapping, greedy_policy(self.model))

    def initial_mapping(self, circuit: LogicalCircuit, strategy: str = MAPPING_TRIVIAL) -> Mapping:
        """
        Build an initial mapping

        Args:
            circuit: Circuit to be routed (used by the bidirectional passes)
            strategy: trivial, random or bidirectional (refines the trivial mapping)

        Returns:
            Mapping over all physical qubits
        """
        n = self.topology.num_qubits
        if strategy == self.MAPPING_TRIVIAL:
            return trivial_mapping(n)
        if strategy == self.MAPPING_RANDOM:
            return random_mapping(n, self.seed)
        if strategy == self.MAPPING_BIDIRECTIONAL:
            return bidirectional_initial_mapping(
                circuit, self.topology, lambda c, t, m: self.route_with_mapping(c, m), trivial_mapping(n))
        raise ConfigError(f"unknown mapping strategy {strategy!r}; expected one of {', '.join(self.MAPPINGS)}")

    def route(self, circuit: LogicalCircuit, mapping: str = MAPPING_TRIVIAL,
              verify_output: bool = False) -> RoutedCircuit:
        """
        Route a circuit

        Args:
            circuit: Logical circuit
            mapping: Initial-mapping strategy
            verify_output: Re-check the result with the independent verifier

        Returns:
            RoutedCircuit

        Raises:
            VerificationError: the routed output failed verification
        """
        routed = self.route_with_mapping(circuit, self.initial_mapping(circuit, mapping))
        if routed.fallback_used:
            logger.warning(f"{self.method} router needed the Basic fallback")
        if verify_output:
            report = verify(routed, circuit, self.topology)
            if not report.ok:
                logger.error(f"Verification failed: {report.summary()}")
                raise VerificationError(report)
            logger.debug("Routed output verified")
        return routed
