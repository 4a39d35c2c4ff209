"""
MCTS-guided training loop for the actor-critic

N circuits are stepped in parallel episodes by actions sampled from the
current policy. Visited states go to a FIFO replay buffer; once it holds more
than `threshold` states, every episode draws a batch, labels it with MCTS
(best action + root value) and applies one Adam update. The learning rate
decays once per episode.
"""
import json
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional
import sys

import numpy as np
import torch

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from utils.logger import get_logger
from utils.errors import AgentError, ConfigError, TrainingError

from .agent import (
    AgentConfig, AgentModel, OptimizerState, TrainingSample, ValueEvaluator,
    adam_step, encode_state, forward, gradients, loss_components, save_checkpoint,
)
from .baselines import complete_with_basic
from .circuit import BENCHMARK_KINDS, LogicalCircuit, benchmark_width, generate_benchmark
from .env import RouteRecorder, RoutingState, default_step_cap, init_state, random_mapping, step, trivial_mapping
from .mcts import DEFAULT_EXPLORATION, search
from .topology import Topology, load_topology

logger = get_logger(__name__)

TRAIN_MAPPINGS = ("trivial", "random")


@dataclass
class TrainConfig:
    """Training hyperparameters (defaults follow the reference setup)"""
    circuit_count: int = 8
    benchmark: str = "random"
    benchmark_params: Dict = field(default_factory=lambda: {"gates": 10})
    topology: str = "ring5"
    mapping: str = "trivial"
    episodes: int = 100
    rollouts: int = 200
    batch_size: int = 32
    threshold: int = 320
    capacity: int = 10_000
    alpha: float = 1.0
    auto_alpha: bool = False
    learning_rate: float = 0.1
    decay: float = 0.8
    exploration: float = DEFAULT_EXPLORATION
    seed: int = 0
    replenish: bool = True
    workers: int = 1
    lookahead: int = 48

    def validate(self):
        """Raise ConfigError on an inconsistent configuration"""
        positive = {
            "circuit_count": self.circuit_count, "rollouts": self.rollouts, "batch_size": self.batch_size,
            "threshold": self.threshold, "capacity": self.capacity, "workers": self.workers,
            "lookahead": self.lookahead,
        }
        for name, value in positive.items():
            if value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        if self.episodes < 0:
            raise ConfigError(f"episodes must be >= 0, got {self.episodes}")
        if self.threshold < self.batch_size:
            raise ConfigError(f"threshold ({self.threshold}) must be >= batch size ({self.batch_size})")
        if self.capacity < self.batch_size:
            raise ConfigError(f"capacity ({self.capacity}) must be >= batch size ({self.batch_size})")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.learning_rate <= 0 or not 0 < self.decay <= 1:
            raise ConfigError("learning_rate must be > 0 and decay in (0, 1]")
        if self.benchmark not in BENCHMARK_KINDS:
            raise ConfigError(f"unknown benchmark {self.benchmark!r}")
        if self.mapping not in TRAIN_MAPPINGS:
            raise ConfigError(f"training mapping must be one of {', '.join(TRAIN_MAPPINGS)}, got {self.mapping!r}")


class ReplayBuffer:
    """FIFO of visited non-terminal states; encoded only when sampled"""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.entries = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.entries)

    def push(self, state: RoutingState):
        if not state.remaining:
            raise TrainingError("terminal states cannot be buffered")
        self.entries.append(state)

    def sample(self, batch_size: int, rng: np.random.Generator) -> List[RoutingState]:
        """Uniform sample without replacement"""
        if batch_size > len(self.entries):
            raise TrainingError(f"cannot sample {batch_size} states from a buffer of {len(self.entries)}")
        picks = rng.choice(len(self.entries), size=batch_size, replace=False)
        return [self.entries[int(i)] for i in picks]


@dataclass
class _LiveCircuit:
    circuit: LogicalCircuit
    state: RoutingState
    cap: int
    steps: int = 0


@dataclass
class TrainResult:
    model: AgentModel
    optimizer: OptimizerState
    topology: Topology
    log: List[dict]
    updates: int
    alpha: float


class Trainer:
    """Stateful training run over one TrainConfig"""

    def __init__(self, config: TrainConfig):
        config.validate()
        self.config = config
        self.topology = load_topology(config.topology)
        self.width = benchmark_width(config.benchmark, self.topology.num_qubits)
        self.rng = np.random.default_rng(config.seed)
        self.model = AgentModel(AgentConfig.for_topology(
            self.topology, lookahead=config.lookahead, seed=config.seed))
        self.optimizer = OptimizerState(self.model, config.learning_rate, config.decay)
        self.buffer = ReplayBuffer(config.capacity)
        self.alpha = config.alpha
        self.alpha_fixed = not config.auto_alpha
        self.updates = 0
        self.log: List[dict] = []
        self._circuits_made = 0
        self.live: List[_LiveCircuit] = [self._new_circuit() for _ in range(config.circuit_count)]

    def _new_circuit(self) -> _LiveCircuit:
        circuit_seed = self.config.seed * 1_000_003 + self._circuits_made
        self._circuits_made += 1
        circuit = generate_benchmark(self.config.benchmark, self.width, seed=circuit_seed,
                                     **self.config.benchmark_params)
        n = self.topology.num_qubits
        mapping = trivial_mapping(n) if self.config.mapping == "trivial" else random_mapping(n, circuit_seed)
        state = init_state(circuit, self.topology, mapping)
        return _LiveCircuit(circuit, state, default_step_cap(circuit))

    def _sample_action(self, state: RoutingState) -> int:
        with torch.no_grad():
            probs, _ = forward(self.model, encode_state(state, self.model))
        p = probs.double().numpy()
        return int(self.rng.choice(len(p), p=p / p.sum()))

    def _step_live(self) -> Dict[str, list]:
        """Advance every live circuit by one sampled SWAP"""
        rewards, finished_swaps = [], []
        survivors: List[_LiveCircuit] = []
        for live in self.live:
            if not live.state.remaining:
                # pre-scheduled entirely by its initial mapping
                finished_swaps.append(0)
                if self.config.replenish:
                    survivors.append(self._new_circuit())
                continue
            action = self._sample_action(live.state)
            self.buffer.push(live.state)
            live.state, reward = step(live.state, self.topology.edges[action])
            live.steps += 1
            rewards.append(reward)

            if not live.state.remaining:
                finished_swaps.append(live.state.swaps_applied)
            elif live.steps >= live.cap:
                recorder = RouteRecorder(live.state)
                complete_with_basic(recorder)
                finished_swaps.append(live.state.swaps_applied + recorder.result().swap_count)
                logger.debug(f"Circuit hit the step cap ({live.cap}); finished with Basic moves")
            else:
                survivors.append(live)
                continue
            if self.config.replenish:
                survivors.append(self._new_circuit())
        self.live = survivors
        return {"rewards": rewards, "finished_swaps": finished_swaps}

    def _mcts_targets(self, states: List[RoutingState]) -> List[TrainingSample]:
        evaluator = ValueEvaluator(self.model)

        def label(state: RoutingState) -> TrainingSample:
            result = search(state, evaluator, self.config.rollouts, self.config.exploration)
            return TrainingSample(encode_state(state, self.model), result.best_index, result.root_value)

        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
                return list(executor.map(label, states))
        return [label(s) for s in states]

    def _update(self) -> float:
        states = self.buffer.sample(self.config.batch_size, self.rng)
        batch = self._mcts_targets(states)
        if not self.alpha_fixed:
            l1, l2 = loss_components(self.model, batch)
            self.alpha = l1 / l2 if l2 > 0 else 1.0
            self.alpha_fixed = True
            logger.info(f"Auto-balanced alpha = {self.alpha:.4f} (l1={l1:.4f}, l2={l2:.4f})")
        try:
            grads, batch_loss = gradients(self.model, batch, self.alpha)
        except AgentError as e:
            raise TrainingError(f"update {self.updates + 1} aborted: {e}") from e
        adam_step(self.model, grads, self.optimizer)
        self.updates += 1
        return batch_loss

    def run_episode(self, episode: int) -> dict:
        stepped = self._step_live()
        losses = []
        if len(self.buffer) > self.config.threshold:
            losses.append(self._update())
        self.optimizer.decay_lr()

        finished = stepped["finished_swaps"]
        rewards = stepped["rewards"]
        record = {
            "episode": episode,
            "mean_loss": float(np.mean(losses)) if losses else None,
            "updates": self.updates,
            "buffer_size": len(self.buffer),
            "lr": self.optimizer.lr,
            "mean_episode_swaps": float(np.mean(finished)) if finished else None,
            "mean_reward": float(np.mean(rewards)) if rewards else None,
        }
        logger.info(
            f"Episode {episode}: buffer={record['buffer_size']} updates={self.updates} "
            f"loss={record['mean_loss']} lr={record['lr']:.6g}"
        )
        return record

    def run(self, log_path: Optional[Path] = None) -> TrainResult:
        logger.info(f"Training on {self.topology.name} with {asdict(self.config)}")
        log_file = open(log_path, "w", encoding="utf-8") if log_path else None
        try:
            for episode in range(1, self.config.episodes + 1):
                record = self.run_episode(episode)
                self.log.append(record)
                if log_file:
                    log_file.write(json.dumps(record) + "\n")
                    log_file.flush()
        finally:
            if log_file:
                log_file.close()
        return TrainResult(self.model, self.optimizer, self.topology, self.log, self.updates, self.alpha)


def train(config: TrainConfig, checkpoint_path: Optional[Path] = None,
          log_path: Optional[Path] = None) -> TrainResult:
    """
    Train an actor-critic from scratch

    Args:
        config: Training configuration
        checkpoint_path: Where to write the final checkpoint (optional)
        log_path: Where to write the JSON-lines episode log (optional)

    Returns:
        TrainResult with the trained model, optimizer state and episode log
    """
    result = Trainer(config).run(log_path)
    if checkpoint_path:
        save_checkpoint(result.model, result.optimizer, checkpoint_path, result.topology)
    logger.info(f"Training finished: {config.episodes} episodes, {result.updates} updates")
    return result
