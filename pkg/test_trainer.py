#!/usr/bin/env python3
"""
Tests for the replay buffer and the MCTS-guided training loop
"""
import json
import sys
from pathlib import Path

import numpy as np
import pytest
import torch

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from routing.agent import AgentConfig, AgentModel, greedy_policy, load_checkpoint
from routing.circuit import LogicalCircuit, generate_benchmark
from routing.env import init_state, route, trivial_mapping
from routing.topology import build_topology
from routing.trainer import ReplayBuffer, TrainConfig, Trainer, train
from utils.errors import ConfigError, TrainingError

RING5 = build_topology("ring", 5)


def _quick_config(**overrides) -> TrainConfig:
    values = dict(circuit_count=4, benchmark_params={"gates": 6}, episodes=8, rollouts=10,
                  batch_size=4, threshold=8, capacity=50, lookahead=8, seed=1)
    values.update(overrides)
    return TrainConfig(**values)


def _state(seed):
    circuit = generate_benchmark("random", 5, seed=seed, gates=6)
    return init_state(circuit, RING5, trivial_mapping(5))


def test_replay_buffer_is_fifo_with_capacity():
    buffer = ReplayBuffer(3)
    states = [s for s in (_state(i) for i in range(20)) if s.remaining][:5]
    for s in states:
        buffer.push(s)
    assert len(buffer) == 3
    assert list(buffer.entries) == states[2:]


def test_replay_buffer_rejects_terminal_states():
    done = init_state(generate_benchmark("ghz", 5), RING5, trivial_mapping(5))
    with pytest.raises(TrainingError):
        ReplayBuffer(3).push(done)


def test_replay_buffer_sampling():
    buffer = ReplayBuffer(10)
    states = [s for s in (_state(i) for i in range(40)) if s.remaining][:8]
    for s in states:
        buffer.push(s)
    batch = buffer.sample(8, np.random.default_rng(0))
    assert len({id(s) for s in batch}) == 8
    again = buffer.sample(4, np.random.default_rng(5))
    assert [id(s) for s in again] == [id(s) for s in buffer.sample(4, np.random.default_rng(5))]
    with pytest.raises(TrainingError):
        buffer.sample(9, np.random.default_rng(0))


@pytest.mark.parametrize("overrides", [
    {"circuit_count": 0},
    {"episodes": -1},
    {"batch_size": 10, "threshold": 5},
    {"alpha": -1.0},
    {"decay": 1.5},
    {"benchmark": "nope"},
    {"mapping": "bidirectional"},
])
def test_config_validation(overrides):
    with pytest.raises(ConfigError):
        _quick_config(**overrides).validate()


def test_zero_episodes_returns_initial_model(tmp_path):
    config = _quick_config(episodes=0)
    log_path = tmp_path / "train.jsonl"
    result = train(config, checkpoint_path=tmp_path / "agent.ckpt", log_path=log_path)
    assert result.log == []
    assert log_path.read_text() == ""
    fresh = AgentModel(AgentConfig.for_topology(RING5, lookahead=8, seed=1))
    loaded, _ = load_checkpoint(tmp_path / "agent.ckpt", RING5)
    for (name, a), (_, b) in zip(fresh.named_parameters(), loaded.named_parameters()):
        assert torch.equal(a, b), name


def test_training_log_and_update_gating(tmp_path):
    config = _quick_config()
    log_path = tmp_path / "train.jsonl"
    result = train(config, log_path=log_path)
    records = [json.loads(line) for line in log_path.read_text().splitlines()]
    assert records == result.log
    assert [r["episode"] for r in records] == list(range(1, 9))
    assert set(records[0]) == {"episode", "mean_loss", "updates", "buffer_size", "lr",
                               "mean_episode_swaps", "mean_reward"}

    previous_updates = 0
    for r in records:
        assert r["lr"] == 0.1 * 0.8 ** r["episode"]
        assert r["buffer_size"] <= config.capacity
        if r["buffer_size"] > config.threshold:
            assert r["updates"] == previous_updates + 1
            assert r["mean_loss"] is not None and r["mean_loss"] >= 0
        else:
            assert r["updates"] == previous_updates
            assert r["mean_loss"] is None
        previous_updates = r["updates"]
    assert result.updates >= 1


def test_training_is_deterministic(tmp_path):
    config = _quick_config(episodes=6)
    train(config, checkpoint_path=tmp_path / "a.ckpt", log_path=tmp_path / "a.jsonl")
    train(config, checkpoint_path=tmp_path / "b.ckpt", log_path=tmp_path / "b.jsonl")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_parallel_targets_match_serial(tmp_path):
    serial = train(_quick_config(episodes=6, workers=1))
    parallel = train(_quick_config(episodes=6, workers=3))
    assert serial.log == parallel.log
    for (name, a), (_, b) in zip(serial.model.named_parameters(), parallel.model.named_parameters()):
        assert torch.equal(a, b), name


def test_live_circuits_replenish_or_retire():
    keep = Trainer(_quick_config(episodes=40))
    for episode in range(1, 41):
        keep.run_episode(episode)
        assert len(keep.live) == 4
    # the step cap (10 * 6 + 50) bounds every episode
    strict = Trainer(_quick_config(episodes=120, replenish=False, threshold=1000, capacity=2000))
    for episode in range(1, 121):
        strict.run_episode(episode)
    assert strict.live == []


def test_auto_alpha_balances_first_batch():
    trainer = Trainer(_quick_config(auto_alpha=True))
    for episode in range(1, 9):
        trainer.run_episode(episode)
    assert trainer.updates >= 1
    assert trainer.alpha > 0
    assert trainer.alpha_fixed


@pytest.mark.slow
def test_default_run_fills_buffer_and_updates():
    config = TrainConfig(episodes=45, seed=0)
    result = Trainer(config).run()
    assert result.log[-1]["buffer_size"] > config.threshold
    assert result.updates >= 1
    assert result.optimizer.lr == 0.1 * 0.8 ** 45


@pytest.mark.slow
def test_trained_agent_beats_untrained_agent():
    config = TrainConfig(episodes=100, seed=0)
    trained = train(config).model
    untrained = AgentModel(AgentConfig.for_topology(RING5, seed=0))

    def mean_swaps(model):
        swaps = []
        for seed in range(50):
            circuit = generate_benchmark("random", 5, seed=50_000 + seed, gates=10)
            routed = route(circuit, RING5, trivial_mapping(5), greedy_policy(model))
            swaps.append(routed.swap_count)
        return float(np.mean(swaps))

    assert mean_swaps(trained) <= mean_swaps(untrained)
