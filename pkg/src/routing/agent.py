"""
Transformer actor-critic for SWAP selection

State encoding: the first `lookahead` remaining gates, each represented by
the mean of its two physical-qubit embeddings plus a scaled depth feature.
The encoder stack (input projection, sinusoidal positional encoding,
masked multi-head self-attention, feed-forward, add & norm) is mean-pooled
over valid rows and decoded by a policy head (|E| logits) and a value head.

Also here: the combined cross-entropy / square loss, exact gradients,
Adam updates with per-episode learning-rate decay, and checkpoint I/O.
"""
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
import sys

import numpy as np
import torch
from torch import nn

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from utils.logger import get_logger
from utils.errors import AgentError, CheckpointError

from .env import Edge, RoutingState
from .topology import Topology

logger = get_logger(__name__)

LOG_CLAMP = 1e-12
CHECKPOINT_MAGIC = b"QRCK"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class AgentConfig:
    """Architecture of the actor-critic"""
    num_qubits: int
    num_actions: int
    embedding_dim: int = 20
    d_model: int = 24
    num_layers: int = 4
    num_heads: int = 6
    ff_dim: int = 96
    lookahead: int = 48
    seed: int = 0

    def __post_init__(self):
        if self.d_model % self.num_heads:
            raise AgentError(f"d_model {self.d_model} is not divisible by {self.num_heads} heads")
        if self.d_model % 2:
            raise AgentError(f"d_model must be even for sinusoidal encoding, got {self.d_model}")
        if min(self.num_qubits, self.num_actions, self.embedding_dim, self.num_layers, self.lookahead) < 1:
            raise AgentError("agent dimensions must be positive")

    @classmethod
    def for_topology(cls, topology: Topology, **overrides) -> "AgentConfig":
        return cls(num_qubits=topology.num_qubits, num_actions=topology.num_edges, **overrides)


def positional_encoding(length: int, d: int) -> torch.Tensor:
    """
    Sinusoidal positional encoding

    Args:
        length: Sequence length
        d: Model dimension (even)

    Returns:
        (length, d) tensor with PE[pos, 2i] = sin(pos / 10000^(2i/d)) and
        PE[pos, 2i+1] = cos(pos / 10000^(2i/d))
    """
    if d % 2:
        raise AgentError(f"positional encoding needs an even dimension, got {d}")
    position = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    wavelength = torch.pow(torch.tensor(10000.0, dtype=torch.float64),
                           torch.arange(0, d, 2, dtype=torch.float64) / d)
    pe = torch.zeros(length, d, dtype=torch.float64)
    pe[:, 0::2] = torch.sin(position / wavelength)
    pe[:, 1::2] = torch.cos(position / wavelength)
    return pe


# ============================================================
# Network
# ============================================================

class MultiHeadSelfAttention(nn.Module):
    """Scaled dot-product self-attention with a key padding mask"""

    def __init__(self, d_model: int, num_heads: int):
        super().__init__()
        self.num_heads = num_heads
        self.d_k = d_model // num_heads
        self.w_q = nn.Linear(d_model, d_model)
        self.w_k = nn.Linear(d_model, d_model)
        self.w_v = nn.Linear(d_model, d_model)
        self.w_o = nn.Linear(d_model, d_model)

    def forward(self, x: torch.Tensor, key_mask: torch.Tensor) -> torch.Tensor:
        """
        Args:
            x: (batch, seq, d_model)
            key_mask: (batch, seq) bool, True for valid rows

        Returns:
            (batch, seq, d_model)
        """
        batch, seq, d_model = x.shape

        def split(t):
            return t.view(batch, seq, self.num_heads, self.d_k).transpose(1, 2)

        q, k, v = split(self.w_q(x)), split(self.w_k(x)), split(self.w_v(x))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_k)
        scores = scores.masked_fill(~key_mask[:, None, None, :], -1e9)
        attention = scores.softmax(dim=-1)
        out = (attention @ v).transpose(1, 2).contiguous().view(batch, seq, d_model)
        return self.w_o(out)


class EncoderLayer(nn.Module):
    """Self-attention and feed-forward, each followed by add & norm"""

    def __init__(self, d_model: int, num_heads: int, ff_dim: int):
        super().__init__()
        self.attention = MultiHeadSelfAttention(d_model, num_heads)
        self.norm_1 = nn.LayerNorm(d_model)
        self.feed_forward = nn.Sequential(nn.Linear(d_model, ff_dim), nn.GELU(), nn.Linear(ff_dim, d_model))
        self.norm_2 = nn.LayerNorm(d_model)

    def forward(self, x: torch.Tensor, key_mask: torch.Tensor) -> torch.Tensor:
        x = self.norm_1(x + self.attention(x, key_mask))
        return self.norm_2(x + self.feed_forward(x))


class AgentModel(nn.Module):
    """Transformer actor-critic over the gate lookahead window"""

    def __init__(self, config: AgentConfig):
        super().__init__()
        self.config = config
        self.qubit_embedding = nn.Parameter(torch.empty(config.num_qubits, config.embedding_dim))
        self.input_projection = nn.Linear(config.embedding_dim + 1, config.d_model)
        self.layers = nn.ModuleList(
            EncoderLayer(config.d_model, config.num_heads, config.ff_dim) for _ in range(config.num_layers)
        )
        self.policy_head = nn.Linear(config.d_model, config.num_actions)
        self.value_head = nn.Linear(config.d_model, 1)
        self.register_buffer("positional", positional_encoding(config.lookahead, config.d_model).float(),
                             persistent=False)
        self.reset_parameters(config.seed)

    def reset_parameters(self, seed: int):
        """Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init; LayerNorm to identity"""
        generator = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            bound = 1.0 / math.sqrt(self.config.embedding_dim)
            self.qubit_embedding.uniform_(-bound, bound, generator=generator)
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    bound = 1.0 / math.sqrt(module.in_features)
                    module.weight.uniform_(-bound, bound, generator=generator)
                    module.bias.uniform_(-bound, bound, generator=generator)
                elif isinstance(module, nn.LayerNorm):
                    module.weight.fill_(1.0)
                    module.bias.fill_(0.0)

    def gate_rows(self, qubits: torch.Tensor, depth: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
        """Feature rows: mean of the two qubit embeddings + depth, padding zeroed"""
        embedded = self.qubit_embedding[qubits].mean(dim=-2)
        rows = torch.cat([embedded, depth.unsqueeze(-1).to(embedded.dtype)], dim=-1)
        return rows * valid.unsqueeze(-1).to(rows.dtype)

    def forward(self, qubits: torch.Tensor, depth: torch.Tensor,
                valid_len: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Batched forward pass

        Args:
            qubits: (batch, lookahead, 2) physical qubit ids
            depth: (batch, lookahead) scaled depths
            valid_len: (batch,) number of non-padding rows

        Returns:
            (policy probabilities (batch, |E|), values (batch,))
        """
        seq = qubits.shape[1]
        valid = torch.arange(seq).unsqueeze(0) < valid_len.unsqueeze(1)
        x = self.input_projection(self.gate_rows(qubits, depth, valid))
        x = x + self.positional[:seq].to(x.dtype)
        for layer in self.layers:
            x = layer(x, valid)
        weights = valid.to(x.dtype).unsqueeze(-1)
        pooled = (x * weights).sum(dim=1) / weights.sum(dim=1).clamp(min=1.0)
        policy = self.policy_head(pooled).softmax(dim=-1)
        value = self.value_head(pooled).squeeze(-1)
        return policy, value


# ============================================================
# State encoding
# ============================================================

@dataclass
class FeatureMatrix:
    """Encoded lookahead window; rows beyond valid_len are padding"""
    qubits: torch.Tensor   # (lookahead, 2) long
    depth: torch.Tensor    # (lookahead,) depth / lookahead
    valid_len: int
    rows: torch.Tensor     # (lookahead, embedding_dim + 1) snapshot for inspection


def encode_state(state: RoutingState, model: AgentModel, lookahead: Optional[int] = None) -> FeatureMatrix:
    """
    Encode the first `lookahead` remaining gates in program order

    Args:
        state: Routing state
        model: Model whose embedding table produces the rows
        lookahead: Window length (defaults to the model's)

    Returns:
        FeatureMatrix
    """
    window = lookahead or model.config.lookahead
    if not 0 < window <= model.config.lookahead:
        raise AgentError(f"lookahead must be in 1..{model.config.lookahead}, got {window}")
    if state.topology.num_qubits > model.config.num_qubits:
        raise AgentError(
            f"model embeds {model.config.num_qubits} qubits; topology has {state.topology.num_qubits}"
        )
    gates = state.ordered_remaining()[:window]
    qubits = torch.zeros(window, 2, dtype=torch.long)
    depth = torch.zeros(window)
    dag_depth = state.problem.dag.depth
    for row, g in enumerate(gates):
        qubits[row, 0], qubits[row, 1] = state.physical_pair(g)
        depth[row] = dag_depth[g] / window
    valid = torch.arange(window) < len(gates)
    with torch.no_grad():
        rows = model.gate_rows(qubits, depth, valid)
    return FeatureMatrix(qubits=qubits, depth=depth, valid_len=len(gates), rows=rows)


def _stack(features: Sequence[FeatureMatrix]) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    qubits = torch.stack([f.qubits for f in features])
    depth = torch.stack([f.depth for f in features])
    valid_len = torch.tensor([f.valid_len for f in features])
    return qubits, depth, valid_len


def forward(model: AgentModel, features: FeatureMatrix) -> Tuple[torch.Tensor, torch.Tensor]:
    """Policy over |E| actions and scalar value for one encoded state"""
    qubits, depth, valid_len = _stack([features])
    depth = depth.to(model.qubit_embedding.dtype)
    policy, value = model(qubits, depth, valid_len)
    return policy[0], value[0]


class ValueEvaluator:
    """Leaf evaluator for MCTS backed by the value head (frozen parameters)"""

    def __init__(self, model: AgentModel):
        self.model = model

    def __call__(self, state: RoutingState) -> float:
        with torch.no_grad():
            _, value = forward(self.model, encode_state(state, self.model))
        return float(value)


def greedy_policy(model: AgentModel):
    """Inference policy: the edge with the highest predicted probability"""
    def policy(state: RoutingState) -> Edge:
        with torch.no_grad():
            probs, _ = forward(model, encode_state(state, model))
        return state.topology.edges[int(torch.argmax(probs))]
    return policy


# ============================================================
# Loss and gradients
# ============================================================

def loss(policy: torch.Tensor, value: torch.Tensor, mcts_action, mcts_value, alpha: float,
         num_actions: int) -> torch.Tensor:
    """
    Combined loss (l1 + alpha*l2)/|E|, averaged over the batch

    Args:
        policy: (|E|,) or (batch, |E|) probabilities
        value: Scalar or (batch,) predicted values
        mcts_action: Index (or batch of indices) of the search's best action
        mcts_value: Search value target(s)
        alpha: Weight of the square loss (>= 0)
        num_actions: |E|

    Returns:
        Scalar tensor
    """
    policy = torch.as_tensor(policy)
    if policy.dim() == 1:
        policy = policy.unsqueeze(0)
    value = torch.as_tensor(value, dtype=policy.dtype).reshape(-1)
    actions = torch.as_tensor(mcts_action, dtype=torch.long).reshape(-1)
    targets = torch.as_tensor(mcts_value, dtype=policy.dtype).reshape(-1)
    chosen = policy.gather(1, actions.unsqueeze(1)).squeeze(1)
    cross_entropy = -torch.log(chosen.clamp(min=LOG_CLAMP))
    square = (targets - value) ** 2
    return ((cross_entropy + alpha * square) / num_actions).mean()


@dataclass(frozen=True)
class TrainingSample:
    features: FeatureMatrix
    mcts_action: int
    mcts_value: float


def batch_loss(model: AgentModel, batch: Sequence[TrainingSample], alpha: float) -> torch.Tensor:
    qubits, depth, valid_len = _stack([s.features for s in batch])
    dtype = model.qubit_embedding.dtype
    policy, value = model(qubits, depth.to(dtype), valid_len)
    actions = [s.mcts_action for s in batch]
    targets = torch.tensor([s.mcts_value for s in batch], dtype=dtype)
    return loss(policy, value, actions, targets, alpha, model.config.num_actions)


def loss_components(model: AgentModel, batch: Sequence[TrainingSample]) -> Tuple[float, float]:
    """Mean cross-entropy and mean square error of a batch (for alpha balancing)"""
    with torch.no_grad():
        qubits, depth, valid_len = _stack([s.features for s in batch])
        policy, value = model(qubits, depth.to(model.qubit_embedding.dtype), valid_len)
        actions = torch.tensor([s.mcts_action for s in batch])
        targets = torch.tensor([s.mcts_value for s in batch], dtype=value.dtype)
        chosen = policy.gather(1, actions.unsqueeze(1)).squeeze(1)
        l1 = float((-torch.log(chosen.clamp(min=LOG_CLAMP))).mean())
        l2 = float(((targets - value) ** 2).mean())
    return l1, l2


def gradients(model: AgentModel, batch: Sequence[TrainingSample], alpha: float) -> Tuple[Dict[str, torch.Tensor], float]:
    """
    Exact gradients of the batch loss for every parameter

    Args:
        model: Actor-critic
        batch: Non-empty list of training samples
        alpha: Square-loss weight

    Returns:
        (name -> gradient tensor, loss value)
    """
    if not batch:
        raise AgentError("gradients need a non-empty batch")
    model.zero_grad(set_to_none=True)
    total = batch_loss(model, batch, alpha)
    if not torch.isfinite(total):
        raise AgentError(f"non-finite loss {float(total)}")
    total.backward()
    grads = {}
    for name, param in model.named_parameters():
        grads[name] = param.grad.detach().clone() if param.grad is not None else torch.zeros_like(param)
    model.zero_grad(set_to_none=True)
    return grads, float(total)


# ============================================================
# Optimizer
# ============================================================

class OptimizerState:
    """Adam moments plus a per-episode exponential learning-rate decay"""

    BETAS = (0.9, 0.999)
    EPS = 1e-8

    def __init__(self, model: AgentModel, learning_rate: float = 0.1, decay: float = 0.8):
        if learning_rate <= 0 or not 0 < decay <= 1:
            raise AgentError(f"invalid learning rate {learning_rate} / decay {decay}")
        self.base_lr = learning_rate
        self.decay = decay
        self.optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate, betas=self.BETAS, eps=self.EPS)
        self.scheduler = torch.optim.lr_scheduler.LambdaLR(self.optimizer, lambda episode: decay ** episode)

    @property
    def lr(self) -> float:
        return self.optimizer.param_groups[0]["lr"]

    @property
    def episodes(self) -> int:
        return self.scheduler.last_epoch

    def decay_lr(self):
        """Apply one episode of learning-rate decay"""
        self.scheduler.step()

    def set_episodes(self, episodes: int):
        self.scheduler.last_epoch = episodes
        self.optimizer.param_groups[0]["lr"] = self.base_lr * self.decay ** episodes


def adam_step(model: AgentModel, grads: Dict[str, torch.Tensor], opt: OptimizerState):
    """
    One Adam update (bias-corrected, beta1=0.9, beta2=0.999, eps=1e-8)

    Args:
        model: Parameters to update in place
        grads: Gradient per parameter name (shapes must match)
        opt: Optimizer state, advanced in place
    """
    for name, param in model.named_parameters():
        if name not in grads:
            raise AgentError(f"missing gradient for {name}")
        if grads[name].shape != param.shape:
            raise AgentError(f"gradient shape {tuple(grads[name].shape)} does not match {name} {tuple(param.shape)}")
        param.grad = grads[name].to(param.dtype).clone()
    opt.optimizer.step()
    opt.optimizer.zero_grad(set_to_none=True)
    for name, param in model.named_parameters():
        if not torch.isfinite(param).all():
            raise AgentError(f"parameter {name} became non-finite after the update")


# ============================================================
# Checkpoints
# ============================================================

def _tensor_payloads(model: AgentModel, opt: Optional[OptimizerState]) -> List[Tuple[str, torch.Tensor]]:
    tensors = [(f"model.{name}", param.detach()) for name, param in model.named_parameters()]
    if opt is not None:
        for name, param in model.named_parameters():
            state = opt.optimizer.state.get(param)
            if state:
                tensors.append((f"adam.{name}.exp_avg", state["exp_avg"]))
                tensors.append((f"adam.{name}.exp_avg_sq", state["exp_avg_sq"]))
    return tensors


def save_checkpoint(model: AgentModel, opt: Optional[OptimizerState], path, topology: Topology):
    """
    Write a self-describing checkpoint: magic, header length, JSON header
    (version, topology fingerprint, |E|, config, optimizer scalars, tensor
    manifest) and little-endian float32 payloads

    Args:
        model: Actor-critic
        opt: Optimizer state (optional)
        path: Output file
        topology: Topology the model acts on
    """
    if topology.num_edges != model.config.num_actions:
        raise CheckpointError(
            f"model has {model.config.num_actions} actions but topology {topology.name!r} has {topology.num_edges} edges"
        )
    manifest = []
    payload = bytearray()
    for name, tensor in _tensor_payloads(model, opt):
        data = np.ascontiguousarray(tensor.detach().cpu().numpy(), dtype="<f4").tobytes()
        manifest.append({"name": name, "shape": list(tensor.shape), "offset": len(payload)})
        payload.extend(data)

    optimizer_header = None
    if opt is not None:
        steps = {name: int(opt.optimizer.state[p]["step"]) for name, p in model.named_parameters()
                 if opt.optimizer.state.get(p)}
        optimizer_header = {"base_lr": opt.base_lr, "decay": opt.decay, "episodes": opt.episodes, "steps": steps}

    header = {
        "format_version": CHECKPOINT_VERSION,
        "topology_fingerprint": topology.fingerprint(),
        "num_actions": model.config.num_actions,
        "config": asdict(model.config),
        "optimizer": optimizer_header,
        "tensors": manifest,
    }
    header_bytes = json.dumps(header, separators=(",", ":"), sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(np.array([len(header_bytes)], dtype="<u4").tobytes())
        f.write(header_bytes)
        f.write(bytes(payload))
    logger.info(f"Checkpoint saved to {path} ({len(manifest)} tensors)")


def _restore(header: dict, payload: bytes, topology: Optional[Topology]) -> Tuple[AgentModel, Optional[OptimizerState]]:
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('format_version')}")

    if topology is not None:
        if header["num_actions"] != topology.num_edges:
            raise CheckpointError(
                f"checkpoint was trained for {header['num_actions']} actions; "
                f"topology {topology.name!r} has {topology.num_edges} edges"
            )
        if header["topology_fingerprint"] != topology.fingerprint():
            raise CheckpointError(f"checkpoint was trained on a different topology than {topology.name!r}")

    tensors = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        end = entry["offset"] + 4 * count
        if end > len(payload):
            raise CheckpointError(f"checkpoint payload truncated at tensor {entry['name']}")
        array = np.frombuffer(payload, dtype="<f4", count=count, offset=entry["offset"])
        tensors[entry["name"]] = torch.from_numpy(array.astype(np.float32).reshape(entry["shape"]))

    model = AgentModel(AgentConfig(**header["config"]))
    with torch.no_grad():
        for name, param in model.named_parameters():
            key = f"model.{name}"
            if key not in tensors:
                raise CheckpointError(f"checkpoint is missing tensor {key}")
            if tuple(tensors[key].shape) != tuple(param.shape):
                raise CheckpointError(f"tensor {key} has shape {tuple(tensors[key].shape)}, expected {tuple(param.shape)}")
            param.copy_(tensors[key])

    opt = None
    if header.get("optimizer") is not None:
        meta = header["optimizer"]
        opt = OptimizerState(model, learning_rate=meta["base_lr"], decay=meta["decay"])
        opt.set_episodes(meta["episodes"])
        for name, param in model.named_parameters():
            if name in meta["steps"]:
                opt.optimizer.state[param] = {
                    "step": torch.tensor(float(meta["steps"][name])),
                    "exp_avg": tensors[f"adam.{name}.exp_avg"].clone(),
                    "exp_avg_sq": tensors[f"adam.{name}.exp_avg_sq"].clone(),
                }
    return model, opt


def load_checkpoint(path, topology: Optional[Topology] = None) -> Tuple[AgentModel, Optional[OptimizerState]]:
    """
    Load a checkpoint written by save_checkpoint

    Args:
        path: Checkpoint file
        topology: When given, must match the topology the model was saved for

    Returns:
        (model, optimizer state or None)

    Raises:
        CheckpointError: unreadable, corrupt or mismatched checkpoint
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    try:
        if raw[:4] != CHECKPOINT_MAGIC or len(raw) < 8:
            raise CheckpointError(f"{path} is not a checkpoint file")
        header_len = int(np.frombuffer(raw, dtype="<u4", count=1, offset=4)[0])
        try:
            header = json.loads(raw[8:8 + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointError(f"corrupt checkpoint header in {path}: {e}") from e
        if not isinstance(header, dict):
            raise CheckpointError(f"corrupt checkpoint header in {path}: not an object")
        model, opt = _restore(header, raw[8 + header_len:], topology)
    except CheckpointError as e:
        logger.warning(f"Rejected checkpoint {path}: {e}")
        raise
    except (KeyError, TypeError, ValueError, AgentError) as e:
        logger.warning(f"Rejected checkpoint {path}: malformed header ({e!r})")
        raise CheckpointError(f"malformed checkpoint header in {path}: {e!r}") from e
    logger.info(f"Checkpoint loaded from {path}")
    return model, opt
