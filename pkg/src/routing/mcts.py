"""
Monte Carlo tree search over routing states: UCB selection, full-fanout
expansion, value-function simulation and reward-accumulating backup
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple
import sys

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from utils.logger import get_logger
from utils.errors import RoutingError

from .env import Edge, RoutingState, step

logger = get_logger(__name__)

DEFAULT_ROLLOUTS = 200
DEFAULT_EXPLORATION = math.sqrt(2)

# Leaf evaluator: predicted future return of a (non-terminal) state
Evaluator = Callable[[RoutingState], float]


def zero_value(state: RoutingState) -> float:
    """Stub evaluator predicting no future reward"""
    return 0.0


def ucb(parent_visits: int, child_visits: int, child_value: float, c: float = DEFAULT_EXPLORATION) -> float:
    """
    Upper confidence bound of a child

    Args:
        parent_visits: N of the parent (>= 1)
        child_visits: N of the child
        child_value: Accumulated value Q of the child
        c: Exploration coefficient

    Returns:
        Q/N + c*sqrt(ln(parent_N)/N), or +inf for an unvisited child
    """
    if child_visits == 0:
        return math.inf
    return child_value / child_visits + c * math.sqrt(math.log(parent_visits) / child_visits)


@dataclass
class SearchNode:
    state: RoutingState
    edge_reward: int = 0
    visit_count: int = 0
    value_sum: float = 0.0
    children: Optional[List["SearchNode"]] = None
    # evaluator output when the node was first reached (0 for terminal states)
    predicted_value: Optional[float] = None

    @property
    def expanded(self) -> bool:
        return self.children is not None

    @property
    def terminal(self) -> bool:
        return not self.state.remaining

    def mean_value(self) -> float:
        return self.value_sum / self.visit_count if self.visit_count else 0.0

    def expand(self):
        children = []
        for edge in self.state.topology.edges:
            child_state, reward = step(self.state, edge)
            children.append(SearchNode(child_state, edge_reward=reward))
        self.children = children


@dataclass(frozen=True)
class ChildStats:
    edge: Edge
    visits: int
    mean_value: float
    reward: int
    predicted_value: Optional[float] = None

    @property
    def estimate(self) -> float:
        """Return estimate of taking this action: r + Q/N"""
        return self.reward + self.mean_value


@dataclass
class SearchResult:
    best_action: Edge
    best_index: int
    root_value: float
    child_stats: List[ChildStats] = field(default_factory=list)
    root: Optional[SearchNode] = field(default=None, repr=False)


def _select_child(node: SearchNode, c: float) -> SearchNode:
    best = None
    best_score = -math.inf
    for child in node.children:
        score = ucb(node.visit_count, child.visit_count, child.value_sum, c)
        if best is None or score > best_score:
            best, best_score = child, score
    return best


def _backup(path: List[SearchNode], leaf_value: float):
    ret = leaf_value
    for node in reversed(path):
        node.visit_count += 1
        node.value_sum += ret
        ret += node.edge_reward


def search(root: RoutingState, evaluator: Evaluator = zero_value, rollouts: int = DEFAULT_ROLLOUTS,
           c: float = DEFAULT_EXPLORATION) -> SearchResult:
    """
    Run MCTS from `root` and pick the action with the best return estimate

    The root is expanded and evaluated once before the rollouts (its
    initializing visit), so `rollouts` = |E| visits every child exactly once.

    Args:
        root: Non-terminal state
        evaluator: Leaf value function (the agent's value head, or a stub)
        rollouts: Selection/expansion/simulation/backup cycles (>= 1)
        c: UCB exploration coefficient

    Returns:
        SearchResult with best_action = argmax_a (r_a + Q_a/N_a)
    """
    if not root.remaining:
        raise RoutingError("search called on a terminal state")
    if rollouts < 1:
        raise RoutingError(f"rollouts must be >= 1, got {rollouts}")

    tree = SearchNode(root)
    tree.expand()
    tree.predicted_value = float(evaluator(root))
    _backup([tree], tree.predicted_value)

    for _ in range(rollouts):
        node = tree
        path = [node]
        while node.expanded and not node.terminal:
            node = _select_child(node, c)
            path.append(node)
        if node.terminal:
            node.predicted_value = 0.0
        else:
            node.expand()
            node.predicted_value = float(evaluator(node.state))
        _backup(path, node.predicted_value)

    stats = [
        ChildStats(edge=child.state.topology.edges[i], visits=child.visit_count,
                   mean_value=child.mean_value(), reward=child.edge_reward,
                   predicted_value=child.predicted_value)
        for i, child in enumerate(tree.children)
    ]
    best_index = 0
    for i, s in enumerate(stats):
        if s.visits and (not stats[best_index].visits or s.estimate > stats[best_index].estimate):
            best_index = i
    return SearchResult(
        best_action=stats[best_index].edge,
        best_index=best_index,
        root_value=tree.mean_value(),
        child_stats=stats,
        root=tree,
    )


def search_policy(evaluator: Evaluator = zero_value, rollouts: int = DEFAULT_ROLLOUTS,
                  c: float = DEFAULT_EXPLORATION):
    """Routing policy running a fresh search from every state"""
    def policy(state: RoutingState) -> Edge:
        return search(state, evaluator, rollouts, c).best_action
    return policy
