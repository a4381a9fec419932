"""UCT search that keeps value, visits, depth, branching and entropy current
on every back-propagation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

from .entropy import update_entropy
from .tree import TreeNode, most_visited_action

SELECTION_MODES = ("uct-mean", "puct-prior")


class Evaluator(Protocol):
    def valid_actions(self, state) -> list[int]: ...

    def evaluate(self, state) -> tuple[float, list[float]]: ...


class Environment(Protocol):
    n_actions: int

    def valid_actions(self, state) -> list[int]: ...

    def step(self, state, action: int) -> tuple[object, float, bool]: ...


@dataclass(frozen=True)
class SearchConfig:
    budget: int = 100
    gamma: float = 0.9
    exploration_weight: float = 1.0
    selection_mode: str = "uct-mean"
    rollout_depth_cap: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.exploration_weight <= 0:
            raise ValueError("exploration_weight must be positive")
        if self.selection_mode not in SELECTION_MODES:
            raise ValueError(f"unknown selection mode {self.selection_mode!r}")
        if self.rollout_depth_cap < 0:
            raise ValueError("rollout_depth_cap must be >= 0")


def action_value(child: TreeNode, gamma: float) -> float:
    """Mean return of taking the child's action: edge reward plus discounted mean value."""
    return child.reward + gamma * child.value_sum / child.number_visits


def select(node: TreeNode, config: SearchConfig) -> int:
    if not node.children:
        raise ValueError(f"cannot select from unexpanded node {node.path()}")
    c = config.exploration_weight
    parent_visits = node.number_visits
    best_action, best_score = None, -math.inf
    if config.selection_mode == "uct-mean":
        log_n = math.log(parent_visits) if parent_visits > 0 else 0.0
        for a in sorted(node.children):
            child = node.children[a]
            if child.number_visits == 0:
                score = math.inf
            else:
                score = action_value(child, config.gamma) + c * math.sqrt(log_n / child.number_visits)
            if best_action is None or score > best_score:
                best_action, best_score = a, score
    else:
        prior = node.prior or [1.0 / len(node.children)] * node.n_actions
        sqrt_n = math.sqrt(parent_visits)
        for a in sorted(node.children):
            child = node.children[a]
            q = action_value(child, config.gamma) if child.number_visits else 0.0
            score = q + c * prior[a] * sqrt_n / (1 + child.number_visits)
            if best_action is None or score > best_score:
                best_action, best_score = a, score
    return best_action


def expand_and_evaluate(leaf: TreeNode, state, env: Environment, evaluator: Evaluator,
                        config: SearchConfig) -> float:
    """Create zero-visit children for every valid action and return the leaf value.

    Terminal leaves are not expanded; their evaluator value is returned.
    """
    if leaf.children:
        raise ValueError(f"node {leaf.path()} is already expanded")
    value, prior = evaluator.evaluate(state)
    if leaf.terminal or getattr(state, "terminal", False):
        leaf.terminal = True
        return value
    for a in evaluator.valid_actions(state):
        next_state, reward, terminal = env.step(state, a)
        child = leaf.add_child(a, reward=reward, terminal=terminal)
        child.state = next_state
    if config.selection_mode == "puct-prior":
        leaf.prior = list(prior)
    return value


def backpropagate(leaf: TreeNode, value: float, root: TreeNode, config: SearchConfig) -> None:
    """Push a leaf value to the root, refreshing visits, depth, branching and entropy."""
    node = leaf
    while node is not root:
        if node.parent is None:
            raise ValueError(f"node {leaf.path()} is not below the given root")
        node = node.parent

    current = leaf
    current.value = value
    current.value_sum += value
    current.number_visits += 1
    if current.parent is not None:
        current.parent.child_number_visits[current.action] += 1
    trajectory_depth = 0
    while current is not root:
        value = current.reward + config.gamma * value
        child = current
        current = current.parent
        current.value = value
        current.value_sum += value
        current.number_visits += 1
        if current is not root:
            current.parent.child_number_visits[current.action] += 1
        trajectory_depth += 1
        current.depth = max(current.depth, trajectory_depth)
        used = sum(1 for c in current.child_number_visits if c > 0)
        current.max_branching = max(current.max_branching, used, child.max_branching)
        update_entropy(current)


def run_search(root_state, env: Environment, evaluator: Optional[Evaluator] = None,
               config: SearchConfig = SearchConfig(),
               on_iteration: Optional[Callable[[TreeNode, int], None]] = None) -> TreeNode:
    """Build a tree of ``config.budget`` iterations below ``root_state``.

    The root is expanded and evaluated first and counts one visit, so a
    budget of B without terminal revisits yields B + 1 nodes.
    ``on_iteration(root, i)`` is called after every iteration.
    """
    if evaluator is None:
        from .env import RolloutEvaluator
        evaluator = RolloutEvaluator(env, config.rollout_depth_cap, config.gamma, config.seed)
    root = TreeNode(env.n_actions)
    root.state = root_state
    root.terminal = bool(getattr(root_state, "terminal", False))
    value = expand_and_evaluate(root, root_state, env, evaluator, config)
    root.value = value
    root.value_sum = value
    root.number_visits = 1

    for i in range(config.budget):
        node = root
        while node.number_visits > 0 and node.children and not node.terminal:
            node = node.children[select(node, config)]
        if node.number_visits == 0:
            value = expand_and_evaluate(node, node.state, env, evaluator, config)
        else:
            # visited terminal leaf: replay its stored value
            value = node.value
        backpropagate(node, value, root, config)
        if on_iteration is not None:
            on_iteration(root, i)
    return root


def best_action(root: TreeNode) -> int:
    action = most_visited_action(root.child_number_visits)
    if action is None:
        raise ValueError("root has no visited children")
    return action
