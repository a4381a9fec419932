"""Entropy-annotated Monte Carlo search trees and their reduction by subtree removal."""

from .entropy import (binary_entropy, depth_lower_bound, local_entropy, per_step_bounds,
                      propagate_removal_exact, subtree_entropy_recursive, update_entropy)
from .env import EnvConfig, LaneEnv, rollout_evaluator
from .reduction import (TradeOffParams, beta_ub, build_plist, reduce, reduce_local,
                        reduce_two_stage, tradeoff_value)
from .search import SearchConfig, best_action, run_search
from .serialization import deserialize, export_dot, serialize
from .tree import ActionAlphabet, TreeNode, node_count, tree_policy, validate

__all__ = [
    "ActionAlphabet", "EnvConfig", "LaneEnv", "SearchConfig", "TradeOffParams", "TreeNode",
    "best_action", "beta_ub", "binary_entropy", "build_plist", "depth_lower_bound", "deserialize",
    "export_dot", "local_entropy", "node_count", "per_step_bounds", "propagate_removal_exact",
    "reduce", "reduce_local", "reduce_two_stage", "rollout_evaluator", "run_search", "serialize",
    "subtree_entropy_recursive", "tradeoff_value", "tree_policy", "update_entropy", "validate",
]

__version__ = "0.1.0"
