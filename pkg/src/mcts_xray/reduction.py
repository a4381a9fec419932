"""Entropy-vs-size trade-off and greedy subtree-removal reductions.

The objective for a tree is ``H(root) - beta * log2|A| * size``.  All four
algorithms work on the summarized mirrors of the tree, so the original
fields stay intact:

``local``
    pre-order walk; at each surviving node apply its best removal set at once.
``two-stage-all``
    rank every node's best removal set (evaluated on the original tree) and
    apply the whole list.
``two-stage-stop``
    walk the ranked list and stop at the first entry that no longer improves
    the current tree.
``two-stage-v2``
    like ``two-stage-stop`` but skip non-improving entries instead of stopping.

A node's most-visited child is only ever removed together with all of its
siblings.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

from .entropy import combine_entropy, predict_removal
from .tree import (TreeNode, begin_summary, find_node, iter_nodes, materialize_summary,
                   most_visited_action, node_count)

log = logging.getLogger(__name__)

ALGORITHMS = ("local", "two-stage-all", "two-stage-stop", "two-stage-v2")
SIZE_MEASURES = ("visits", "nodes")


@dataclass(frozen=True)
class TradeOffParams:
    beta_factor: float = 1.0
    size_measure: str = "visits"
    beta: Optional[float] = None  # explicit value overrides beta_factor * beta_ub

    def __post_init__(self):
        if self.size_measure not in SIZE_MEASURES:
            raise ValueError(f"size_measure must be one of {SIZE_MEASURES}")
        if self.beta_factor < 0:
            raise ValueError("beta_factor must be non-negative")

    def resolve(self, tree: TreeNode) -> "TradeOffParams":
        if self.beta is not None:
            return self
        return dataclasses.replace(self, beta=self.beta_factor * beta_ub(tree, self.size_measure))


def tree_size(tree: TreeNode, size_measure: str = "visits") -> int:
    return tree.number_visits if size_measure == "visits" else node_count(tree)


def _objective(entropy: float, size: int, beta: float, log_alphabet: float) -> float:
    return entropy - beta * log_alphabet * size


def tradeoff_value(tree: TreeNode, params: TradeOffParams) -> float:
    params = params.resolve(tree)
    return _objective(tree.entropy, tree_size(tree, params.size_measure), params.beta,
                      math.log2(tree.n_actions))


def beta_ub(tree: TreeNode, size_measure: str = "visits") -> float:
    """The beta at which the objective of the unreduced tree is zero."""
    return tree.entropy / (math.log2(tree.n_actions) * tree_size(tree, size_measure))


@dataclass
class RemovalCandidate:
    node_path: tuple[int, ...]
    removed_children: tuple[int, ...]
    removed_visits: int
    predicted_root_entropy: float
    predicted_gain: float
    remaining_visits: Optional[int] = None


@dataclass
class PriorityList:
    """Removal candidates ordered by predicted gain, best first."""

    items: list[RemovalCandidate] = field(default_factory=list)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, k):
        return self.items[k]

    def insert(self, candidate: RemovalCandidate) -> None:
        self.items.append(candidate)

    def sort(self) -> None:
        # stable: equal gains keep insertion (pre-order) order
        self.items.sort(key=lambda c: -c.predicted_gain)

    def calculate_remaining_visits(self, root_visits: int) -> None:
        remaining = root_visits
        for c in self.items:
            c.remaining_visits = remaining
            remaining -= c.removed_visits


@dataclass
class ReductionResult:
    tree: TreeNode
    algorithm: str
    params: TradeOffParams
    applied: list[RemovalCandidate] = field(default_factory=list)
    skipped: list[RemovalCandidate] = field(default_factory=list)
    plist: Optional[PriorityList] = None
    degenerate: bool = False

    @property
    def reduced(self) -> TreeNode:
        return materialize_summary(self.tree)


def main_child(node: TreeNode) -> Optional[int]:
    """Most-visited child in the original counts (lowest action on ties)."""
    return most_visited_action(node.child_number_visits)


def _legal_subsets(node: TreeNode) -> list[tuple[int, ...]]:
    live = sorted(node.children_summarized)
    if not live:
        return []
    protected = main_child(node)
    others = [a for a in live if a != protected]
    subsets = [combo for r in range(1, len(others) + 1) for combo in combinations(others, r)]
    if protected in node.children_summarized:
        subsets.append(tuple(live))
    return subsets


class _State:
    """Current objective of a summarized tree."""

    def __init__(self, root: TreeNode, params: TradeOffParams):
        self.root = root
        self.beta = params.beta
        self.size_measure = params.size_measure
        self.log_alphabet = math.log2(root.n_actions)

    def size(self) -> int:
        r = self.root
        return r.number_visits_summarized if self.size_measure == "visits" else r.size_summarized

    def value(self) -> float:
        return _objective(self.root.entropy_summarized, self.size(), self.beta, self.log_alphabet)

    def value_after(self, node: TreeNode, subset) -> tuple[float, object]:
        pred = predict_removal(node, subset, summarized=True)
        if self.size_measure == "visits":
            size = pred.root_visits
        else:
            size = self.root.size_summarized - pred.removed_nodes
        return _objective(pred.root_entropy, size, self.beta, self.log_alphabet), pred


def best_subset(node: TreeNode, params: TradeOffParams) -> Optional[RemovalCandidate]:
    """Best legal set of children to remove at ``node`` in the summarized tree.

    Gains are global: the change of the whole tree's objective.  Returns None
    unless the best gain is strictly positive.  Ties go to fewer removed
    visits, then the lexicographically smallest action set.
    """
    root = node.root()
    if not root.has_summary:
        begin_summary(root)
    params = params.resolve(root)
    state = _State(root, params)
    current = state.value()
    best = None
    for subset in _legal_subsets(node):
        after, pred = state.value_after(node, subset)
        gain = after - current
        if best is None or _better(gain, pred.removed_visits, subset, best):
            best = (gain, pred.removed_visits, subset, pred)
    if best is None or not best[0] > 0:
        return None
    gain, removed_visits, subset, pred = best
    return RemovalCandidate(node.path(), subset, removed_visits, pred.root_entropy, gain)


def _better(gain, removed_visits, subset, best) -> bool:
    if gain != best[0]:
        return gain > best[0]
    if removed_visits != best[1]:
        return removed_visits < best[1]
    return subset < best[2]


def _refresh(node: TreeNode) -> None:
    counts = node.child_num_visits_summarized
    kids = node.children_summarized
    ents = [0.0] * len(counts)
    for a, child in kids.items():
        ents[a] = child.entropy_summarized
    node.number_visits_summarized = sum(counts) + 1
    node.entropy_summarized = combine_entropy(counts, ents)
    node.depth_summarized = 1 + max(c.depth_summarized for c in kids.values()) if kids else 0
    node.size_summarized = 1 + sum(c.size_summarized for c in kids.values())


def apply_removal(tree: TreeNode, candidate: RemovalCandidate) -> bool:
    """Remove the candidate's children from the summarized tree.

    Returns False (and changes nothing) when the node is gone already.
    """
    node = find_node(tree, candidate.node_path, summarized=True)
    if node is None:
        return False
    removed = [a for a in candidate.removed_children if a in node.children_summarized]
    if not removed:
        return False
    for a in removed:
        del node.children_summarized[a]
        node.child_num_visits_summarized[a] = 0
    _refresh(node)
    while node.parent is not None:
        parent = node.parent
        parent.child_num_visits_summarized[node.action] = node.number_visits_summarized
        _refresh(parent)
        node = parent
    return True


def _start(tree: TreeNode, algorithm: str, params: TradeOffParams) -> ReductionResult:
    begin_summary(tree)
    result = ReductionResult(tree, algorithm, params.resolve(tree))
    if tree.entropy == 0.0:
        log.info("zero-entropy tree: reduction skipped")
        result.degenerate = True
    return result


def reduce_local(tree: TreeNode, params: TradeOffParams) -> ReductionResult:
    result = _start(tree, "local", params)
    if result.degenerate:
        return result
    stack = [tree]
    while stack:
        node = stack.pop()
        candidate = best_subset(node, result.params)
        if candidate is not None:
            apply_removal(tree, candidate)
            result.applied.append(candidate)
        for a in sorted(node.children_summarized, reverse=True):
            stack.append(node.children_summarized[a])
    return result


def build_plist(tree: TreeNode, params: TradeOffParams) -> PriorityList:
    """Every node's best removal set, each evaluated on the unreduced tree."""
    begin_summary(tree)
    params = params.resolve(tree)
    plist = PriorityList()
    for node in iter_nodes(tree):
        if node.children_summarized:
            candidate = best_subset(node, params)
            if candidate is not None:
                plist.insert(candidate)
    plist.sort()
    plist.calculate_remaining_visits(tree.number_visits)
    return plist


def reduce_two_stage(tree: TreeNode, params: TradeOffParams, variant: str = "v2") -> ReductionResult:
    if variant not in ("all", "stop-at-first", "v2"):
        raise ValueError(f"unknown two-stage variant {variant!r}")
    name = {"all": "two-stage-all", "stop-at-first": "two-stage-stop", "v2": "two-stage-v2"}[variant]
    result = _start(tree, name, params)
    if result.degenerate:
        return result
    plist = build_plist(tree, result.params)
    result.plist = plist
    state = _State(tree, result.params)
    for candidate in plist:
        node = find_node(tree, candidate.node_path, summarized=True)
        if node is None:
            result.skipped.append(candidate)
            continue
        if variant != "all":
            live = tuple(a for a in candidate.removed_children if a in node.children_summarized)
            after, _ = state.value_after(node, live)
            if not after - state.value() > 0:
                if variant == "stop-at-first":
                    break
                result.skipped.append(candidate)
                continue
        if apply_removal(tree, candidate):
            result.applied.append(candidate)
        else:
            result.skipped.append(candidate)
    return result


def reduce(tree: TreeNode, algorithm: str, params: TradeOffParams) -> ReductionResult:
    if algorithm == "local":
        return reduce_local(tree, params)
    variants = {"two-stage-all": "all", "two-stage-stop": "stop-at-first", "two-stage-v2": "v2"}
    if algorithm not in variants:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    return reduce_two_stage(tree, params, variants[algorithm])
