"""Subtree entropy of a search tree viewed as a random action process.

All logarithms are base 2 and ``0 * log 0`` is taken as 0.  The entropy of a
node is the local entropy of its visit-count policy plus the
probability-weighted entropies of its children; leaves have entropy 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .tree import TreeNode, iter_nodes, node_count, policy_from_counts, tree_policy

# Bounds computed through floating logs are snapped to an integer when they
# land this close, so full trees hit their exact depth.
_SNAP = 1e-12


class FullRemovalError(ValueError):
    """Removing the child would leave no children at all; the node becomes a leaf."""


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def local_entropy(policy: Iterable[float]) -> float:
    h = 0.0
    for p in policy:
        if p:
            h -= p * math.log2(p)
    return h


def combine_entropy(counts: list[int], child_entropies: list[float]) -> float:
    """Local policy entropy plus the weighted child entropies.

    ``child_entropies`` is aligned with ``counts`` (0.0 where no child).
    This is the single code path used by back-propagation, removal
    prediction and removal application, so their results agree bitwise.
    """
    policy = policy_from_counts(counts)
    h_local = 0.0
    h_children = 0.0
    for p, h in zip(policy, child_entropies):
        if p:
            h_local += -p * math.log2(p)
            h_children += p * h
    return h_local + h_children


def _child_entropies(counts: list[int], children: dict) -> list[float]:
    out = [0.0] * len(counts)
    for a, child in children.items():
        out[a] = child.entropy
    return out


def update_entropy(node: TreeNode) -> None:
    """Recompute ``node.entropy`` from its counts and the stored child entropies."""
    node.entropy = combine_entropy(node.child_number_visits,
                                   _child_entropies(node.child_number_visits, node.children))


def subtree_entropy_recursive(node: TreeNode) -> float:
    """Entropy by full recursion from the counts alone, ignoring stored values."""
    policy = tree_policy(node)
    h = local_entropy(policy)
    for a, p in enumerate(policy):
        if p and a in node.children:
            h += p * subtree_entropy_recursive(node.children[a])
    return h


def entropy_mismatches(root: TreeNode, tol: float = 1e-9) -> list[tuple[tuple[int, ...], float, float]]:
    """Nodes whose stored entropy differs from the recursive value by more than ``tol``.

    Runs in one bottom-up pass, so it is cheap enough to call after every
    search iteration.
    """
    bad = []

    def walk(node):
        policy = tree_policy(node)
        h = local_entropy(policy)
        for a, p in enumerate(policy):
            if p:
                h += p * walk(node.children[a])
        if abs(h - node.entropy) > tol:
            bad.append((node.path(), node.entropy, h))
        return h

    walk(root)
    return bad


def recompute_statistics(root: TreeNode) -> None:
    """Fill entropy, depth and max_branching bottom-up (for hand-built trees)."""
    order = list(iter_nodes(root))
    for node in reversed(order):
        visited = node.visited_children()
        update_entropy(node)
        node.depth = 1 + max(c.depth for _, c in visited) if visited else 0
        node.max_branching = max([1, len(visited)] + [c.max_branching for _, c in visited])


# -- per-step bounds ---------------------------------------------------------

@dataclass(frozen=True)
class EntropyReport:
    entropy: float
    depth: int
    depth_lower_bound: float
    per_step_lower: float
    per_step_upper: float
    alphabet_used: int
    n_nodes: int


def depth_lower_bound(n_nodes: int, branching: int) -> float:
    """Smallest edge depth a tree of ``n_nodes`` nodes can have with the given
    maximum branching.  Exact for full even trees; a chain gives n - 1."""
    if n_nodes < 1:
        raise ValueError(f"need at least one node, got {n_nodes}")
    if branching < 1:
        raise ValueError(f"branching must be positive, got {branching}")
    if branching == 1:
        return float(n_nodes - 1)
    lb = math.log(n_nodes * (branching - 1) + 1) / math.log(branching) - 1.0
    nearest = round(lb)
    if abs(lb - nearest) < _SNAP:
        lb = float(nearest)
    return max(lb, 0.0)


def per_step_bounds(node: TreeNode, n_nodes: Optional[int] = None) -> EntropyReport:
    """Lower/upper bounds on the average per-level entropy of the subtree.

    ``n_nodes`` defaults to the exact subtree node count; pass the visit
    count when only visits are known.
    """
    if n_nodes is None:
        n_nodes = node_count(node)
    lb = depth_lower_bound(n_nodes, node.max_branching)
    if node.depth == 0:
        return EntropyReport(node.entropy, 0, lb, 0.0, 0.0, node.max_branching, n_nodes)
    lower = node.entropy / node.depth
    upper = node.entropy / lb if lb > 0 else math.inf
    return EntropyReport(node.entropy, node.depth, lb, lower, upper, node.max_branching, n_nodes)


# -- closed forms for removals -------------------------------------------------

def local_entropy_after_full_removal(policy: list[float], k: int) -> float:
    """Entropy of the policy with entry ``k`` dropped and the rest renormalized."""
    pk = policy[k]
    if pk == 0.0:
        return local_entropy(policy)
    if pk >= 1.0:
        raise FullRemovalError(f"entry {k} carries all the probability mass")
    return (local_entropy(policy) - binary_entropy(pk)) / (1.0 - pk)


def entropy_after_child_removal(node: TreeNode, k: int) -> float:
    """Node entropy once child ``k`` (and its subtree) is removed.

    Uses the stored node and child entropies: (H - H_b(p_k) - p_k H_k) / (1 - p_k).
    """
    if k not in node.children:
        raise ValueError(f"node {node.path()} has no child {k}")
    pk = tree_policy(node)[k]
    if pk == 0.0:
        return node.entropy
    if pk >= 1.0:
        return 0.0
    hk = node.children[k].entropy
    return (node.entropy - binary_entropy(pk) - pk * hk) / (1.0 - pk)


def child_removal_entropy_unweighted(node: TreeNode, k: int) -> float:
    """Variant of the removal update that subtracts H_k without its p_k weight.

    Kept only to document that this form disagrees with direct recomputation.
    """
    pk = tree_policy(node)[k]
    h = node.entropy
    hk = node.children[k].entropy
    return h + (pk * h - binary_entropy(pk) - hk) / (1.0 - pk)


@dataclass(frozen=True)
class RenormParameter:
    removed_mass: float  # probability mass the parent loses from the child's slot
    child_prob: float
    removed_fraction: float  # share of the child's own child visits removed
    removed_visits: int


def renorm_parameter(parent: TreeNode, ell: int, removed_visits: int) -> RenormParameter:
    """Mass shift at ``parent`` when child ``ell`` loses ``removed_visits`` of
    its children's visits.  The parent's new probability for ``ell`` is
    ``(child_prob - removed_mass) / (1 - removed_mass)`` and every sibling
    scales by ``1 / (1 - removed_mass)``."""
    if ell not in parent.children:
        raise ValueError(f"node {parent.path()} has no child {ell}")
    child = parent.children[ell]
    n_child = sum(child.child_number_visits)
    if removed_visits < 0 or removed_visits > n_child:
        raise ValueError(f"removed_visits={removed_visits} outside [0, {n_child}]")
    n_parent = sum(parent.child_number_visits)
    p_ell = parent.child_number_visits[ell] / n_parent
    frac = removed_visits / n_child if n_child else 0.0
    return RenormParameter(frac * (p_ell - 1.0 / n_parent), p_ell, frac, removed_visits)


def propagated_entropy_closed_form(parent: TreeNode, ell: int, removed_visits: int,
                                   new_child_entropy: float) -> float:
    """One-step parent update expressed through the renormalization parameter.

    Only exact when the whole slot is removed; for partial changes it
    disagrees with direct recomputation and is kept for documentation.
    """
    rp = renorm_parameter(parent, ell, removed_visits)
    q = rp.removed_mass
    h = parent.entropy
    h_ell = parent.children[ell].entropy
    return h + (q * h - binary_entropy(q) + (rp.child_prob - q) * (new_child_entropy - h_ell)) / (1.0 - q)


# -- exact propagation ---------------------------------------------------------

@dataclass(frozen=True)
class RemovalPrediction:
    root_entropy: float
    root_visits: int
    removed_visits: int
    removed_nodes: int


def _counts(node, summarized):
    return node.child_num_visits_summarized if summarized else node.child_number_visits


def _kids(node, summarized):
    return node.children_summarized if summarized else node.children


def _size(node, summarized):
    return node.size_summarized if summarized else node_count(node)


def _stored_entropies(counts, kids, summarized):
    ents = [0.0] * len(counts)
    for a, child in kids.items():
        if counts[a]:
            ents[a] = child.entropy_summarized if summarized else child.entropy
    return ents


def predict_removal(node: TreeNode, removed_children: Iterable[int],
                    summarized: bool = False) -> RemovalPrediction:
    """Root entropy and size after deleting some children of ``node``.

    Walks from ``node`` to the root, recomputing each node on the path from
    its (updated) counts and the stored entropies of its children.  Nothing
    is mutated.  With ``summarized`` the summarized mirrors are read instead
    of the original fields.
    """
    removed = sorted(set(removed_children))
    counts = list(_counts(node, summarized))
    kids = _kids(node, summarized)
    for a in removed:
        if not 0 <= a < len(counts) or counts[a] <= 0 or a not in kids:
            raise ValueError(f"action {a} is not a live child of node {node.path()}")
    if not removed:
        root = node.root()
        if summarized:
            return RemovalPrediction(root.entropy_summarized, root.number_visits_summarized, 0, 0)
        return RemovalPrediction(root.entropy, root.number_visits, 0, 0)

    removed_visits = sum(counts[a] for a in removed)
    removed_nodes = sum(_size(kids[a], summarized) for a in removed)
    for a in removed:
        counts[a] = 0
    h = combine_entropy(counts, _stored_entropies(counts, kids, summarized))
    visits = sum(counts) + 1

    child = node
    while child.parent is not None:
        parent = child.parent
        counts = list(_counts(parent, summarized))
        counts[child.action] = visits
        ents = _stored_entropies(counts, _kids(parent, summarized), summarized)
        ents[child.action] = h
        h = combine_entropy(counts, ents)
        visits = sum(counts) + 1
        child = parent
    return RemovalPrediction(h, visits, removed_visits, removed_nodes)


def propagate_removal_exact(node: TreeNode, removed_children: Iterable[int],
                            summarized: bool = False) -> float:
    """Predicted root entropy after removing ``removed_children`` under ``node``."""
    return predict_removal(node, removed_children, summarized).root_entropy
