"""Search-tree data model.

A node stores its own visit count plus a per-action vector of child visit
counts (AlphaZero style).  Children with zero visits may exist as expansion
stubs during search; everything that measures the tree (policies, depth,
node counts, serialization) only looks at visited children.

Reductions never touch the original fields.  They work on parallel
``*_summarized`` mirrors so one instance holds both the original and the
reduced tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, Optional

DRIVING_ACTIONS = (
    "acc_regular",
    "acc_harsh",
    "dec_regular",
    "dec_harsh",
    "right",
    "left",
    "none",
)


@dataclass(frozen=True)
class ActionAlphabet:
    size: int
    names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"alphabet needs at least 2 actions, got {self.size}")
        if self.names is not None and len(self.names) != self.size:
            raise ValueError(f"expected {self.size} action names, got {len(self.names)}")

    @classmethod
    def driving(cls) -> "ActionAlphabet":
        return cls(len(DRIVING_ACTIONS), DRIVING_ACTIONS)

    def name(self, action: int) -> str:
        if self.names is None:
            return str(action)
        return self.names[action]


class TreeNode:
    """One node of a Monte Carlo search tree."""

    __slots__ = (
        "action",
        "parent",
        "reward",
        "value",
        "value_sum",
        "number_visits",
        "child_number_visits",
        "children",
        "terminal",
        "entropy",
        "depth",
        "max_branching",
        "prior",
        "state",
        "child_num_visits_summarized",
        "children_summarized",
        "entropy_summarized",
        "depth_summarized",
        "number_visits_summarized",
        "size_summarized",
    )

    def __init__(self, n_actions: int, action: Optional[int] = None,
                 parent: Optional["TreeNode"] = None, reward: float = 0.0,
                 terminal: bool = False):
        self.action = action
        self.parent = parent
        self.reward = reward
        self.value = 0.0
        self.value_sum = 0.0
        self.number_visits = 0
        self.child_number_visits = [0] * n_actions
        self.children: dict[int, TreeNode] = {}
        self.terminal = terminal
        self.entropy = 0.0
        self.depth = 0
        self.max_branching = 1
        self.prior: Optional[list[float]] = None
        self.state: Any = None
        self.child_num_visits_summarized: Optional[list[int]] = None
        self.children_summarized: Optional[dict[int, TreeNode]] = None
        self.entropy_summarized: Optional[float] = None
        self.depth_summarized: Optional[int] = None
        self.number_visits_summarized: Optional[int] = None
        self.size_summarized: Optional[int] = None

    def __repr__(self):
        return (f"TreeNode(path={self.path()}, visits={self.number_visits}, "
                f"entropy={self.entropy:.4f}, depth={self.depth})")

    @property
    def n_actions(self) -> int:
        return len(self.child_number_visits)

    @property
    def is_root(self) -> bool:
        return self.parent is None

    @property
    def has_summary(self) -> bool:
        return self.children_summarized is not None

    def add_child(self, action: int, reward: float = 0.0, terminal: bool = False) -> "TreeNode":
        child = TreeNode(self.n_actions, action=action, parent=self, reward=reward, terminal=terminal)
        self.children[action] = child
        return child

    def visited_children(self) -> list[tuple[int, "TreeNode"]]:
        """(action, child) pairs with at least one visit, by ascending action."""
        return [(a, self.children[a]) for a in sorted(self.children)
                if self.children[a].number_visits > 0]

    def is_leaf(self) -> bool:
        return not any(c.number_visits > 0 for c in self.children.values())

    def path(self) -> tuple[int, ...]:
        actions = []
        node = self
        while node.parent is not None:
            actions.append(node.action)
            node = node.parent
        return tuple(reversed(actions))

    def root(self) -> "TreeNode":
        node = self
        while node.parent is not None:
            node = node.parent
        return node

    def ancestors(self) -> list["TreeNode"]:
        """Nodes from the root down to (and including) this one."""
        chain = []
        node = self
        while node is not None:
            chain.append(node)
            node = node.parent
        chain.reverse()
        return chain


def format_path(path: tuple[int, ...]) -> str:
    return "root" + "".join(f"/{a}" for a in path)


def iter_nodes(root: TreeNode) -> Iterator[TreeNode]:
    """Pre-order walk over visited nodes (the root is always yielded)."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        for _, child in reversed(node.visited_children()):
            stack.append(child)


def iter_summarized(root: TreeNode) -> Iterator[TreeNode]:
    """Pre-order walk over the nodes surviving in the summarized tree."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        kids = node.children_summarized or {}
        for a in sorted(kids, reverse=True):
            stack.append(kids[a])


def find_node(root: TreeNode, path: tuple[int, ...], summarized: bool = False) -> Optional[TreeNode]:
    node = root
    for a in path:
        kids = node.children_summarized if summarized else node.children
        child = (kids or {}).get(a)
        if child is None or (not summarized and child.number_visits == 0):
            return None
        node = child
    return node


def policy_from_counts(counts: list[int]) -> list[float]:
    # Dividing by the parent's visit count first cancels under the max
    # normalization, so counts go straight to the max/sum steps.
    total = sum(counts)
    if not total:
        return [0.0] * len(counts)
    top = max(counts)
    scaled = [c / top for c in counts]
    s = sum(scaled)
    return [x / s for x in scaled]


def tree_policy(node: TreeNode) -> list[float]:
    """Probability vector over actions, proportional to child visit counts."""
    return policy_from_counts(node.child_number_visits)


def most_visited_action(counts: list[int]) -> Optional[int]:
    """Index of the largest count; lowest index wins ties.  None if all zero."""
    best = None
    for a, c in enumerate(counts):
        if c > 0 and (best is None or c > counts[best]):
            best = a
    return best


def node_count(root: TreeNode) -> int:
    """Exact number of (visited) nodes.  Differs from root visits when
    terminal leaves were revisited."""
    return sum(1 for _ in iter_nodes(root))


def subtree_max_branching(node: TreeNode) -> int:
    best = 1
    for n in iter_nodes(node):
        best = max(best, len(n.visited_children()))
    return best


@dataclass(frozen=True)
class Violation:
    path: str
    invariant: str
    detail: str

    def __str__(self):
        return f"{self.path}: {self.invariant}: {self.detail}"


def validate(root: TreeNode) -> list[Violation]:
    """Check every structural invariant; an empty list means the tree is sound."""
    out: list[Violation] = []
    n_actions = root.n_actions
    if n_actions < 2:
        out.append(Violation("root", "alphabet", f"alphabet size {n_actions} < 2"))

    stack = [(root, ())]
    while stack:
        node, path = stack.pop()
        where = format_path(path)

        def bad(invariant, detail):
            out.append(Violation(where, invariant, detail))

        counts = node.child_number_visits
        if len(counts) != n_actions:
            bad("alphabet", f"child visit vector has length {len(counts)}, expected {n_actions}")
        if node.number_visits < 0 or any(c < 0 for c in counts):
            bad("counts", "negative visit count")

        visited = []
        for a, child in node.children.items():
            if not 0 <= a < n_actions:
                bad("alphabet", f"child stored under action {a} outside [0, {n_actions - 1}]")
                continue
            if child.action != a:
                bad("structure", f"child under action {a} records action {child.action}")
            if child.parent is not node:
                bad("structure", f"child under action {a} has a foreign parent pointer")
            if a < len(counts) and counts[a] != child.number_visits:
                bad("parent-count", f"child_number_visits[{a}]={counts[a]} but child has "
                                    f"{child.number_visits} visits")
            if child.number_visits > 0:
                visited.append((a, child))
        for a, c in enumerate(counts):
            if c > 0 and a not in node.children:
                bad("children", f"child_number_visits[{a}]={c} but no child node")

        if visited and node.number_visits >= 1:
            expected = sum(counts) + 1
            if node.number_visits != expected:
                bad("count", f"number_visits={node.number_visits} but sum(child visits)+1={expected}")
        if visited and node.terminal:
            bad("terminal", "terminal node has visited children")

        if node.entropy < 0:
            bad("entropy", f"negative entropy {node.entropy}")
        if not visited and node.entropy != 0:
            bad("entropy", f"leaf has entropy {node.entropy}")

        want_depth = 1 + max(c.depth for _, c in visited) if visited else 0
        if node.depth != want_depth:
            bad("depth", f"depth={node.depth}, expected {want_depth}")
        if not 1 <= node.max_branching <= max(n_actions, 1):
            bad("branching", f"max_branching={node.max_branching} outside [1, {n_actions}]")

        for a, child in reversed(visited):
            stack.append((child, path + (a,)))
    return out


def clone(root: TreeNode) -> TreeNode:
    """Deep copy of the visited tree (stubs and transient state dropped)."""
    new_root = _copy_fields(root, None)
    stack = [(root, new_root)]
    while stack:
        src, dst = stack.pop()
        for a, child in src.visited_children():
            c = _copy_fields(child, dst)
            dst.children[a] = c
            stack.append((child, c))
    return new_root


def _copy_fields(src: TreeNode, parent: Optional[TreeNode]) -> TreeNode:
    dst = TreeNode(src.n_actions, action=src.action, parent=parent,
                   reward=src.reward, terminal=src.terminal)
    dst.value = src.value
    dst.value_sum = src.value_sum
    dst.number_visits = src.number_visits
    dst.child_number_visits = list(src.child_number_visits)
    dst.entropy = src.entropy
    dst.depth = src.depth
    dst.max_branching = src.max_branching
    dst.prior = list(src.prior) if src.prior is not None else None
    return dst


def begin_summary(root: TreeNode) -> None:
    """(Re)initialize the summarized mirrors as a copy of the original tree."""
    order = list(iter_nodes(root))
    for node in reversed(order):
        node.child_num_visits_summarized = list(node.child_number_visits)
        node.children_summarized = dict(node.visited_children())
        node.entropy_summarized = node.entropy
        node.depth_summarized = node.depth
        node.number_visits_summarized = node.number_visits
        node.size_summarized = 1 + sum(c.size_summarized for c in node.children_summarized.values())


def clear_summary(root: TreeNode) -> None:
    for node in iter_nodes(root):
        node.child_num_visits_summarized = None
        node.children_summarized = None
        node.entropy_summarized = None
        node.depth_summarized = None
        node.number_visits_summarized = None
        node.size_summarized = None


def materialize_summary(root: TreeNode) -> TreeNode:
    """Build a standalone tree from the summarized fields."""
    if not root.has_summary:
        raise ValueError("tree has no summary; run a reduction or begin_summary first")

    def make(src, parent):
        dst = TreeNode(src.n_actions, action=src.action, parent=parent,
                       reward=src.reward, terminal=src.terminal)
        dst.value = src.value
        dst.value_sum = src.value_sum
        dst.number_visits = src.number_visits_summarized
        dst.child_number_visits = list(src.child_num_visits_summarized)
        dst.entropy = src.entropy_summarized
        dst.depth = src.depth_summarized
        dst.prior = list(src.prior) if src.prior is not None else None
        return dst

    new_root = make(root, None)
    stack = [(root, new_root)]
    order = [new_root]
    while stack:
        src, dst = stack.pop()
        for a in sorted(src.children_summarized):
            child = src.children_summarized[a]
            c = make(child, dst)
            dst.children[a] = c
            order.append(c)
            stack.append((child, c))
    for node in reversed(order):
        own = len(node.children)
        node.max_branching = max([1, own] + [c.max_branching for c in node.children.values()])
    return new_root
