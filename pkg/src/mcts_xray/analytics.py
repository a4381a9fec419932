"""Original-vs-reduced comparison rows and their aggregation into tables.

Every column is ``(original - reduced) / original``: positive numbers are
reductions, negative numbers increases.  A column is ``None`` (absent)
when the original value is zero or the quantity does not exist.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .reduction import TradeOffParams, tradeoff_value
from .tree import TreeNode, most_visited_action

COLUMNS = (
    "total_tree_reduction",
    "main_path_reduction",
    "main_subtree_reduction",
    "second_path_reduction",
    "second_subtree_reduction",
    "entropy_reduction",
    "trade_off_reduction",
)

# trade-off values this close to zero count as zero (beta = beta_ub makes the
# original objective vanish up to rounding)
_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class ReductionRow:
    total_tree_reduction: Optional[float] = None
    main_path_reduction: Optional[float] = None
    main_subtree_reduction: Optional[float] = None
    second_path_reduction: Optional[float] = None
    second_subtree_reduction: Optional[float] = None
    entropy_reduction: Optional[float] = None
    trade_off_reduction: Optional[float] = None
    number_of_trees: int = 1
    algorithm: str = ""
    beta_factor: Optional[float] = None
    tree: str = ""

    def values(self) -> dict:
        return {name: getattr(self, name) for name in COLUMNS}


def _follow_main(node: TreeNode, first: Optional[int]) -> list[int]:
    path = []
    action = first
    while action is not None:
        path.append(action)
        node = node.children[action]
        action = most_visited_action(node.child_number_visits)
    return path


def main_path(tree: TreeNode) -> list[int]:
    """Actions along the most-visited path from the root to a leaf."""
    return _follow_main(tree, most_visited_action(tree.child_number_visits))


def second_root_action(tree: TreeNode) -> Optional[int]:
    counts = tree.child_number_visits
    main = most_visited_action(counts)
    if main is None:
        return None
    rest = [c if a != main else 0 for a, c in enumerate(counts)]
    return most_visited_action(rest)


def secondary_path(tree: TreeNode) -> Optional[list[int]]:
    """Path through the second most-visited root child, then most-visited below.

    None when the root has fewer than two visited children.
    """
    second = second_root_action(tree)
    if second is None:
        return None
    return _follow_main(tree, second)


def _ratio(original: Optional[float], reduced: Optional[float]) -> Optional[float]:
    if original is None or reduced is None or original == 0:
        return None
    return (original - reduced) / original


def _subtree_visits(tree: TreeNode, action: Optional[int]) -> int:
    if action is None or action not in tree.children:
        return 0
    return tree.children[action].number_visits


def compare(original: TreeNode, reduced: TreeNode, params: TradeOffParams) -> ReductionRow:
    """One comparison row for a single tree.

    ``reduced`` is a plain tree, typically ``materialize_summary`` of the
    reduced instance; paths and sizes are recomputed by traversal.
    """
    params = params.resolve(original)
    main_o, main_r = main_path(original), main_path(reduced)
    sec_o, sec_r = secondary_path(original), secondary_path(reduced)

    second_path = second_subtree = None
    if sec_o is not None:
        second_path = _ratio(len(sec_o), len(sec_r) if sec_r is not None else 0)
        second_subtree = _ratio(_subtree_visits(original, sec_o[0]),
                                _subtree_visits(reduced, sec_r[0]) if sec_r else 0)

    t_o = tradeoff_value(original, params)
    t_r = tradeoff_value(reduced, params)
    if abs(t_o) <= _ZERO_TOL * max(1.0, abs(original.entropy)):
        trade_off = None
    else:
        trade_off = (t_o - t_r) / t_o

    return ReductionRow(
        total_tree_reduction=_ratio(original.number_visits, reduced.number_visits),
        main_path_reduction=_ratio(len(main_o), len(main_r)),
        main_subtree_reduction=_ratio(_subtree_visits(original, main_o[0] if main_o else None),
                                      _subtree_visits(reduced, main_r[0] if main_r else None)),
        second_path_reduction=second_path,
        second_subtree_reduction=second_subtree,
        entropy_reduction=_ratio(original.entropy, reduced.entropy),
        trade_off_reduction=trade_off,
        beta_factor=params.beta_factor,
    )


def aggregate(rows: Iterable[ReductionRow]) -> ReductionRow:
    """Per-column mean over the rows where the column is defined."""
    rows = list(rows)
    if not rows:
        raise ValueError("cannot aggregate an empty set of rows")
    means = {}
    for name in COLUMNS:
        vals = [getattr(r, name) for r in rows if getattr(r, name) is not None]
        means[name] = math.fsum(vals) / len(vals) if vals else None
    algorithms = {r.algorithm for r in rows}
    factors = {r.beta_factor for r in rows}
    return ReductionRow(**means, number_of_trees=len(rows),
                        algorithm=algorithms.pop() if len(algorithms) == 1 else "",
                        beta_factor=factors.pop() if len(factors) == 1 else None)


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def emit_csv(rows: Iterable[ReductionRow], per_tree: bool = False) -> str:
    """CSV text with a header row; absent values are empty cells."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = (["tree"] if per_tree else []) + ["algorithm", "beta_factor", *COLUMNS, "number_of_trees"]
    writer.writerow(header)
    for r in rows:
        line = ([r.tree] if per_tree else []) + [r.algorithm, _fmt(r.beta_factor)]
        line += [_fmt(getattr(r, name)) for name in COLUMNS]
        line.append(str(r.number_of_trees))
        writer.writerow(line)
    return buf.getvalue()
