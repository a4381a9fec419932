"""JSON tree documents and Graphviz DOT rendering.

A document looks like::

    {"format": "mcts-xray-tree/1",
     "alphabet": {"size": 7, "names": [...]},
     "meta": {...},
     "root": {"action": null, "reward": 0.0, "visits": 101, ...,
              "children": [...]}}

Floats are written with ``repr`` precision, so a load/dump cycle is exact.
Zero-visit expansion stubs are not written.  When a node carries summarized
(reduced) fields they go under ``"summary"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .tree import ActionAlphabet, TreeNode, format_path, validate

FORMAT = "mcts-xray-tree/1"


class TreeParseError(ValueError):
    pass


class TreeValidationError(ValueError):
    def __init__(self, violations):
        self.violations = violations
        lines = "; ".join(str(v) for v in violations[:5])
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        super().__init__(f"tree fails validation: {lines}{more}")


@dataclass
class TreeDocument:
    root: TreeNode
    alphabet: ActionAlphabet
    meta: dict = field(default_factory=dict)


def _node_to_dict(node: TreeNode) -> dict:
    d: dict[str, Any] = {
        "action": node.action,
        "reward": node.reward,
        "visits": node.number_visits,
        "value": node.value,
        "value_sum": node.value_sum,
        "terminal": node.terminal,
        "entropy": node.entropy,
        "depth": node.depth,
        "max_branching": node.max_branching,
        "child_visits": list(node.child_number_visits),
    }
    if node.prior is not None:
        d["prior"] = list(node.prior)
    if node.has_summary:
        d["summary"] = {
            "visits": node.number_visits_summarized,
            "child_visits": list(node.child_num_visits_summarized),
            "entropy": node.entropy_summarized,
            "depth": node.depth_summarized,
            "size": node.size_summarized,
            "children": sorted(node.children_summarized),
        }
    d["children"] = [_node_to_dict(c) for _, c in node.visited_children()]
    return d


def to_document(root: TreeNode, alphabet: Optional[ActionAlphabet] = None,
                meta: Optional[dict] = None) -> dict:
    alphabet = alphabet or ActionAlphabet(root.n_actions)
    return {
        "format": FORMAT,
        "alphabet": {"size": alphabet.size,
                     "names": list(alphabet.names) if alphabet.names else None},
        "meta": dict(meta or {}),
        "root": _node_to_dict(root),
    }


def serialize(root: TreeNode, alphabet: Optional[ActionAlphabet] = None,
              meta: Optional[dict] = None) -> str:
    return json.dumps(to_document(root, alphabet, meta), indent=1) + "\n"


_INT = "int"
_NUM = "number"
_BOOL = "bool"
_FIELDS = (("reward", _NUM), ("visits", _INT), ("value", _NUM), ("value_sum", _NUM),
           ("terminal", _BOOL), ("entropy", _NUM), ("depth", _INT),
           ("max_branching", _INT), ("child_visits", "list"), ("children", "list"))


def _check(value, kind, where, name):
    ok = {
        _INT: isinstance(value, int) and not isinstance(value, bool),
        _NUM: isinstance(value, (int, float)) and not isinstance(value, bool),
        _BOOL: isinstance(value, bool),
        "list": isinstance(value, list),
    }[kind]
    if not ok:
        raise TreeParseError(f"{where}: field {name!r} should be {kind}, got {value!r}")
    return value


def _node_from_dict(d, n_actions, parent, path) -> TreeNode:
    where = format_path(path)
    if not isinstance(d, dict):
        raise TreeParseError(f"{where}: node is not an object")
    for name, kind in _FIELDS:
        if name not in d:
            raise TreeParseError(f"{where}: missing field {name!r}")
        _check(d[name], kind, where, name)
    action = d.get("action")
    if parent is not None and (not isinstance(action, int) or isinstance(action, bool)):
        raise TreeParseError(f"{where}: child node needs an integer action")
    counts = d["child_visits"]
    for c in counts:
        _check(c, _INT, where, "child_visits")
    node = TreeNode(len(counts), action=action, parent=parent,
                    reward=float(d["reward"]), terminal=d["terminal"])
    node.number_visits = d["visits"]
    node.value = float(d["value"])
    node.value_sum = float(d["value_sum"])
    node.entropy = float(d["entropy"])
    node.depth = d["depth"]
    node.max_branching = d["max_branching"]
    node.child_number_visits = list(counts)
    if d.get("prior") is not None:
        node.prior = [float(_check(p, _NUM, where, "prior")) for p in d["prior"]]
    for child_doc in d["children"]:
        a = child_doc.get("action") if isinstance(child_doc, dict) else None
        child = _node_from_dict(child_doc, n_actions, node, path + (a,))
        if child.action in node.children:
            raise TreeParseError(f"{where}: duplicate child for action {child.action}")
        node.children[child.action] = child
    summary = d.get("summary")
    if summary is not None:
        try:
            node.number_visits_summarized = _check(summary["visits"], _INT, where, "summary.visits")
            node.child_num_visits_summarized = list(summary["child_visits"])
            node.entropy_summarized = float(_check(summary["entropy"], _NUM, where, "summary.entropy"))
            node.depth_summarized = _check(summary["depth"], _INT, where, "summary.depth")
            node.size_summarized = _check(summary["size"], _INT, where, "summary.size")
            kept = summary["children"]
        except KeyError as exc:
            raise TreeParseError(f"{where}: summary missing field {exc.args[0]!r}") from None
        missing = [a for a in kept if a not in node.children]
        if missing:
            raise TreeParseError(f"{where}: summary keeps unknown children {missing}")
        node.children_summarized = {a: node.children[a] for a in kept}
    return node


def read_document(text: str, check: bool = True) -> TreeDocument:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeParseError(f"not a JSON document: {exc}") from None
    if not isinstance(doc, dict) or "root" not in doc:
        raise TreeParseError("document has no 'root'")
    if doc.get("format", FORMAT) != FORMAT:
        raise TreeParseError(f"unsupported format {doc.get('format')!r}")
    alpha = doc.get("alphabet") or {}
    root_doc = doc["root"]
    size = alpha.get("size")
    if size is None and isinstance(root_doc, dict):
        size = len(root_doc.get("child_visits") or [])
    names = alpha.get("names")
    try:
        alphabet = ActionAlphabet(size, tuple(names) if names else None)
    except (TypeError, ValueError) as exc:
        raise TreeParseError(f"bad alphabet: {exc}") from None
    root = _node_from_dict(root_doc, alphabet.size, None, ())
    if root.n_actions != alphabet.size:
        raise TreeParseError(f"root: child_visits has {root.n_actions} entries, "
                             f"alphabet declares {alphabet.size}")
    if check:
        problems = validate(root)
        if problems:
            raise TreeValidationError(problems)
    return TreeDocument(root, alphabet, doc.get("meta") or {})


def deserialize(text: str) -> TreeNode:
    return read_document(text).root


def save_tree(path, root: TreeNode, alphabet: Optional[ActionAlphabet] = None,
              meta: Optional[dict] = None) -> None:
    Path(path).write_text(serialize(root, alphabet, meta), encoding="utf-8")


def load_tree(path) -> TreeDocument:
    return read_document(Path(path).read_text(encoding="utf-8"))


def trees_equal(a: TreeNode, b: TreeNode) -> bool:
    """Field-wise equality of the visited trees."""
    return serialize(a) == serialize(b)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(root: TreeNode, show_summarized: bool = False,
               alphabet: Optional[ActionAlphabet] = None) -> str:
    """Render the tree (or its summarized version) as a DOT digraph."""
    alphabet = alphabet or ActionAlphabet(root.n_actions)
    if show_summarized and not root.has_summary:
        raise ValueError("tree has no summarized fields")
    lines = ["digraph mcts {", '  node [shape=box, fontname="Helvetica"];']
    counter = 0
    stack = [(root, None, None)]
    while stack:
        node, parent_id, action = stack.pop()
        node_id = f"n{counter}"
        counter += 1
        if show_summarized:
            visits, entropy = node.number_visits_summarized, node.entropy_summarized
            kids = [(a, node.children_summarized[a]) for a in sorted(node.children_summarized)]
        else:
            visits, entropy = node.number_visits, node.entropy
            kids = node.visited_children()
        label = f"N={visits}\\nH={entropy:.3f}"
        style = ", style=filled, fillcolor=lightgrey" if node.terminal else ""
        lines.append(f'  {node_id} [label="{label}"{style}];')
        if parent_id is not None:
            lines.append(f'  {parent_id} -> {node_id} [label="{_dot_escape(alphabet.name(action))}"];')
        for a, child in reversed(kids):
            stack.append((child, node_id, a))
    lines.append("}")
    return "\n".join(lines) + "\n"
