"""Immutable expression trees: the genotype evolved by the GP engine.

A tree is a preorder node arena (root at index 0).  Editing operations
return new trees; nothing is ever mutated in place, so trees are safe to
hash, cache and share across threads.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Op",
    "Constant",
    "Variable",
    "BinaryOp",
    "ExprTree",
    "DepthLimitError",
    "DIV_GUARD",
    "DEPTH_CAP",
    "INTERNAL_BIAS",
    "constant",
    "variable",
    "binary",
    "evaluate",
    "evaluate_matrix",
    "random_subtree",
    "subtree_at",
    "replace_subtree",
    "to_canonical_string",
    "parse_expression",
    "audit_tree",
]

# Division denominators at or below this magnitude yield 1.0 instead of a/b,
# keeping every evolved program total.
DIV_GUARD = 1e-6

# Hard limit on tree depth, independent of the parsimony penalty.
DEPTH_CAP = 17

# Probability that subtree selection picks an internal node when one exists.
INTERNAL_BIAS = 0.9


class Op(enum.Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"


OPS = (Op.ADD, Op.SUB, Op.MUL, Op.DIV)


@dataclass(frozen=True, slots=True)
class Constant:
    value: float


@dataclass(frozen=True, slots=True)
class Variable:
    index: int


@dataclass(frozen=True, slots=True)
class BinaryOp:
    op: Op
    left: int
    right: int


Node = Constant | Variable | BinaryOp


class DepthLimitError(ValueError):
    """An edit would have produced a tree deeper than the configured cap."""


@dataclass(frozen=True)
class ExprTree:
    """Rooted expression tree stored as a preorder arena (root at index 0)."""

    nodes: tuple[Node, ...]
    root: int
    length: int
    depth: int

    def __post_init__(self) -> None:
        if self.length < 1 or self.depth < 0:
            raise ValueError("empty or malformed tree")

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]


def _rebuild(nodes, root: int, replace_at: int = -1, replacement: ExprTree | None = None):
    """Renumber a node graph into a fresh preorder arena.

    If ``replace_at`` names a node, the subtree rooted there is substituted by
    ``replacement``.  Returns (arena tuple, depth).
    """
    out: list[Node] = []
    max_depth = 0

    def copy_repl(src: tuple[Node, ...], i: int, d: int) -> int:
        nonlocal max_depth
        node = src[i]
        j = len(out)
        out.append(node)
        if d > max_depth:
            max_depth = d
        if isinstance(node, BinaryOp):
            left = copy_repl(src, node.left, d + 1)
            right = copy_repl(src, node.right, d + 1)
            out[j] = BinaryOp(node.op, left, right)
        return j

    def walk(i: int, d: int) -> int:
        nonlocal max_depth
        if i == replace_at:
            assert replacement is not None
            return copy_repl(replacement.nodes, replacement.root, d)
        node = nodes[i]
        j = len(out)
        out.append(node)
        if d > max_depth:
            max_depth = d
        if isinstance(node, BinaryOp):
            left = walk(node.left, d + 1)
            right = walk(node.right, d + 1)
            out[j] = BinaryOp(node.op, left, right)
        return j

    walk(root, 0)
    return tuple(out), max_depth


def _tree_from_preorder(nodes: tuple[Node, ...], depth: int) -> ExprTree:
    return ExprTree(nodes=nodes, root=0, length=len(nodes), depth=depth)


def constant(value: float) -> ExprTree:
    return _tree_from_preorder((Constant(float(value)),), 0)


def variable(index: int) -> ExprTree:
    if index < 0:
        raise ValueError("variable index must be non-negative")
    return _tree_from_preorder((Variable(int(index)),), 0)


def binary(op: Op, left: ExprTree, right: ExprTree) -> ExprTree:
    """Compose two trees under a binary operator."""
    nodes: list[Node] = [BinaryOp(op, 1, 1 + left.length)]
    for child in (left, right):
        offset = len(nodes)
        for n in child.nodes:
            if isinstance(n, BinaryOp):
                nodes.append(BinaryOp(n.op, n.left + offset, n.right + offset))
            else:
                nodes.append(n)
    return _tree_from_preorder(tuple(nodes), max(left.depth, right.depth) + 1)


def _apply(op: Op, a: float, b: float) -> float:
    if op is Op.ADD:
        return a + b
    if op is Op.SUB:
        return a - b
    if op is Op.MUL:
        return a * b
    return a / b if abs(b) > DIV_GUARD else 1.0


def evaluate(tree: ExprTree, row) -> float:
    """Evaluate the tree on one input row.  Pure; total for finite inputs."""
    vals = [0.0] * tree.length
    # Preorder puts children after their parent, so a reverse sweep is a
    # valid bottom-up evaluation order.
    for i in range(tree.length - 1, -1, -1):
        node = tree.nodes[i]
        if isinstance(node, Constant):
            vals[i] = node.value
        elif isinstance(node, Variable):
            vals[i] = float(row[node.index])
        else:
            vals[i] = _apply(node.op, vals[node.left], vals[node.right])
    return vals[tree.root]


def evaluate_matrix(tree: ExprTree, X: np.ndarray) -> np.ndarray:
    """Evaluate the tree on every row of X at once.

    Constant subtrees are folded as Python scalars; the result is always a
    float array of length ``X.shape[0]``.
    """
    n_rows = X.shape[0]
    vals: list = [None] * tree.length
    with np.errstate(all="ignore"):
        for i in range(tree.length - 1, -1, -1):
            node = tree.nodes[i]
            if isinstance(node, Constant):
                vals[i] = node.value
            elif isinstance(node, Variable):
                vals[i] = X[:, node.index]
            else:
                a = vals[node.left]
                b = vals[node.right]
                op = node.op
                if op is Op.ADD:
                    vals[i] = a + b
                elif op is Op.SUB:
                    vals[i] = a - b
                elif op is Op.MUL:
                    vals[i] = a * b
                elif isinstance(b, float):
                    if abs(b) > DIV_GUARD:
                        vals[i] = a / b
                    else:
                        vals[i] = 1.0 if isinstance(a, float) else np.ones(n_rows)
                else:
                    vals[i] = np.where(np.abs(b) > DIV_GUARD, a / b, 1.0)
    result = vals[tree.root]
    if isinstance(result, float):
        return np.full(n_rows, result)
    return np.asarray(result, dtype=float)


def random_subtree(tree: ExprTree, rng: np.random.Generator) -> int:
    """Pick a node id, preferring internal nodes 90/10 when any exist."""
    internal = [i for i, n in enumerate(tree.nodes) if isinstance(n, BinaryOp)]
    if not internal:
        return int(rng.integers(tree.length))
    if rng.random() < INTERNAL_BIAS:
        pool = internal
    else:
        pool = [i for i in range(tree.length) if not isinstance(tree.nodes[i], BinaryOp)]
    return pool[int(rng.integers(len(pool)))]


def subtree_at(tree: ExprTree, node_id: int) -> ExprTree:
    """Extract the subtree rooted at ``node_id`` as an independent tree."""
    if not 0 <= node_id < tree.length:
        raise ValueError(f"node id {node_id} not in tree")
    nodes, depth = _rebuild(tree.nodes, node_id)
    return _tree_from_preorder(nodes, depth)


def replace_subtree(tree: ExprTree, at: int, donor: ExprTree, depth_cap: int | None = DEPTH_CAP) -> ExprTree:
    """Return a new tree with the subtree at ``at`` replaced by ``donor``."""
    if not 0 <= at < tree.length:
        raise ValueError(f"node id {at} not in tree")
    nodes, depth = _rebuild(tree.nodes, tree.root, replace_at=at, replacement=donor)
    if depth_cap is not None and depth > depth_cap:
        raise DepthLimitError(f"edit would create depth {depth} > cap {depth_cap}")
    return _tree_from_preorder(nodes, depth)


def to_canonical_string(tree: ExprTree, names) -> str:
    """Deterministic parenthesized infix form; equal trees print equally."""

    def rec(i: int) -> str:
        node = tree.nodes[i]
        if isinstance(node, Constant):
            return repr(node.value)
        if isinstance(node, Variable):
            return names[node.index]
        return f"({rec(node.left)} {node.op.value} {rec(node.right)})"

    return rec(tree.root)


_NUMBER_RE = re.compile(r"-?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


def parse_expression(text: str, names) -> ExprTree:
    """Parse the canonical grammar ``expr := number | name | "(" expr op expr ")"``."""
    index = {name: i for i, name in enumerate(names)}
    pos = 0

    def skip_ws() -> None:
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def operand() -> ExprTree:
        nonlocal pos
        skip_ws()
        if pos >= len(text):
            raise ValueError("unexpected end of expression")
        ch = text[pos]
        if ch == "(":
            pos += 1
            left = operand()
            skip_ws()
            if pos >= len(text) or text[pos] not in "+-*/":
                raise ValueError(f"expected operator at position {pos}")
            op = Op(text[pos])
            pos += 1
            right = operand()
            skip_ws()
            if pos >= len(text) or text[pos] != ")":
                raise ValueError(f"expected ')' at position {pos}")
            pos += 1
            return binary(op, left, right)
        m = _NUMBER_RE.match(text, pos)
        if m and (ch.isdigit() or ch == "." or ch == "-"):
            pos = m.end()
            return constant(float(m.group()))
        m = _NAME_RE.match(text, pos)
        if m:
            name = m.group()
            if name not in index:
                raise ValueError(f"unknown variable name {name!r}")
            pos = m.end()
            return variable(index[name])
        raise ValueError(f"cannot parse expression at position {pos}")

    result = operand()
    skip_ws()
    if pos != len(text):
        raise ValueError(f"trailing input at position {pos}")
    return result


def audit_tree(tree: ExprTree) -> None:
    """Raise ValueError unless the tree satisfies every structural invariant."""
    if tree.root != 0:
        raise ValueError("root must sit at arena index 0")
    if tree.length != len(tree.nodes):
        raise ValueError("stored length disagrees with arena size")
    seen = [False] * tree.length
    max_depth = 0
    stack = [(tree.root, 0)]
    while stack:
        i, d = stack.pop()
        if not 0 <= i < tree.length:
            raise ValueError(f"child reference {i} out of range")
        if seen[i]:
            raise ValueError(f"node {i} reachable more than once")
        seen[i] = True
        if d > max_depth:
            max_depth = d
        node = tree.nodes[i]
        if isinstance(node, BinaryOp):
            stack.append((node.left, d + 1))
            stack.append((node.right, d + 1))
        elif isinstance(node, Constant):
            if not math.isfinite(node.value):
                raise ValueError("constant leaf is not finite")
        elif isinstance(node, Variable):
            if node.index < 0:
                raise ValueError("negative variable index")
        else:
            raise ValueError(f"unknown node kind {type(node)}")
    if not all(seen):
        orphan = seen.index(False)
        raise ValueError(f"node {orphan} unreachable from root")
    if max_depth != tree.depth:
        raise ValueError(f"stored depth {tree.depth} != recomputed {max_depth}")
