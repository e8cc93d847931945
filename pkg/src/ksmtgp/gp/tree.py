"""Prefix-encoded typed trees, their text format and interpreter."""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Any, MutableMapping, NamedTuple

import numpy as np

from .primitives import IMG, PrimitiveSet, build_primitive_set


@lru_cache(maxsize=1)
def default_pset() -> PrimitiveSet:
    return build_primitive_set()


class Node(NamedTuple):
    name: str
    ret: str
    arity: int
    value: Any = None


class EvaluationError(RuntimeError):
    """A tree could not be evaluated on the given images."""


class TreeParseError(ValueError):
    def __init__(self, message: str, pos: int, text: str):
        super().__init__(f"{message} at position {pos}: {text[:pos]}<<<{text[pos:]}")
        self.pos = pos


class Tree:
    """Immutable typed expression tree stored in prefix order."""

    __slots__ = ("nodes", "_ends", "_depths", "_keys", "_hash")

    def __init__(self, nodes):
        self.nodes: tuple[Node, ...] = tuple(nodes)
        if not self.nodes:
            raise ValueError("a tree needs at least one node")
        self._ends = None
        self._depths = None
        self._keys = None
        self._hash = None

    def _analyze(self) -> None:
        n = len(self.nodes)
        ends = [0] * n
        depths = [0] * n

        def walk(i: int, d: int) -> int:
            depths[i] = d
            j = i + 1
            for _ in range(self.nodes[i].arity):
                if j >= n:
                    raise ValueError("truncated prefix sequence")
                j = walk(j, d + 1)
            ends[i] = j
            return j

        if walk(0, 0) != n:
            raise ValueError("prefix sequence has trailing nodes")
        self._ends = ends
        self._depths = depths

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def depth(self) -> int:
        """Number of edges on the longest root-to-leaf path."""
        if self._depths is None:
            self._analyze()
        return max(self._depths)

    def node_depth(self, i: int) -> int:
        if self._depths is None:
            self._analyze()
        return self._depths[i]

    def subtree_end(self, i: int) -> int:
        if self._ends is None:
            self._analyze()
        return self._ends[i]

    def subtree(self, i: int) -> "Tree":
        return Tree(self.nodes[i : self.subtree_end(i)])

    def children(self, i: int) -> list[int]:
        out, j = [], i + 1
        for _ in range(self.nodes[i].arity):
            out.append(j)
            j = self.subtree_end(j)
        return out

    def replace(self, i: int, nodes) -> "Tree":
        return Tree(self.nodes[:i] + tuple(nodes) + self.nodes[self.subtree_end(i) :])

    def keys(self) -> list[str]:
        """Text of the subtree rooted at every node, in prefix order."""
        if self._keys is None:
            pset = default_pset()
            keys: list[str] = [""] * len(self.nodes)
            stack: list[str] = []
            for i in range(len(self.nodes) - 1, -1, -1):
                node = self.nodes[i]
                if node.arity == 0:
                    key = _leaf_text(node, pset)
                else:
                    args = [stack.pop() for _ in range(node.arity)]
                    key = f"{node.name}({', '.join(args)})"
                keys[i] = key
                stack.append(key)
            self._keys = keys
        return self._keys

    def __str__(self) -> str:
        return self.keys()[0]

    def __repr__(self) -> str:
        return f"Tree({str(self)!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Tree) and self.nodes == other.nodes

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.nodes)
        return self._hash

    def __getstate__(self):
        return self.nodes

    def __setstate__(self, nodes):
        Tree.__init__(self, nodes)


def _leaf_text(node: Node, pset: PrimitiveSet) -> str:
    if node.value is None:
        return node.name
    return pset.terminals[node.name].fmt(node.value)


def primitive_node(pset: PrimitiveSet, name: str) -> Node:
    p = pset.primitives[name]
    return Node(p.name, p.ret, p.arity)


def type_check(tree: Tree, pset: PrimitiveSet | None = None) -> None:
    """Raise ``ValueError`` unless ``tree`` is well typed with a root primitive at the top."""
    pset = pset or default_pset()
    root = tree.nodes[0]
    prim = pset.primitives.get(root.name)
    if prim is None or not prim.root_only:
        raise ValueError(f"root must be a root primitive, got {root.name}")
    for i, node in enumerate(tree.nodes):
        if node.name in pset.primitives:
            prim = pset.primitives[node.name]
            if prim.root_only and i != 0:
                raise ValueError(f"{node.name} is only allowed at the root (node {i})")
            if node.arity != prim.arity or node.ret != prim.ret:
                raise ValueError(f"node {i} ({node.name}) has a wrong signature")
            for arg_type, c in zip(prim.args, tree.children(i)):
                if tree.nodes[c].ret != arg_type:
                    raise ValueError(f"node {c} returns {tree.nodes[c].ret}, {node.name} expects {arg_type}")
        elif node.name in pset.terminals:
            term = pset.terminals[node.name]
            if node.arity != 0 or node.ret != term.ret or (node.value is None) == term.ephemeral:
                raise ValueError(f"node {i} ({node.name}) is a malformed terminal")
        else:
            raise ValueError(f"unknown node name {node.name!r}")


serialize_tree = str

_TOKEN = re.compile(
    r"\s*(?:(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|(?P<name>[A-Za-z][A-Za-z0-9_\-]*)|(?P<punct>[(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise TreeParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def parse_tree(text: str, pset: PrimitiveSet | None = None) -> Tree:
    """Parse the ``Name(child, ...)`` text format back into a type-checked tree."""
    pset = pset or default_pset()
    tokens = _tokenize(text)
    nodes: list[Node] = []
    pos = 0

    def expect(value: str) -> None:
        nonlocal pos
        kind, tok, at = tokens[pos]
        if tok != value or kind != "punct":
            raise TreeParseError(f"expected {value!r}, found {tok or 'end of input'!r}", at, text)
        pos += 1

    def expr(expected: str, at_root: bool) -> None:
        nonlocal pos
        kind, tok, at = tokens[pos]
        if kind == "num":
            pos += 1
            terms = [t for t in pset.terminals_of(expected) if t.ephemeral]
            if not terms:
                raise TreeParseError(f"constant {tok} where a {expected} is expected", at, text)
            term = terms[0]
            try:
                value = term.parse(tok)
            except ValueError as exc:
                raise TreeParseError(f"bad {expected} constant: {exc}", at, text) from None
            nodes.append(Node(term.name, term.ret, 0, value))
            return
        if kind != "name":
            raise TreeParseError(f"unexpected {tok or 'end of input'!r}", at, text)
        pos += 1
        if tok in pset.terminals and not pset.terminals[tok].ephemeral:
            term = pset.terminals[tok]
            if term.ret != expected:
                raise TreeParseError(f"{tok} returns {term.ret}, expected {expected}", at, text)
            nodes.append(Node(term.name, term.ret, 0))
            return
        prim = pset.primitives.get(tok)
        if prim is None:
            raise TreeParseError(f"unknown name {tok!r}", at, text)
        if prim.ret != expected:
            raise TreeParseError(f"{tok} returns {prim.ret}, expected {expected}", at, text)
        if prim.root_only != at_root:
            where = "only at the root" if prim.root_only else "not at the root"
            raise TreeParseError(f"{tok} is allowed {where}", at, text)
        nodes.append(Node(prim.name, prim.ret, prim.arity))
        expect("(")
        for k, arg_type in enumerate(prim.args):
            if k:
                kind2, tok2, at2 = tokens[pos]
                if tok2 == ")":
                    raise TreeParseError(f"{tok} expects {prim.arity} arguments, got {k}", at2, text)
                expect(",")
            expr(arg_type, False)
        kind2, tok2, at2 = tokens[pos]
        if tok2 == ",":
            raise TreeParseError(f"{tok} expects {prim.arity} arguments, got more", at2, text)
        expect(")")

    if len(tokens) == 1:
        raise TreeParseError("empty input", 0, text)
    root_kind, root_tok, root_at = tokens[0]
    root_prim = pset.primitives.get(root_tok)
    if root_prim is None or not root_prim.root_only:
        raise TreeParseError(f"tree must start with a root primitive, found {root_tok!r}", root_at, text)
    expr(pset.root_type, True)
    kind, tok, at = tokens[pos]
    if kind != "end":
        raise TreeParseError(f"trailing input {tok!r}", at, text)
    return Tree(nodes)


def evaluate(
    tree: Tree,
    images: np.ndarray,
    pset: PrimitiveSet | None = None,
    cache: MutableMapping[str, np.ndarray] | None = None,
) -> np.ndarray:
    """Run ``tree`` on one image (H, W) or a stack (N, H, W).

    Returns a feature vector (dim,) for a single image or an (N, dim)
    matrix for a stack. ``cache`` maps subtree text to computed values and
    is shared across trees evaluated on the same image stack.
    """
    pset = pset or default_pset()
    images = np.asarray(images, dtype=np.float64)
    keys = tree.keys() if cache is not None else None
    nodes = tree.nodes

    def run(i: int):
        node = nodes[i]
        if node.arity == 0:
            return (images if node.ret == IMG else node.value), i + 1
        if keys is not None:
            hit = cache.get(keys[i])
            if hit is not None:
                return hit, tree.subtree_end(i)
        args, j = [], i + 1
        for _ in range(node.arity):
            val, j = run(j)
            args.append(val)
        out = pset.primitives[node.name].func(*args)
        if keys is not None:
            out = np.asarray(out)
            out.setflags(write=False)
            cache[keys[i]] = out
        return out, j

    try:
        with np.errstate(over="raise", divide="raise", invalid="raise", under="ignore"):
            out, _ = run(0)
    except (ValueError, FloatingPointError) as exc:
        raise EvaluationError(f"{tree}: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"{tree}: non-finite features")
    return out


def eval_tree(tree: Tree, img: np.ndarray, pset: PrimitiveSet | None = None) -> np.ndarray:
    return evaluate(tree, img, pset)
