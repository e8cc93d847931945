"""Graphviz export of GP trees."""

from __future__ import annotations

from .gp.tree import Tree


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(tree: Tree, name: str = "tree") -> str:
    """DOT digraph with one node per tree node and parent->child edges in
    argument order. Leaves use the same text as the tree serialisation."""
    keys = tree.keys()
    lines = [f"digraph {_quote(name)} {{", "  node [shape=box];"]
    for i, node in enumerate(tree.nodes):
        label = node.name if node.arity else keys[i]
        lines.append(f"  n{i} [label={_quote(label)}];")
    for i, node in enumerate(tree.nodes):
        for j in tree.children(i):
            lines.append(f"  n{i} -> n{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"
