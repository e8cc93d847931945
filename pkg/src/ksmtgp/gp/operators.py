"""Tree generation, variation and selection operators."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .primitives import PrimitiveSet
from .tree import Node, Tree

MIN_DEPTH = 2
MAX_DEPTH = 8
MUTATION_DEPTH = 3


@dataclass(frozen=True)
class Individual:
    trees: tuple[Tree, ...]
    fitness: float | None = None
    skill_factor: int | None = None

    @property
    def size(self) -> int:
        return sum(t.size for t in self.trees)

    def with_fitness(self, fitness: float | None) -> "Individual":
        return replace(self, fitness=fitness)


def _generate_nodes(
    pset: PrimitiveSet,
    rng: np.random.Generator,
    typ: str,
    depth: int,
    min_depth: int,
    max_depth: int,
    grow: bool,
    at_root: bool,
    out: list[Node],
) -> None:
    prims = [p for p in pset.producers(typ, root=at_root) if depth + pset.prim_height(p) <= max_depth]
    terms = [] if at_root else pset.terminals_of(typ)
    if not prims and not terms:
        raise ValueError(f"cannot complete a {typ} node at depth {depth} within max depth {max_depth}")
    use_terminal = False
    if terms:
        if not prims:
            use_terminal = True
        elif grow and depth >= min_depth:
            use_terminal = rng.random() < pset.terminal_ratio
    if use_terminal:
        term = terms[int(rng.integers(len(terms)))]
        value = term.sample(rng) if term.ephemeral else None
        out.append(Node(term.name, term.ret, 0, value))
        return
    prim = prims[int(rng.integers(len(prims)))]
    out.append(Node(prim.name, prim.ret, prim.arity))
    for arg in prim.args:
        _generate_nodes(pset, rng, arg, depth + 1, min_depth, max_depth, grow, False, out)


def generate_tree(
    pset: PrimitiveSet,
    rng: np.random.Generator,
    method: str = "grow",
    min_depth: int = MIN_DEPTH,
    max_depth: int = MAX_DEPTH,
) -> Tree:
    """Random well-typed tree rooted at a root primitive.

    ``full`` keeps expanding image-typed paths until ``max_depth``; ``grow``
    may stop a path with a terminal once ``min_depth`` is reached.
    """
    if method not in ("grow", "full"):
        raise ValueError(f"method must be 'grow' or 'full', got {method!r}")
    if not 2 <= min_depth <= max_depth <= MAX_DEPTH:
        raise ValueError(f"need 2 <= min_depth <= max_depth <= {MAX_DEPTH}, got {min_depth}, {max_depth}")
    out: list[Node] = []
    _generate_nodes(pset, rng, pset.root_type, 0, min_depth, max_depth, method == "grow", True, out)
    return Tree(out)


def generate_subtree(pset: PrimitiveSet, rng: np.random.Generator, typ: str, max_depth: int) -> tuple[Node, ...]:
    out: list[Node] = []
    _generate_nodes(pset, rng, typ, 0, 0, max_depth, True, False, out)
    return tuple(out)


def init_population(
    pset: PrimitiveSet,
    rng: np.random.Generator,
    size: int,
    n_trees: int = 1,
    min_depth: int = MIN_DEPTH,
    max_depth: int = MAX_DEPTH,
) -> list[Individual]:
    """Ramped half-and-half: individual ``i`` gets depth cycled over the range
    and alternates between grow and full."""
    if size < 2:
        raise ValueError("population size must be at least 2")
    depths = list(range(min_depth, max_depth + 1))
    pop = []
    for i in range(size):
        d = depths[i % len(depths)]
        method = "grow" if i % 2 == 0 else "full"
        trees = tuple(generate_tree(pset, rng, method, min_depth, d) for _ in range(n_trees))
        pop.append(Individual(trees))
    return pop


def subtree_crossover(
    a: Tree, b: Tree, rng: np.random.Generator, max_depth: int = MAX_DEPTH
) -> tuple[Tree, Tree]:
    """Swap a uniformly chosen pair of same-typed non-root subtrees.

    A child deeper than ``max_depth`` is replaced by its parent.
    """
    by_type_b: dict[str, list[int]] = {}
    for j in range(1, len(b.nodes)):
        by_type_b.setdefault(b.nodes[j].ret, []).append(j)
    pairs_i, counts = [], []
    for i in range(1, len(a.nodes)):
        n = len(by_type_b.get(a.nodes[i].ret, ()))
        if n:
            pairs_i.append(i)
            counts.append(n)
    if not pairs_i:
        return a, b
    cum = np.cumsum(counts)
    k = int(rng.integers(cum[-1]))
    idx = int(np.searchsorted(cum, k, side="right"))
    i = pairs_i[idx]
    j = by_type_b[a.nodes[i].ret][k - (cum[idx - 1] if idx else 0)]
    sub_a = a.nodes[i : a.subtree_end(i)]
    sub_b = b.nodes[j : b.subtree_end(j)]
    c1 = a.replace(i, sub_b)
    c2 = b.replace(j, sub_a)
    if c1.depth > max_depth:
        c1 = a
    if c2.depth > max_depth:
        c2 = b
    return c1, c2


def subtree_mutation(
    a: Tree, pset: PrimitiveSet, rng: np.random.Generator, max_depth: int = MAX_DEPTH
) -> Tree:
    """Replace a uniformly chosen non-root subtree with a freshly grown one."""
    if len(a.nodes) < 2:
        return a
    i = int(rng.integers(1, len(a.nodes)))
    typ = a.nodes[i].ret
    limit = max(MUTATION_DEPTH, int(pset.min_height(typ)))
    child = a.replace(i, generate_subtree(pset, rng, typ, limit))
    return a if child.depth > max_depth else child


def _rank_key(pop: Sequence[Individual], i: int):
    ind = pop[i]
    return (-ind.fitness, ind.size, i)


def tournament_select(pop: Sequence[Individual], rng: np.random.Generator, k: int = 5) -> int:
    """Index of the best of ``k`` uniform draws with replacement.

    Ties go to the smaller total tree size, then the earlier index.
    """
    if not pop:
        raise ValueError("cannot select from an empty population")
    draws = rng.integers(len(pop), size=k)
    return min((int(i) for i in draws), key=lambda i: _rank_key(pop, i))


def best_index(pop: Sequence[Individual]) -> int:
    return min(range(len(pop)), key=lambda i: _rank_key(pop, i))


def ranked_indices(pop: Sequence[Individual]) -> list[int]:
    return sorted(range(len(pop)), key=lambda i: _rank_key(pop, i))
