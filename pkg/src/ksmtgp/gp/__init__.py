"""Strongly typed GP machinery: primitives, trees and genetic operators."""

from .operators import (
    Individual,
    best_index,
    generate_subtree,
    generate_tree,
    init_population,
    ranked_indices,
    subtree_crossover,
    subtree_mutation,
    tournament_select,
)
from .primitives import PrimitiveSet, build_primitive_set
from .tree import (
    EvaluationError,
    Node,
    Tree,
    TreeParseError,
    default_pset,
    eval_tree,
    evaluate,
    parse_tree,
    serialize_tree,
    type_check,
)

__all__ = [
    "EvaluationError",
    "Individual",
    "Node",
    "PrimitiveSet",
    "Tree",
    "TreeParseError",
    "best_index",
    "build_primitive_set",
    "default_pset",
    "eval_tree",
    "evaluate",
    "generate_subtree",
    "generate_tree",
    "init_population",
    "parse_tree",
    "ranked_indices",
    "serialize_tree",
    "subtree_crossover",
    "subtree_mutation",
    "tournament_select",
    "type_check",
]
