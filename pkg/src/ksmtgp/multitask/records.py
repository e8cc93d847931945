from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from ..gp.tree import Tree, parse_tree


@dataclass(frozen=True)
class EvoConfig:
    """Evolutionary run settings; defaults follow the published setup."""

    pop_size: int = 100
    generations: int = 50
    p_crossover: float = 0.8
    p_mutation: float = 0.19
    p_elitism: float = 0.01
    tournament_size: int = 5
    min_depth: int = 2
    max_depth: int = 8
    k_folds: int = 3
    rmp: float = 0.3
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        rates = (self.p_crossover, self.p_mutation, self.p_elitism)
        if any(not 0 <= r <= 1 for r in rates) or not math.isclose(sum(rates), 1.0, abs_tol=1e-9):
            raise ValueError(f"crossover, mutation and elitism rates must be in [0,1] and sum to 1, got {rates}")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be positive")
        if not 2 <= self.min_depth <= self.max_depth <= 8:
            raise ValueError("need 2 <= min_depth <= max_depth <= 8")
        if self.k_folds < 2:
            raise ValueError("k_folds must be at least 2")
        if not 0 <= self.rmp <= 1:
            raise ValueError("rmp must be in [0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class Solution:
    """Trees solving one task; features are task-tree features followed by
    any extra trees' features, then the common tree's."""

    task_tree: Tree
    common_tree: Tree | None = None
    fitness: float = -math.inf
    generation: int = 0
    extra_trees: tuple[Tree, ...] = ()

    @property
    def own_trees(self) -> tuple[Tree, ...]:
        return (self.task_tree, *self.extra_trees)

    @property
    def trees(self) -> tuple[Tree, ...]:
        return self.own_trees + ((self.common_tree,) if self.common_tree is not None else ())

    @property
    def task_size(self) -> int:
        return sum(t.size for t in self.own_trees)

    @property
    def common_size(self) -> int:
        return self.common_tree.size if self.common_tree is not None else 0

    @property
    def size(self) -> int:
        return self.task_size + self.common_size

    def to_text(self) -> str:
        lines = [f"task={self.task_tree}"]
        lines += [f"extra={t}" for t in self.extra_trees]
        if self.common_tree is not None:
            lines.append(f"common={self.common_tree}")
        lines.append(f"fitness={self.fitness:.6f}")
        lines.append(f"generation={self.generation}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Solution":
        task = common = None
        extra: list[Tree] = []
        fitness, generation = -math.inf, 0
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"line {lineno}: expected key=value")
            if key == "task":
                task = parse_tree(value)
            elif key == "extra":
                extra.append(parse_tree(value))
            elif key == "common":
                common = parse_tree(value)
            elif key == "fitness":
                fitness = float(value)
            elif key == "generation":
                generation = int(value)
            else:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
        if task is None:
            raise ValueError("solution text has no task= line")
        return cls(task, common, fitness, generation, tuple(extra))


@dataclass
class RunRecord:
    method: str
    seed: int
    task_names: tuple[str, ...]
    trace: list[dict] = field(default_factory=list)
    solutions: list[Solution] = field(default_factory=list)
    test_accuracies: list[float] = field(default_factory=list)
    feature_counts: list[int] = field(default_factory=list)
    evaluations_per_generation: list[int] = field(default_factory=list)
    common_extractions: int = 0
    generation: int = 0
    train_seconds: float = 0.0
    test_seconds: float = 0.0
