"""Fitness functions and a (optionally multi-process) evaluation pool."""

from __future__ import annotations

import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..data import TaskSpec
from ..features import FeatureExtractor
from ..gp.tree import EvaluationError, Tree
from ..learners import MinMaxNormalizer, cv_accuracy, stratified_kfold

WORST = -math.inf


@dataclass
class TaskContext:
    """A task's training split with fixed CV folds and a feature cache."""

    task: TaskSpec
    k: int = 3
    seed: int = 0
    extractor: FeatureExtractor = field(init=False, repr=False)
    folds: list = field(init=False, repr=False)

    def __post_init__(self):
        self.extractor = FeatureExtractor(self.task.train_images)
        self.folds = stratified_kfold(self.task.train_labels, self.k, self.seed)

    def features(self, tree: Tree | None) -> np.ndarray:
        return self.extractor.transform(tree)

    def accuracy(self, X: np.ndarray) -> float:
        """Normalise on the whole training table, then K-fold CV accuracy."""
        Z = MinMaxNormalizer().fit_transform(X)
        return cv_accuracy(Z, self.task.train_labels, self.k, self.seed, folds=self.folds)


AccuracyFn = Callable[[TaskContext, np.ndarray], float]


def _default_accuracy(ctx: TaskContext, X: np.ndarray) -> float:
    return ctx.accuracy(X)


def fitness_common(
    tree: Tree, ctx1: TaskContext, ctx2: TaskContext, accuracy_fn: AccuracyFn | None = None
) -> float:
    """Mean CV accuracy over both tasks minus the tree's node count."""
    acc = accuracy_fn or _default_accuracy
    try:
        acc1 = acc(ctx1, ctx1.features(tree))
        acc2 = acc(ctx2, ctx2.features(tree))
    except EvaluationError:
        return WORST
    return (acc1 + acc2) / 2 - tree.size


def fitness_task(task_tree: Tree, common_features: np.ndarray, ctx: TaskContext) -> float:
    """CV accuracy of task-tree features concatenated with precomputed common features."""
    try:
        own = ctx.features(task_tree)
    except EvaluationError:
        return WORST
    return ctx.accuracy(np.hstack([own, common_features]))


def fitness_trees(trees: Sequence[Tree], ctx: TaskContext) -> float:
    """CV accuracy of the concatenated features of ``trees``."""
    try:
        X = np.hstack([ctx.features(t) for t in trees])
    except EvaluationError:
        return WORST
    return ctx.accuracy(X)


def _execute(contexts: Sequence[TaskContext], job: tuple) -> float:
    kind = job[0]
    if kind == "common":
        return fitness_common(job[1], contexts[0], contexts[1])
    if kind == "task":
        _, t, tree, common = job
        ctx = contexts[t]
        try:
            common_features = ctx.features(common)
        except EvaluationError:
            return WORST
        return fitness_task(tree, common_features, ctx)
    if kind == "trees":
        _, t, trees = job
        return fitness_trees(trees, contexts[t])
    raise ValueError(f"unknown job kind {kind!r}")


_WORKER_CONTEXTS: Sequence[TaskContext] = ()


def _init_worker(contexts) -> None:
    global _WORKER_CONTEXTS
    _WORKER_CONTEXTS = contexts


def _run_job(job: tuple) -> float:
    return _execute(_WORKER_CONTEXTS, job)


class Evaluator:
    """Runs fitness jobs in order, serially or on a forked process pool.

    Jobs are ``("common", tree)``, ``("task", t, tree, common_tree)`` or
    ``("trees", t, trees)``. Results come back in submission order, so the
    number of workers never changes a run's outcome.
    """

    def __init__(self, contexts: Sequence[TaskContext], workers: int = 1):
        self.contexts = list(contexts)
        self.workers = workers
        self.n_evaluations = 0
        self._pool = None
        if workers > 1:
            self._pool = ProcessPoolExecutor(
                workers, mp_context=mp.get_context("fork"), initializer=_init_worker, initargs=(self.contexts,)
            )

    def run(self, jobs: Sequence[tuple]) -> list[float]:
        self.n_evaluations += len(jobs)
        if self._pool is None:
            return [_execute(self.contexts, j) for j in jobs]
        chunk = max(1, len(jobs) // (4 * self.workers))
        return list(self._pool.map(_run_job, jobs, chunksize=chunk))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
