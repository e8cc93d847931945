"""Test-set evaluation, transfer evaluation and non-evolved baselines."""

from __future__ import annotations

import numpy as np

from .. import imageops as ops
from ..data import TaskSpec, stack_images
from ..features import FeatureExtractor
from ..gp.tree import Tree
from ..learners import MinMaxNormalizer, accuracy, train_linear
from .records import Solution

DESCRIPTOR_DIMS = {"SIFT": ops.SIFT_DIM, "HOG": ops.HOG_DIM, "LBP": ops.LBP_DIM}
MODES = ("both", "common_only", "task_only")


def tree_dim(tree: Tree | None) -> int:
    """Feature count of a tree; depends only on its descriptor nodes."""
    if tree is None:
        return 0
    return sum(DESCRIPTOR_DIMS.get(n.name, 0) for n in tree.nodes)


def _mode_trees(sol: Solution, mode: str) -> tuple[Tree, ...]:
    if mode == "both":
        return sol.trees
    if mode == "task_only":
        return sol.own_trees
    if mode == "common_only":
        if sol.common_tree is None:
            raise ValueError("solution has no common tree")
        return (sol.common_tree,)
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def feature_count(sol: Solution, mode: str = "both") -> int:
    return sum(tree_dim(t) for t in _mode_trees(sol, mode))


def _features(trees: tuple[Tree, ...], images) -> np.ndarray:
    ext = FeatureExtractor(images)
    return np.hstack([ext.transform(t) for t in trees])


def _fit_score(X_train, y_train, X_test, y_test, seed: int) -> float:
    norm = MinMaxNormalizer().fit(X_train)
    model = train_linear(norm.transform(X_train), y_train, seed)
    return accuracy(model, norm.transform(X_test), y_test)


def test_evaluate(sol: Solution, task: TaskSpec, seed: int = 0, mode: str = "both") -> float:
    """Train on the full training split (normaliser fitted on train only), score on test."""
    trees = _mode_trees(sol, mode)
    X_train = _features(trees, task.train_images)
    X_test = _features(trees, task.test_images)
    return _fit_score(X_train, task.train_labels, X_test, task.test_labels, seed)


def transfer_evaluate(sol: Solution, other: TaskSpec, mode: str = "both", seed: int = 0) -> float:
    """Apply trees learned on one task to a different task's data."""
    for img in (*other.train_images, *other.test_images):
        if min(np.shape(img)) < ops.MIN_DESCRIPTOR_SIZE:
            raise ValueError(f"target image of shape {np.shape(img)} is smaller than 8x8")
    return test_evaluate(sol, other, seed, mode)


def raw_pixel_accuracy(task: TaskSpec, seed: int = 0) -> float:
    """Linear SVM on flattened, min-max normalised pixels."""
    X_train = stack_images(task.train_images).reshape(len(task.train_images), -1)
    X_test = stack_images(task.test_images).reshape(len(task.test_images), -1)
    if X_train.shape[1] != X_test.shape[1]:
        raise ValueError("raw-pixel baseline needs equally sized images")
    return _fit_score(X_train, task.train_labels, X_test, task.test_labels, seed)


DESCRIPTOR_FUNCS = {"hog": ops.hog_vec, "lbp": ops.lbp_hist, "sift": ops.sift_vec}


def descriptor_accuracy(task: TaskSpec, descriptor: str, seed: int = 0) -> float:
    """Linear SVM on a fixed HOG, LBP or SIFT descriptor."""
    fn = DESCRIPTOR_FUNCS[descriptor]
    X_train = np.stack([fn(i) for i in task.train_images])
    X_test = np.stack([fn(i) for i in task.test_images])
    return _fit_score(X_train, task.train_labels, X_test, task.test_labels, seed)


# keep pytest from collecting these when imported into test modules
test_evaluate.__test__ = False
