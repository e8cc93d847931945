"""scikit-learn style wrappers around tree feature extraction and the GP methods.

Images are passed as an ``(n, h, w)`` array or a list of 2-D arrays (sizes
may differ between images).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .data import TaskSpec
from .features import FeatureExtractor
from .gp.tree import Tree, parse_tree
from .imageops import MIN_DESCRIPTOR_SIZE
from .learners import LinearSVM, MinMaxNormalizer
from .multitask import EvoConfig, Solution, fgp_run, ksmtgp_run, mtfgp_run


def check_images(X) -> list[np.ndarray]:
    """Validate an image batch: finite 2-D float arrays of at least 8x8."""
    if isinstance(X, np.ndarray):
        if X.ndim == 2:
            raise ValueError("expected a batch of images, got a single 2-D array; use X[None]")
        if X.ndim != 3:
            raise ValueError(f"expected an (n, h, w) array, got shape {X.shape}")
        images = list(X.astype(np.float64, copy=False))
    else:
        images = [np.asarray(img, dtype=np.float64) for img in X]
    if not images:
        raise ValueError("empty image batch")
    for i, img in enumerate(images):
        if img.ndim != 2:
            raise ValueError(f"image {i} has shape {img.shape}, expected 2-D")
        if min(img.shape) < MIN_DESCRIPTOR_SIZE:
            raise ValueError(f"image {i} of shape {img.shape} is smaller than 8x8")
        if not np.all(np.isfinite(img)):
            raise ValueError(f"image {i} has non-finite pixels")
    return images


def check_image_labels(X, y) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    images = check_images(X)
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != len(images):
        raise ValueError(f"need one label per image, got {y.shape} for {len(images)} images")
    classes, y_idx = np.unique(y, return_inverse=True)
    return images, classes, y_idx


def _as_tree(t) -> Tree:
    return t if isinstance(t, Tree) else parse_tree(str(t))


def _task(name: str, images, y_idx, n_classes: int) -> TaskSpec:
    # the evolutionary loop only reads the training split
    imgs = tuple(images)
    return TaskSpec(name, imgs, y_idx, imgs, y_idx, n_classes)


class TreeFeatures(TransformerMixin, BaseEstimator):
    """Concatenated feature vectors of fixed GP trees."""

    def __init__(self, trees=("Root2(HOG(Image), LBP(Image))",)):
        self.trees = trees

    def fit(self, X, y=None):
        check_images(X)
        trees = [self.trees] if isinstance(self.trees, (str, Tree)) else list(self.trees)
        self.trees_ = [_as_tree(t) for t in trees]
        return self

    def transform(self, X):
        check_is_fitted(self, "trees_")
        ext = FeatureExtractor(check_images(X))
        return np.hstack([ext.transform(t) for t in self.trees_])


def _features(trees, images) -> np.ndarray:
    ext = FeatureExtractor(images)
    return np.hstack([ext.transform(t) for t in trees])


class _SolutionModel:
    """Normaliser plus linear SVM on a solution's features."""

    def __init__(self, solution: Solution, images, y_idx, seed: int):
        self.solution = solution
        X = _features(solution.trees, images)
        self.norm = MinMaxNormalizer().fit(X)
        self.svm = LinearSVM(random_state=seed).fit(self.norm.transform(X), y_idx)

    def predict(self, images) -> np.ndarray:
        X = self.norm.transform(_features(self.solution.trees, images))
        return self.svm.predict(X)


class GPClassifier(ClassifierMixin, BaseEstimator):
    """Single-task GP feature learning (``method`` "fgp" or "mtfgp") followed
    by a linear SVM on the evolved features."""

    def __init__(self, method="fgp", pop_size=100, generations=50, k_folds=3, random_state=0, workers=1):
        self.method = method
        self.pop_size = pop_size
        self.generations = generations
        self.k_folds = k_folds
        self.random_state = random_state
        self.workers = workers

    def _config(self) -> EvoConfig:
        return EvoConfig(
            pop_size=self.pop_size, generations=self.generations, k_folds=self.k_folds,
            seed=self.random_state, workers=self.workers,
        )

    def fit(self, X, y):
        if self.method not in ("fgp", "mtfgp"):
            raise ValueError(f"method must be 'fgp' or 'mtfgp', got {self.method!r}")
        images, self.classes_, y_idx = check_image_labels(X, y)
        run = fgp_run if self.method == "fgp" else mtfgp_run
        self.solution_, self.record_ = run(_task("task", images, y_idx, len(self.classes_)), self._config())
        self.model_ = _SolutionModel(self.solution_, images, y_idx, self.random_state)
        return self

    def transform(self, X):
        check_is_fitted(self, "solution_")
        return _features(self.solution_.trees, check_images(X))

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.classes_[self.model_.predict(check_images(X))]


class MultiTaskGPClassifier(BaseEstimator):
    """Two related tasks learned together: a shared common tree plus one
    task-specific tree per task. ``fit`` takes both tasks' data and
    ``predict``/``score`` take a ``task`` index (0 or 1)."""

    def __init__(self, pop_size=100, generations=50, k_folds=3, random_state=0, workers=1):
        self.pop_size = pop_size
        self.generations = generations
        self.k_folds = k_folds
        self.random_state = random_state
        self.workers = workers

    def fit(self, X1, y1, X2, y2):
        cfg = EvoConfig(
            pop_size=self.pop_size, generations=self.generations, k_folds=self.k_folds,
            seed=self.random_state, workers=self.workers,
        )
        tasks, self.classes_, data = [], [], []
        for k, (X, y) in enumerate(((X1, y1), (X2, y2))):
            images, classes, y_idx = check_image_labels(X, y)
            tasks.append(_task(f"task{k + 1}", images, y_idx, len(classes)))
            self.classes_.append(classes)
            data.append((images, y_idx))
        s1, s2, self.record_ = ksmtgp_run(tasks[0], tasks[1], cfg)
        self.solutions_ = [s1, s2]
        self.models_ = [_SolutionModel(s, imgs, yi, self.random_state) for s, (imgs, yi) in zip(self.solutions_, data)]
        return self

    def predict(self, X, task: int = 0):
        check_is_fitted(self, "models_")
        return self.classes_[task][self.models_[task].predict(check_images(X))]

    def score(self, X, y, task: int = 0) -> float:
        return float(np.mean(self.predict(X, task) == np.asarray(y)))
