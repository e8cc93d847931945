"""Min-max normalisation, a linear SVM and stratified cross-validation."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._kernels import dual_cd_hinge

DEFAULT_FOLDS = 3


class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Per-column ``(x - min) / (max - min)``; constant columns map to 0.

    Values outside the fitted range are not clipped.
    """

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_features=0)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_array(X, ensure_min_features=0)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        span = self.data_max_ - self.data_min_
        out = np.zeros_like(X)
        np.divide(X - self.data_min_, span, out=out, where=span > 0)
        return out


def fit_normalizer(X) -> MinMaxNormalizer:
    return MinMaxNormalizer().fit(X)


def apply_normalizer(norm: MinMaxNormalizer, X) -> np.ndarray:
    return norm.transform(X)


class LinearSVM(ClassifierMixin, BaseEstimator):
    """One-vs-rest linear SVM (hinge loss, L2 penalty) trained by dual
    coordinate descent over the Gram matrix, shared by all binary problems.

    The bias is learned as the weight of a constant extra feature. The
    visiting order of training examples is drawn once from
    ``random_state`` and reused every epoch, so fitting is deterministic.

    Attributes
    ----------
    coef_ : ndarray of shape (n_classes, n_features)
    intercept_ : ndarray of shape (n_classes,)
    """

    def __init__(self, C=1.0, max_iter=1000, tol=1e-4, random_state=0):
        self.C = C
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_features=0)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        n, d = X.shape
        n_classes = len(self.classes_)
        self.n_features_in_ = d
        self.coef_ = np.zeros((n_classes, d))
        self.intercept_ = np.zeros(n_classes)
        self.n_iter_ = 0
        if n_classes == 1:
            return self
        Xb = np.hstack([X, np.ones((n, 1))])
        G = np.ascontiguousarray(Xb @ Xb.T)
        order = np.random.default_rng(self.random_state).permutation(n)
        targets = [1] if n_classes == 2 else range(n_classes)
        for k in targets:
            yk = np.where(y_idx == k, 1.0, -1.0)
            alpha, epochs, _ = dual_cd_hinge(G, yk, float(self.C), order, int(self.max_iter), float(self.tol))
            w = Xb.T @ (alpha * yk)
            self.coef_[k], self.intercept_[k] = w[:-1], w[-1]
            self.n_iter_ = max(self.n_iter_, epochs)
        if n_classes == 2:
            self.coef_[0], self.intercept_[0] = -self.coef_[1], -self.intercept_[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, ensure_min_features=0)
        return X @ self.coef_.T + self.intercept_

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]


def train_linear(X, y, seed: int = 0, C: float = 1.0) -> LinearSVM:
    return LinearSVM(C=C, random_state=seed).fit(X, y)


def accuracy(model, X, y) -> float:
    """Percentage of correctly classified rows."""
    y = np.asarray(y)
    return 100.0 * float(np.mean(model.predict(X) == y))


def stratified_kfold(labels, k: int = DEFAULT_FOLDS, seed: int = 0) -> list[np.ndarray]:
    """Split indices into ``k`` disjoint folds with per-class counts balanced.

    Each class is shuffled and dealt round-robin; the dealing position
    carries over between classes so fold sizes stay balanced too.
    """
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    small = classes[counts < k]
    if len(small):
        raise ValueError(f"classes {small.tolist()} have fewer than k={k} instances")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for c in classes:
        idx = rng.permutation(np.flatnonzero(labels == c))
        for i in idx:
            folds[pos % k].append(int(i))
            pos += 1
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def cv_accuracy(X, y, k: int = DEFAULT_FOLDS, seed: int = 0, folds=None) -> float:
    """Mean held-out accuracy over stratified folds. ``X`` should already be normalised."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if folds is None:
        folds = stratified_kfold(y, k, seed)
    scores = []
    mask = np.ones(len(y), dtype=bool)
    for test in folds:
        mask[:] = True
        mask[test] = False
        model = train_linear(X[mask], y[mask], seed)
        scores.append(accuracy(model, X[test], y[test]))
    return float(np.mean(scores))
