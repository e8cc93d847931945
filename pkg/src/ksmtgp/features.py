"""Batched tree evaluation over an image set with subtree memoisation."""

from __future__ import annotations

from collections import OrderedDict
from typing import Sequence

import numpy as np

from .gp.primitives import PrimitiveSet
from .gp.tree import EvaluationError, Tree, default_pset, evaluate


class LRUCache:
    """Mapping with a byte budget; least recently used entries are evicted first."""

    def __init__(self, max_bytes: int = 256 * 2**20):
        self.max_bytes = max_bytes
        self.nbytes = 0
        self._data: OrderedDict[str, np.ndarray] = OrderedDict()

    def get(self, key, default=None):
        val = self._data.get(key)
        if val is None:
            return default
        self._data.move_to_end(key)
        return val

    def __setitem__(self, key, value) -> None:
        size = getattr(value, "nbytes", 0)
        if size > self.max_bytes:
            return
        old = self._data.pop(key, None)
        if old is not None:
            self.nbytes -= old.nbytes
        self._data[key] = value
        self.nbytes += size
        while self.nbytes > self.max_bytes:
            _, ev = self._data.popitem(last=False)
            self.nbytes -= ev.nbytes

    def __contains__(self, key) -> bool:
        return key in self._data

    def __len__(self) -> int:
        return len(self._data)

    def clear(self) -> None:
        self._data.clear()
        self.nbytes = 0


class FeatureExtractor:
    """Evaluates trees on a fixed list of images, possibly of mixed sizes.

    Images are grouped by shape and each group is processed as one stack.
    Results of every subtree are cached by their text, so subtrees shared
    between individuals are computed once.
    """

    def __init__(self, images: Sequence[np.ndarray], pset: PrimitiveSet | None = None, cache_bytes: int = 128 * 2**20):
        self.pset = pset or default_pset()
        self.n = len(images)
        groups: dict[tuple[int, int], list[int]] = {}
        for i, img in enumerate(images):
            groups.setdefault(np.shape(img), []).append(i)
        self._groups = [
            (np.array(idx), np.stack([np.asarray(images[i], dtype=np.float64) for i in idx]), LRUCache(cache_bytes // len(groups)))
            for idx in groups.values()
        ]

    def transform(self, tree: Tree | None) -> np.ndarray:
        """(n_images, dim) feature matrix; a ``None`` tree gives zero columns."""
        if tree is None:
            return np.zeros((self.n, 0))
        if len(self._groups) == 1:
            idx, stack, cache = self._groups[0]
            return np.asarray(evaluate(tree, stack, self.pset, cache))
        parts = [(idx, evaluate(tree, stack, self.pset, cache)) for idx, stack, cache in self._groups]
        dims = {p.shape[1] for _, p in parts}
        if len(dims) != 1:
            raise EvaluationError(f"{tree}: feature dimension depends on image size")
        out = np.empty((self.n, dims.pop()))
        for idx, p in parts:
            out[idx] = p
        return out

    def clear(self) -> None:
        for _, _, cache in self._groups:
            cache.clear()
