"""Strongly typed primitive set for image-to-feature GP trees."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .. import imageops as ops

IMG = "Img"
FVEC = "FVec"
SIGMA = "Sigma"
ORD = "Ord"
THETA = "Theta"
FREQ = "FreqIdx"
WEIGHT = "Weight"
POOLK = "PoolK"

ROOT_TYPE = FVEC


@dataclass(frozen=True)
class Primitive:
    name: str
    args: tuple[str, ...]
    ret: str
    func: Callable[..., Any] = field(compare=False, repr=False)
    layer: str = "filter"
    root_only: bool = False

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True)
class Terminal:
    """A leaf kind. ``sample`` is None for fixed terminals such as ``Image``."""

    name: str
    ret: str
    sample: Callable[[np.random.Generator], Any] | None = field(default=None, compare=False, repr=False)
    fmt: Callable[[Any], str] = field(default=str, compare=False, repr=False)
    parse: Callable[[str], Any] | None = field(default=None, compare=False, repr=False)

    @property
    def ephemeral(self) -> bool:
        return self.sample is not None


def format_real(x: float) -> str:
    return format(float(x), ".6g")


def _round6(x: float) -> float:
    return float(format_real(x))


def _sample_sigma(rng: np.random.Generator) -> float:
    return min(max(_round6(rng.uniform(1.0, 3.0)), 1.0), 3.0)


def _sample_weight(rng: np.random.Generator) -> float:
    # rounding to 6 significant digits must not reach the open upper bound
    return min(_round6(rng.uniform(0.0, 1.0)), 0.999999)


def _parse_positive_real(text: str) -> float:
    x = float(text)
    if not (math.isfinite(x) and x > 0):
        raise ValueError(f"expected a positive real, got {text}")
    return x


def _parse_weight(text: str) -> float:
    x = float(text)
    if not 0.0 <= x < 1.0:
        raise ValueError(f"weight must lie in [0, 1), got {text}")
    return x


def _int_parser(allowed: tuple[int, ...]):
    def parse(text: str) -> int:
        if not text.lstrip("-").isdigit():
            raise ValueError(f"expected an integer, got {text}")
        v = int(text)
        if v not in allowed:
            raise ValueError(f"value {v} not in {allowed}")
        return v

    return parse


def _int_sampler(allowed: tuple[int, ...]):
    def sample(rng: np.random.Generator) -> int:
        return allowed[int(rng.integers(len(allowed)))]

    return sample


class PrimitiveSet:
    """Registry of typed primitives and terminal kinds."""

    def __init__(self, root_type: str = ROOT_TYPE):
        self.root_type = root_type
        self.primitives: dict[str, Primitive] = {}
        self.terminals: dict[str, Terminal] = {}
        self._by_type: dict[str, list[Primitive]] = {}
        self._terms_by_type: dict[str, list[Terminal]] = {}
        self._min_height: dict[str, float] | None = None

    def add_primitive(self, prim: Primitive) -> None:
        if prim.name in self.primitives or prim.name in self.terminals:
            raise ValueError(f"duplicate name {prim.name!r}")
        self.primitives[prim.name] = prim
        self._by_type.setdefault(prim.ret, []).append(prim)
        self._min_height = None

    def add_terminal(self, term: Terminal) -> None:
        if term.name in self.primitives or term.name in self.terminals:
            raise ValueError(f"duplicate name {term.name!r}")
        self.terminals[term.name] = term
        self._terms_by_type.setdefault(term.ret, []).append(term)
        self._min_height = None

    def producers(self, typ: str, root: bool = False) -> list[Primitive]:
        return [p for p in self._by_type.get(typ, []) if p.root_only == root]

    def terminals_of(self, typ: str) -> list[Terminal]:
        return self._terms_by_type.get(typ, [])

    @property
    def types(self) -> set[str]:
        out = {self.root_type}
        for p in self.primitives.values():
            out.add(p.ret)
            out.update(p.args)
        out.update(t.ret for t in self.terminals.values())
        return out

    @property
    def terminal_ratio(self) -> float:
        n_t = len(self.terminals)
        return n_t / (n_t + len(self.primitives))

    def min_height(self, typ: str) -> float:
        """Smallest depth of a complete non-root subtree of type ``typ``."""
        if self._min_height is None:
            self._min_height = self._compute_min_heights()
        return self._min_height.get(typ, math.inf)

    def prim_height(self, prim: Primitive) -> float:
        return 1 + max((self.min_height(a) for a in prim.args), default=0)

    def _compute_min_heights(self) -> dict[str, float]:
        h = {t: math.inf for t in self.types}
        for t in self._terms_by_type:
            h[t] = 0
        changed = True
        while changed:
            changed = False
            for p in self.primitives.values():
                if p.root_only:
                    continue
                cand = 1 + max((h[a] for a in p.args), default=0)
                if cand < h[p.ret]:
                    h[p.ret] = cand
                    changed = True
        return h

    def check_closure(self) -> None:
        """Raise if some argument type can never be completed into a subtree."""
        for p in self.primitives.values():
            for a in p.args:
                if math.isinf(self.min_height(a)):
                    raise ValueError(f"type {a!r} (argument of {p.name}) has no terminal or producer")
        if not self.producers(self.root_type, root=True):
            raise ValueError("no root primitive registered")


def _concat(*vecs: np.ndarray) -> np.ndarray:
    return np.concatenate(vecs, axis=-1)


_FILTERS: list[tuple[str, tuple[str, ...], Callable]] = [
    ("Gau", (IMG, SIGMA), ops.gaussian_filter),
    ("GauD", (IMG, SIGMA, ORD, ORD), ops.gaussian_derivative),
    ("Gabor", (IMG, THETA, FREQ), lambda img, t, v: ops.gabor(img, ops.THETA_GRID[t], v)),
    ("Lap", (IMG,), ops.laplacian),
    ("LoG1", (IMG,), lambda img: ops.log_filter(img, 1.0)),
    ("LoG2", (IMG,), lambda img: ops.log_filter(img, 2.0)),
    ("Sobel", (IMG,), lambda img: ops.sobel(img, "magnitude")),
    ("SobelX", (IMG,), lambda img: ops.sobel(img, "x")),
    ("SobelY", (IMG,), lambda img: ops.sobel(img, "y")),
    ("Med", (IMG,), lambda img: ops.rank_mean_filter(img, "median")),
    ("Mean", (IMG,), lambda img: ops.rank_mean_filter(img, "mean")),
    ("Min", (IMG,), lambda img: ops.rank_mean_filter(img, "min")),
    ("Max", (IMG,), lambda img: ops.rank_mean_filter(img, "max")),
    ("LBP-F", (IMG,), ops.lbp_code_map),
    ("HOG-F", (IMG,), ops.grad_magnitude_map),
    ("W-Add", (IMG, WEIGHT, IMG, WEIGHT), lambda a, n1, b, n2: ops.weighted_combine(a, n1, b, n2, "add")),
    ("W-Sub", (IMG, WEIGHT, IMG, WEIGHT), lambda a, n1, b, n2: ops.weighted_combine(a, n1, b, n2, "sub")),
    ("ReLU", (IMG,), lambda img: ops.elementwise(img, "relu")),
    ("Sqrt", (IMG,), lambda img: ops.elementwise(img, "sqrt")),
]


def build_primitive_set() -> PrimitiveSet:
    pset = PrimitiveSet()
    for name, args, func in _FILTERS:
        pset.add_primitive(Primitive(name, args, IMG, func, layer="filter"))
    pset.add_primitive(Primitive("MaxP", (IMG, POOLK, POOLK), IMG, ops.max_pool, layer="pooling"))
    pset.add_primitive(Primitive("SIFT", (IMG,), FVEC, ops.sift_vec, layer="extraction"))
    pset.add_primitive(Primitive("HOG", (IMG,), FVEC, ops.hog_vec, layer="extraction"))
    pset.add_primitive(Primitive("LBP", (IMG,), FVEC, ops.lbp_hist, layer="extraction"))
    pset.add_primitive(Primitive("FeaCon2", (FVEC,) * 2, FVEC, _concat, layer="concatenation"))
    pset.add_primitive(Primitive("FeaCon3", (FVEC,) * 3, FVEC, _concat, layer="concatenation"))
    for n in (2, 3, 4):
        pset.add_primitive(Primitive(f"Root{n}", (FVEC,) * n, FVEC, _concat, layer="concatenation", root_only=True))

    pset.add_terminal(Terminal("Image", IMG))
    pset.add_terminal(Terminal(SIGMA, SIGMA, _sample_sigma, format_real, _parse_positive_real))
    pset.add_terminal(Terminal(ORD, ORD, _int_sampler((0, 1, 2)), str, _int_parser((0, 1, 2))))
    pset.add_terminal(Terminal(THETA, THETA, _int_sampler(tuple(range(8))), str, _int_parser(tuple(range(8)))))
    pset.add_terminal(Terminal(FREQ, FREQ, _int_sampler(tuple(range(5))), str, _int_parser(tuple(range(5)))))
    pset.add_terminal(Terminal(WEIGHT, WEIGHT, _sample_weight, format_real, _parse_weight))
    pset.add_terminal(Terminal(POOLK, POOLK, _int_sampler((2, 4)), str, _int_parser((2, 4))))
    pset.check_closure()
    return pset
