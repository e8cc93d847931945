"""Wilcoxon rank-sum test and the +/−/= verdicts used to compare methods."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

ALPHA = 0.05
EXACT_MAX = 8


class RankSumResult(NamedTuple):
    statistic: float
    pvalue: float
    rank_sum: float
    exact: bool


def midranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    start = 0
    for end in range(1, len(values) + 1):
        if end == len(values) or sorted_vals[end] != sorted_vals[start]:
            ranks[order[start:end]] = (start + end + 1) / 2
            start = end
    return ranks


def _tie_term(pooled: np.ndarray) -> float:
    _, counts = np.unique(pooled, return_counts=True)
    return float(np.sum(counts.astype(np.float64) ** 3 - counts))


def _exact_pvalue(ranks: np.ndarray, n: int, observed: float) -> float:
    """Permutation p-value of the rank sum of ``n`` items drawn from ``ranks``.

    Counts subsets by their doubled rank sum (midranks are half-integers),
    then sums the probability of every sum at least as far from the mean
    as the observed one.
    """
    doubled = np.rint(2 * ranks).astype(np.int64)
    total = int(doubled.sum())
    # dp[k, s]: number of k-subsets with doubled rank sum s
    dp = np.zeros((n + 1, total + 1))
    dp[0, 0] = 1.0
    for r in doubled:
        dp[1:, r:] += dp[:-1, : total + 1 - r].copy()
    counts = dp[n]
    probs = counts / counts.sum()
    mean2 = n * total / len(ranks)
    dev = np.abs(np.arange(total + 1) - mean2)
    obs_dev = abs(2 * observed - mean2)
    return float(min(1.0, probs[dev >= obs_dev - 1e-9].sum()))


def wilcoxon_ranksum(a, b) -> RankSumResult:
    """Two-sided Wilcoxon rank-sum test of sample ``a`` against ``b``.

    ``statistic`` is the standardised rank sum of ``a`` (tie-corrected
    variance, no continuity correction), so it is positive when ``a`` tends
    to be larger and swapping the samples negates it. The p-value is exact
    (permutation distribution of the midrank sum) when the smaller sample
    has at most ``EXACT_MAX`` values, otherwise it is the normal
    approximation with tie-corrected variance and a continuity correction.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    n, m = len(a), len(b)
    if n < 2 or m < 2:
        raise ValueError(f"both samples need at least 2 values, got {n} and {m}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("samples must be finite")
    pooled = np.concatenate([a, b])
    ranks = midranks(pooled)
    N = n + m
    rank_sum = float(ranks[:n].sum())
    mean = n * (N + 1) / 2
    var = n * m / 12 * ((N + 1) - _tie_term(pooled) / (N * (N - 1)))
    if var <= 0:
        return RankSumResult(0.0, 1.0, rank_sum, min(n, m) <= EXACT_MAX)
    sd = math.sqrt(var)
    z = (rank_sum - mean) / sd
    if min(n, m) <= EXACT_MAX:
        return RankSumResult(z, _exact_pvalue(ranks, n, rank_sum), rank_sum, True)
    zc = max(abs(rank_sum - mean) - 0.5, 0.0) / sd
    return RankSumResult(z, min(1.0, math.erfc(zc / math.sqrt(2))), rank_sum, False)


def verdict(a, b, alpha: float = ALPHA) -> str:
    """'+' if ``a`` is significantly larger than ``b``, '−' if smaller, else '='."""
    res = wilcoxon_ranksum(a, b)
    if res.pvalue >= alpha or res.statistic == 0:
        return "="
    return "+" if res.statistic > 0 else "−"
