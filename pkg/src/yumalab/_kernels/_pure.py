"""NumPy implementations of the numeric kernels.

This is the fallback backend used when the compiled extension is missing
or disabled. Inputs are validated by the public wrappers in `metrics` and
`consensus`; the kernels assume well-formed float64 arrays.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "pure"


def gini(values: np.ndarray) -> float:
    """Discrete Gini via the sorted-rank identity, O(n log n)."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = x.shape[0]
    total = float(np.sum(x))
    ranks = np.arange(1.0, n + 1.0)
    return (2.0 * float(np.dot(ranks, x)) - (n + 1.0) * total) / (n * total)


def hhi(values: np.ndarray) -> float:
    x = np.asarray(values, dtype=np.float64)
    shares = x / float(np.sum(x))
    return float(np.dot(shares, shares))


def topk_sum(values: np.ndarray, k: int) -> float:
    """Sum of the k largest entries."""
    x = np.asarray(values, dtype=np.float64)
    n = x.shape[0]
    if k >= n:
        return float(np.sum(x))
    part = np.partition(x, n - k)
    return float(np.sum(part[n - k:]))


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Sample Pearson coefficient; NaN when either variance is zero."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    dx = xa - float(np.mean(xa))
    dy = ya - float(np.mean(ya))
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        return math.nan
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def coalition_count(stakes: np.ndarray, threshold: float) -> int:
    """Smallest number of largest stakes whose sum reaches threshold * total."""
    s = np.sort(np.asarray(stakes, dtype=np.float64))[::-1]
    cumulative = np.cumsum(s)
    target = threshold * float(cumulative[-1])
    m = int(np.searchsorted(cumulative, target, side="left")) + 1
    return min(m, s.shape[0])


def clip_benchmarks(weights: np.ndarray, stakes: np.ndarray, kappa: float) -> np.ndarray:
    """Per-miner consensus benchmark: the largest observed weight backed by
    at least a kappa fraction of total validator stake.

    Candidates are scanned from the largest weight down, so the first one
    with enough backing is the arg-max; candidates tied on backing (only
    possible via zero-stake validators) resolve to the larger weight.
    """
    w = np.asarray(weights, dtype=np.float64)
    s = np.asarray(stakes, dtype=np.float64)
    target = kappa * float(np.sum(s))
    n_miners = w.shape[1]
    out = np.empty(n_miners, dtype=np.float64)
    for j in range(n_miners):
        column = w[:, j]
        order = np.argsort(-column, kind="stable")
        sorted_w = column[order]
        backing = np.cumsum(s[order])
        # Last index of each run of equal weights: the full stake backing
        # that candidate value.
        ends = np.nonzero(np.diff(sorted_w))[0]
        ends = np.append(ends, sorted_w.shape[0] - 1)
        pick = int(np.searchsorted(backing[ends], target, side="left"))
        if pick >= ends.shape[0]:
            pick = ends.shape[0] - 1
        out[j] = sorted_w[ends[pick]]
    return out
