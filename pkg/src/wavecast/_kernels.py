"""Compiled inner loops for the oblivious-tree split search.

Both kernels score every (feature, threshold) candidate for one tree level.
Examples arrive pre-ordered (ordered mode: permutation order; plain mode:
chronological), ``bins[i, f]`` is the bin index of example i on feature f, and
a candidate c sends an example right iff its bin index exceeds c. The score of
a candidate is the sum of squared differences between each example's residual
and its leaf estimate; candidates with lower scores are better.
"""

import numpy as np
from numba import njit

__all__ = ["ordered_level_scores", "plain_level_scores"]


@njit(cache=True)
def ordered_level_scores(bins, leaf, g, cand_counts, n_leaves):
    """Leaf estimate for example i = running mean of residuals of examples seen
    before i that fall in the same candidate leaf (0 when none seen yet)."""
    n, p = bins.shape
    max_c = 0
    for f in range(p):
        if cand_counts[f] > max_c:
            max_c = cand_counts[f]
    scores = np.full((p, max_c), np.inf)
    sums = np.zeros(2 * n_leaves)
    cnts = np.zeros(2 * n_leaves, dtype=np.int64)
    for f in range(p):
        for c in range(cand_counts[f]):
            for k in range(2 * n_leaves):
                sums[k] = 0.0
                cnts[k] = 0
            total = 0.0
            for i in range(n):
                key = leaf[i] * 2 + (1 if bins[i, f] > c else 0)
                if cnts[key] > 0:
                    delta = sums[key] / cnts[key]
                else:
                    delta = 0.0
                diff = g[i] - delta
                total += diff * diff
                sums[key] += g[i]
                cnts[key] += 1
            scores[f, c] = total
    return scores


@njit(cache=True)
def plain_level_scores(bins, leaf, g, cand_counts, n_leaves):
    """Leaf estimate for example i = mean residual over all examples in its
    candidate leaf (classic variance-reduction split scoring)."""
    n, p = bins.shape
    max_c = 0
    for f in range(p):
        if cand_counts[f] > max_c:
            max_c = cand_counts[f]
    scores = np.full((p, max_c), np.inf)
    sums = np.zeros(2 * n_leaves)
    cnts = np.zeros(2 * n_leaves, dtype=np.int64)
    g_sq = 0.0
    for i in range(n):
        g_sq += g[i] * g[i]
    for f in range(p):
        for c in range(cand_counts[f]):
            for k in range(2 * n_leaves):
                sums[k] = 0.0
                cnts[k] = 0
            for i in range(n):
                key = leaf[i] * 2 + (1 if bins[i, f] > c else 0)
                sums[key] += g[i]
                cnts[key] += 1
            total = g_sq
            for k in range(2 * n_leaves):
                if cnts[k] > 0:
                    total -= sums[k] * sums[k] / cnts[k]
            scores[f, c] = total
    return scores
