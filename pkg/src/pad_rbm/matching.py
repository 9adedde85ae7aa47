"""Maximum-weight bipartite matching on |W| via the Hungarian method."""
from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError
from .model import ModelParams
from .perturbation import Matching


def influence_weights(p: ModelParams) -> np.ndarray:
    return np.abs(p.W)


def _hungarian_min(cost: np.ndarray) -> np.ndarray:
    """Square min-cost assignment; returns col index assigned to each row.

    Shortest augmenting path with row/column potentials, O(k^3).
    """
    k = cost.shape[0]
    inf = np.inf
    u = np.zeros(k + 1)
    v = np.zeros(k + 1)
    # p[j]: row (1-based) matched to column j; column 0 is the virtual root
    p = np.zeros(k + 1, dtype=np.int64)
    way = np.zeros(k + 1, dtype=np.int64)
    for i in range(1, k + 1):
        p[0] = i
        j0 = 0
        minv = np.full(k + 1, inf)
        used = np.zeros(k + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            used_idx = np.nonzero(used)[0]
            u[p[used_idx]] += delta
            v[used_idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    assign = np.empty(k, dtype=np.int64)
    for j in range(1, k + 1):
        assign[p[j] - 1] = j - 1
    return assign


def max_weight_matching(weights) -> Matching:
    """Matching of size min(n, m) maximizing the total weight.

    Rectangular inputs are zero-padded to square. Zero-weight pairs are kept so
    the result always has full cardinality.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.size == 0:
        raise InvalidArgumentError(f"weights must be a nonempty 2-D matrix, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidArgumentError("weights must be finite and nonnegative")
    n, m = w.shape
    k = max(n, m)
    padded = np.zeros((k, k))
    padded[:n, :m] = w
    # max weight == min cost after negation and a constant shift
    cost = padded.max() - padded
    assign = _hungarian_min(cost)
    return Matching(tuple((i, int(assign[i])) for i in range(n) if assign[i] < m))


def matching_weight(weights, mt: Matching) -> float:
    w = np.asarray(weights, dtype=np.float64)
    return float(sum(w[i, j] for i, j in mt.pairs))
