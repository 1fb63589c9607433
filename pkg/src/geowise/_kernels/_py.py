"""NumPy implementations of the distance kernels.

Blocked brute-force scans keep peak memory at O(block * n) instead of
O(n^2). Distances are compared as squared Euclidean distances so the
compiled backend and this one resolve k-NN ties identically.
"""

import numpy as np

_BLOCK = 256


def _as_matrix(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-D coordinate array")
    return x


def knn_indices(coords, k):
    """Indices of the k nearest rows for every row, self excluded.

    Ties are broken by lower index (stable sort on squared distance).
    """
    coords = _as_matrix(coords)
    n = coords.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    out = np.empty((n, k), dtype=np.intp)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        block = coords[start:stop]
        d2 = ((block[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
        local = np.arange(stop - start)
        d2[local, local + start] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        out[start:stop] = order[:, :k]
    return out


def pairwise_mean_distance(X):
    """Mean Euclidean distance over all unordered row pairs."""
    X = _as_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows for a pairwise mean")
    total = 0.0
    for i in range(n - 1):
        d2 = ((X[i + 1 :] - X[i]) ** 2).sum(axis=1)
        total += float(np.sqrt(d2).sum())
    return total / (n * (n - 1) / 2.0)


def nearest_other_distance(X):
    """Per-row Euclidean distance to the nearest other row."""
    X = _as_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows")
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        d2 = ((X[start:stop, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        local = np.arange(stop - start)
        d2[local, local + start] = np.inf
        out[start:stop] = np.sqrt(d2.min(axis=1))
    return out


def nearest_cross_distance(queries, X):
    """Per-query Euclidean distance to the nearest row of X."""
    Q = _as_matrix(queries)
    X = _as_matrix(X)
    if X.shape[0] == 0:
        raise ValueError("reference matrix is empty")
    if Q.shape[1] != X.shape[1]:
        raise ValueError("query and reference dimensionality differ")
    out = np.empty(Q.shape[0], dtype=np.float64)
    for start in range(0, Q.shape[0], _BLOCK):
        stop = min(start + _BLOCK, Q.shape[0])
        d2 = ((Q[start:stop, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        out[start:stop] = np.sqrt(d2.min(axis=1))
    return out
