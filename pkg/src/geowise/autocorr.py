"""Spatial autocorrelation statistics on model residuals.

All statistics work on the residual x_i = truth_i - estimate_i and a
spatial weights matrix. Table forms accept a Dataset and build the
weights automatically when none are given (nearest neighbor on point
geometry, row-standardized); vector forms require an explicit matrix.

Missing residuals propagate: a NaN in truth or estimate makes the
affected statistics NaN rather than silently dropping rows, because the
rows must stay aligned with the weights matrix. Constant residuals are
a hard error for the global statistics (zero denominator).

Local statistics return one value per observation in input order;
global statistics return a single value.
"""

from __future__ import annotations

import warnings

import numpy as np

from geowise.data import Dataset, MetricResult
from geowise.errors import UndefinedMetricError
from geowise.weights import WeightsMatrix, build_neighbors_points, build_weights


def _residuals(truth, estimate, wm: WeightsMatrix) -> np.ndarray:
    t = np.asarray(truth, dtype=np.float64)
    e = np.asarray(estimate, dtype=np.float64)
    if t.ndim != 1 or t.shape != e.shape:
        raise ValueError("truth and estimate must be 1-D vectors of equal length")
    if not isinstance(wm, WeightsMatrix):
        raise TypeError("wt must be a WeightsMatrix")
    if t.shape[0] != wm.n:
        raise ValueError(
            f"residual length {t.shape[0]} does not match weights matrix size {wm.n}"
        )
    return t - e


def _check_spread(x: np.ndarray):
    # NaN passes through; only an exactly constant vector is an error
    xd = x - x.mean()
    ss = (xd**2).sum()
    if ss == 0.0:
        raise UndefinedMetricError("residuals are constant; autocorrelation is undefined")
    return xd, ss


def global_moran_i_vec(truth, estimate, wt: WeightsMatrix) -> float:
    """Moran's I on residuals.

    I = (n / W) * sum_ij w_ij (x_i - xbar)(x_j - xbar) / sum_i (x_i - xbar)^2

    The expected value under no autocorrelation is -1 / (n - 1); values
    above it indicate positive autocorrelation.
    """
    x = _residuals(truth, estimate, wt)
    n = x.size
    if n < 3:
        raise UndefinedMetricError("global_moran_i needs at least 3 observations")
    xd, ss = _check_spread(x)
    num = float((xd * wt.lag(xd)).sum())
    return n / wt.total * num / float(ss)


def local_moran_i_vec(truth, estimate, wt: WeightsMatrix) -> np.ndarray:
    """Local Moran's I: I_i = (x_i - xbar) * lag_i(x - xbar) / m2 with
    m2 = sum((x - xbar)^2) / n. One value per observation, input order."""
    x = _residuals(truth, estimate, wt)
    n = x.size
    if n < 3:
        raise UndefinedMetricError("local_moran_i needs at least 3 observations")
    xd, ss = _check_spread(x)
    m2 = ss / n
    return xd * wt.lag(xd) / m2


def global_geary_c_vec(truth, estimate, wt: WeightsMatrix) -> float:
    """Geary's c on residuals.

    c = (n - 1) / (2 W) * sum_ij w_ij (x_i - x_j)^2 / sum_i (x_i - xbar)^2

    c >= 0, expected value 1 under no autocorrelation; low values mean
    positive autocorrelation.
    """
    x = _residuals(truth, estimate, wt)
    n = x.size
    if n < 3:
        raise UndefinedMetricError("global_geary_c needs at least 3 observations")
    _, ss = _check_spread(x)
    diffs = (x[wt.row_ids()] - x[wt.indices]) ** 2
    num = float((wt.weights * diffs).sum())
    return (n - 1) / (2.0 * wt.total) * num / float(ss)


def local_geary_c_vec(truth, estimate, wt: WeightsMatrix) -> np.ndarray:
    """Local Geary: c_i = sum_j w_ij (x_i - x_j)^2, input order."""
    x = _residuals(truth, estimate, wt)
    contributions = wt.weights * (x[wt.row_ids()] - x[wt.indices]) ** 2
    return np.bincount(wt.row_ids(), weights=contributions, minlength=wt.n)


def local_getis_ord_g_vec(truth, estimate, wt: WeightsMatrix, star: bool = False) -> np.ndarray:
    """Getis-Ord hot-spot statistic as a standard deviate, per row.

    The plain form excludes the focal observation from every sum; the
    star form includes it by appending a unit self-weight to each
    (already standardized) row and switching the moment denominators
    from n - 1 to n. Rows whose variance term degenerates (locally
    constant data or an all-inclusive row) come back NaN with a warning
    instead of failing the whole vector.
    """
    x = _residuals(truth, estimate, wt)
    n = x.size
    if n < 3:
        raise UndefinedMetricError("local_getis_ord_g needs at least 3 observations")
    sw = wt.row_sums()
    sw2 = np.bincount(wt.row_ids(), weights=wt.weights**2, minlength=wt.n)
    swx = wt.lag(x)
    total = x.sum()
    total_sq = (x**2).sum()

    if star:
        sw = sw + 1.0
        sw2 = sw2 + 1.0
        swx = swx + x
        xbar = np.full(n, total / n)
        s_sq = np.full(n, total_sq / n - (total / n) ** 2)
    else:
        xbar = (total - x) / (n - 1)
        s_sq = (total_sq - x**2) / (n - 1) - xbar**2

    bracket = ((n - 1) * sw2 - sw**2) / (n - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        denom = np.sqrt(np.where(s_sq > 0, s_sq, np.nan)) * np.sqrt(
            np.where(bracket > 0, bracket, np.nan)
        )
        z = (swx - sw * xbar) / denom
    if not np.isnan(x).any():
        bad = np.isnan(z)
        if bad.any():
            warnings.warn(
                "zero variance: Getis-Ord statistic undefined for rows "
                f"{np.flatnonzero(bad).tolist()}",
                RuntimeWarning,
                stacklevel=2,
            )
    return z


# ---------------------------------------------------------------------------
# Table forms
# ---------------------------------------------------------------------------


def build_default_weights(data: Dataset) -> WeightsMatrix:
    """The automatic weights used by table forms: nearest neighbor
    (k = 1) on point geometry, row-standardized."""
    return build_weights(build_neighbors_points(data.coords(), k=1))


def _resolve_weights(data: Dataset, wt):
    if wt is None:
        return build_default_weights(data)
    if isinstance(wt, WeightsMatrix):
        return wt
    if callable(wt):
        result = wt(data)
        if not isinstance(result, WeightsMatrix):
            raise TypeError("wt callable must return a WeightsMatrix")
        return result
    raise TypeError("wt must be a WeightsMatrix, a callable, or None")


def _global_table(name, vec_fn):
    def statistic(data: Dataset, truth_col="truth", estimate_col="estimate", wt=None):
        t = data.column(truth_col)
        e = data.column(estimate_col)
        if data.group is None:
            wm = _resolve_weights(data, wt)
            return [MetricResult(name, "standard", float(vec_fn(t, e, wm)))]
        if isinstance(wt, WeightsMatrix):
            raise ValueError(
                "grouped data cannot use a precomputed weights matrix; "
                "pass a callable or let weights build automatically per group"
            )
        rows = []
        for label, mask in data.group_masks().items():
            sub = data.subset(mask)
            wm = _resolve_weights(sub, wt)
            rows.append(
                MetricResult(name, "standard", float(vec_fn(t[mask], e[mask], wm)), group=label)
            )
        return rows

    statistic.__name__ = name
    statistic.metric_name = name
    statistic.vec = vec_fn
    return statistic


def _local_table(name, vec_fn, **vec_kwargs):
    def statistic(data: Dataset, truth_col="truth", estimate_col="estimate", wt=None):
        t = data.column(truth_col)
        e = data.column(estimate_col)
        if data.group is None:
            wm = _resolve_weights(data, wt)
            values = vec_fn(t, e, wm, **vec_kwargs)
            return [MetricResult(name, "standard", float(v)) for v in values]
        if isinstance(wt, WeightsMatrix):
            raise ValueError(
                "grouped data cannot use a precomputed weights matrix; "
                "pass a callable or let weights build automatically per group"
            )
        estimates = np.empty(data.n_rows)
        labels = [None] * data.n_rows
        for label, mask in data.group_masks().items():
            sub = data.subset(mask)
            wm = _resolve_weights(sub, wt)
            values = vec_fn(t[mask], e[mask], wm, **vec_kwargs)
            for pos, v in zip(np.flatnonzero(mask), values):
                estimates[pos] = v
                labels[pos] = label
        return [
            MetricResult(name, "standard", float(estimates[i]), group=labels[i])
            for i in range(data.n_rows)
        ]

    statistic.__name__ = name
    statistic.metric_name = name
    statistic.vec = vec_fn
    return statistic


global_moran_i = _global_table("global_moran_i", global_moran_i_vec)
global_geary_c = _global_table("global_geary_c", global_geary_c_vec)
local_moran_i = _local_table("local_moran_i", local_moran_i_vec)
local_geary_c = _local_table("local_geary_c", local_geary_c_vec)
local_getis_ord_g = _local_table("local_getis_ord_g", local_getis_ord_g_vec, star=False)
local_getis_ord_gstar = _local_table("local_getis_ord_gstar", local_getis_ord_g_vec, star=True)

#: Table-form statistics by name, for the command-line surface.
STATISTICS = {
    "global_moran_i": global_moran_i,
    "global_geary_c": global_geary_c,
    "local_moran_i": local_moran_i,
    "local_geary_c": local_geary_c,
    "local_getis_ord_g": local_getis_ord_g,
    "local_getis_ord_gstar": local_getis_ord_gstar,
}

LOCAL_STATISTICS = frozenset(
    ("local_moran_i", "local_geary_c", "local_getis_ord_g", "local_getis_ord_gstar")
)
