"""Agreement and error metrics for paired truth/estimate series.

Every metric exists in two forms: a ``*_vec`` function on plain numeric
vectors returning a float, and a table form on a Dataset returning
MetricResult rows (one row, or one per group when the dataset carries
group labels). Table forms call their ``_vec`` variant, so both paths
produce identical numbers.

Pairs with NaN in either value are removed before any computation; the
effective number of pairs appears in error messages when too few
remain.

Notation used in docstrings: y is truth, yhat the estimate, ybar and
yhatbar their means, n the number of complete pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from geowise.data import Dataset, MetricResult
from geowise.errors import DegenerateFitError, EmptyInputError, UndefinedMetricError


def _complete_pairs(truth, estimate, min_pairs):
    t = np.asarray(truth, dtype=np.float64)
    e = np.asarray(estimate, dtype=np.float64)
    if t.ndim != 1 or e.ndim != 1 or t.shape != e.shape:
        raise ValueError("truth and estimate must be 1-D vectors of equal length")
    keep = ~(np.isnan(t) | np.isnan(e))
    t, e = t[keep], e[keep]
    if t.size < min_pairs:
        raise EmptyInputError(
            f"need at least {min_pairs} non-missing pairs (effective n = {t.size})"
        )
    return t, e


def _is_constant(v: np.ndarray) -> bool:
    return bool(np.all(v == v[0]))


def _exact_mean(v: np.ndarray) -> float:
    # the mean of a constant series is its value; bypassing the
    # accumulating sum keeps degenerate-case detection exact
    return float(v[0]) if _is_constant(v) else float(v.mean())


# ---------------------------------------------------------------------------
# Dimensionless agreement indices
# ---------------------------------------------------------------------------


def willmott_d_vec(truth, estimate) -> float:
    """Index of agreement d, bounded [0, 1].

    d = 1 - sum((yhat - y)^2) / sum((|yhat - ybar| + |y - ybar|)^2)

    Constant truth makes the ratio degenerate: perfect agreement
    resolves the 0/0 to 1, any disagreement is an error.
    """
    t, e = _complete_pairs(truth, estimate, 2)
    if _is_constant(t):
        if np.array_equal(e, t):
            return 1.0
        raise UndefinedMetricError("willmott_d is undefined for constant truth with disagreement")
    tbar = t.mean()
    num = ((e - t) ** 2).sum()
    den = ((np.abs(e - tbar) + np.abs(t - tbar)) ** 2).sum()
    if den == 0.0:
        raise UndefinedMetricError("willmott_d denominator underflowed to zero")
    return float(1.0 - num / den)


def willmott_d1_vec(truth, estimate) -> float:
    """Refined index of agreement d1: absolute differences, unsquared
    denominator. Bounded [0, 1], approaches 1 more slowly than d."""
    t, e = _complete_pairs(truth, estimate, 2)
    if _is_constant(t):
        if np.array_equal(e, t):
            return 1.0
        raise UndefinedMetricError("willmott_d1 is undefined for constant truth with disagreement")
    tbar = t.mean()
    num = np.abs(e - t).sum()
    den = (np.abs(e - tbar) + np.abs(t - tbar)).sum()
    if den == 0.0:
        raise UndefinedMetricError("willmott_d1 denominator underflowed to zero")
    return float(1.0 - num / den)


def willmott_dr_vec(truth, estimate) -> float:
    """Refined index dr, bounded [-1, 1], scaling constant c = 2.

    dr = 1 - A/(c*B) when A <= c*B, else c*B/A - 1, with
    A = sum(|yhat - y|) and B = sum(|y - ybar|).
    """
    t, e = _complete_pairs(truth, estimate, 2)
    tbar = t.mean()
    abs_err = np.abs(e - t).sum()
    spread = np.abs(t - tbar).sum()
    if spread == 0.0:
        raise UndefinedMetricError("willmott_dr is undefined for constant truth")
    c = 2.0
    if abs_err <= c * spread:
        return float(1.0 - abs_err / (c * spread))
    return float(c * spread / abs_err - 1.0)


def agreement_coefficient_vec(truth, estimate) -> float:
    """Symmetric agreement coefficient AC, bounded (-inf, 1].

    AC = 1 - sum((yhat - y)^2) / sum((|m| + |yhat_i - yhatbar|) * (|m| + |y_i - ybar|))
    with m = yhatbar - ybar. Swapping the arguments gives the identical
    value bit for bit.

    Degenerate denominators: identical constant series give 1; a series
    constant at the other's mean (the mean-prediction null model) gives
    0 by convention; other zero-denominator patterns are errors.
    """
    t, e = _complete_pairs(truth, estimate, 2)
    num = ((e - t) ** 2).sum()
    mt = _exact_mean(t)
    me = _exact_mean(e)
    mdiff = abs(me - mt)
    den = ((mdiff + np.abs(e - me)) * (mdiff + np.abs(t - mt))).sum()
    if den != 0.0:
        return float(1.0 - num / den)
    if np.array_equal(t, e):
        return 1.0
    if me == mt and (_is_constant(e) or _is_constant(t)):
        return 0.0
    raise UndefinedMetricError(
        "agreement_coefficient denominator is zero for these inputs"
    )


# ---------------------------------------------------------------------------
# Regression fits backing the decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GmfrFit:
    """Geometric mean functional relationship line.

    ``a + b * y`` predicts the estimate from truth; the reversed pair
    ``reversed_a + reversed_b * yhat`` predicts truth from the estimate,
    and the two lines are exact inverses. ``zero_correlation`` flags the
    arbitrary positive slope chosen when the correlation is exactly 0.
    """

    a: float
    b: float
    reversed_a: float
    reversed_b: float
    zero_correlation: bool = False

    def predict_estimate(self, truth):
        return self.a + self.b * np.asarray(truth, dtype=np.float64)

    def predict_truth(self, estimate):
        return self.reversed_a + self.reversed_b * np.asarray(estimate, dtype=np.float64)


def gmfr_fit(truth, estimate) -> GmfrFit:
    """Fit the GMFR line: |b| = sqrt(var(yhat)/var(y)), sign of b from
    the correlation of the two series, a = yhatbar - b * ybar."""
    t, e = _complete_pairs(truth, estimate, 2)
    if _is_constant(t) or _is_constant(e):
        raise DegenerateFitError("gmfr fit needs variance in both series")
    td = t - t.mean()
    ed = e - e.mean()
    b = math.sqrt((ed**2).sum() / (td**2).sum())
    cross = (td * ed).sum()
    zero_correlation = cross == 0.0
    if cross < 0.0:
        b = -b
    a = e.mean() - b * t.mean()
    return GmfrFit(
        a=float(a),
        b=float(b),
        reversed_a=float(-a / b),
        reversed_b=float(1.0 / b),
        zero_correlation=zero_correlation,
    )


def _ols_predicted_truth(t, e):
    # ordinary least squares of truth on estimate: y' = a + b * yhat
    ed = e - e.mean()
    denom = (ed**2).sum()
    if denom == 0.0:
        raise DegenerateFitError("least-squares fit needs variance in the estimate")
    b = ((t - t.mean()) * ed).sum() / denom
    a = t.mean() - b * e.mean()
    return a + b * e


# ---------------------------------------------------------------------------
# Error decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecompositionResult:
    """Total error split into systematic and unsystematic parts."""

    total: float
    systematic: float
    unsystematic: float


def mse_decomposition_vec(truth, estimate) -> DecompositionResult:
    """Mean squared error split by the least-squares line y' = a + b*yhat.

    systematic = mean((yhat - y')^2), unsystematic = mean((y - y')^2);
    the two parts sum to the MSE.
    """
    t, e = _complete_pairs(truth, estimate, 3)
    tp = _ols_predicted_truth(t, e)
    total = float(((e - t) ** 2).mean())
    systematic = float(((e - tp) ** 2).mean())
    unsystematic = float(((t - tp) ** 2).mean())
    return DecompositionResult(total=total, systematic=systematic, unsystematic=unsystematic)


@dataclass(frozen=True)
class SpdDecomposition:
    """Sum-of-product-difference decomposition and its derived values.

    spd_u + spd_s equals the sum of squared differences; mpd_* are the
    per-pair means, rmpd_* their square roots, and ac_u/ac_s replace the
    agreement-coefficient numerator with the matching component.
    """

    spd_u: float
    spd_s: float
    mpd_u: float
    mpd_s: float
    rmpd_u: float
    rmpd_s: float
    ac_u: float
    ac_s: float


def spd_decomposition_vec(truth, estimate) -> SpdDecomposition:
    """Split disagreement using the GMFR line.

    spd_u = sum(|yhat - yhat'| * |y - y'|) with both primed series
    predicted from the GMFR fit; spd_s is the remainder of the sum of
    squared differences.
    """
    t, e = _complete_pairs(truth, estimate, 2)
    fit = gmfr_fit(t, e)
    e_prime = fit.predict_estimate(t)
    t_prime = fit.predict_truth(e)
    ssd = ((e - t) ** 2).sum()
    spd_u = (np.abs(e - e_prime) * np.abs(t - t_prime)).sum()
    spd_s = ssd - spd_u
    n = t.size
    mpd_u = spd_u / n
    mpd_s = spd_s / n

    mt = t.mean()
    me = e.mean()
    mdiff = abs(me - mt)
    ac_den = ((mdiff + np.abs(e - me)) * (mdiff + np.abs(t - mt))).sum()
    if ac_den == 0.0:
        raise UndefinedMetricError("agreement-coefficient denominator is zero")

    def _sqrt(v):
        return math.sqrt(v) if v >= 0.0 else math.nan

    return SpdDecomposition(
        spd_u=float(spd_u),
        spd_s=float(spd_s),
        mpd_u=float(mpd_u),
        mpd_s=float(mpd_s),
        rmpd_u=_sqrt(mpd_u),
        rmpd_s=_sqrt(mpd_s),
        ac_u=float(1.0 - spd_u / ac_den),
        ac_s=float(1.0 - spd_s / ac_den),
    )


def systematic_mse_vec(truth, estimate) -> float:
    return mse_decomposition_vec(truth, estimate).systematic


def unsystematic_mse_vec(truth, estimate) -> float:
    return mse_decomposition_vec(truth, estimate).unsystematic


def systematic_rmse_vec(truth, estimate) -> float:
    return math.sqrt(mse_decomposition_vec(truth, estimate).systematic)


def unsystematic_rmse_vec(truth, estimate) -> float:
    return math.sqrt(mse_decomposition_vec(truth, estimate).unsystematic)


def systematic_agreement_coefficient_vec(truth, estimate) -> float:
    return spd_decomposition_vec(truth, estimate).ac_s


def unsystematic_agreement_coefficient_vec(truth, estimate) -> float:
    return spd_decomposition_vec(truth, estimate).ac_u


def systematic_mpd_vec(truth, estimate) -> float:
    return spd_decomposition_vec(truth, estimate).mpd_s


def unsystematic_mpd_vec(truth, estimate) -> float:
    return spd_decomposition_vec(truth, estimate).mpd_u


def systematic_rmpd_vec(truth, estimate) -> float:
    return spd_decomposition_vec(truth, estimate).rmpd_s


def unsystematic_rmpd_vec(truth, estimate) -> float:
    return spd_decomposition_vec(truth, estimate).rmpd_u


def rmse_vec(truth, estimate) -> float:
    """Root mean squared error."""
    t, e = _complete_pairs(truth, estimate, 1)
    return math.sqrt(((e - t) ** 2).mean())


def mae_vec(truth, estimate) -> float:
    """Mean absolute error."""
    t, e = _complete_pairs(truth, estimate, 1)
    return float(np.abs(e - t).mean())


# ---------------------------------------------------------------------------
# Table forms
# ---------------------------------------------------------------------------


def _metric_rows(data, name, vec_fn, truth_col, estimate_col):
    t = data.column(truth_col)
    e = data.column(estimate_col)
    if data.group is None:
        return [MetricResult(name, "standard", vec_fn(t, e))]
    return [
        MetricResult(name, "standard", vec_fn(t[mask], e[mask]), group=label)
        for label, mask in data.group_masks().items()
    ]


def _table_form(name, vec_fn):
    def metric(data: Dataset, truth_col="truth", estimate_col="estimate"):
        return _metric_rows(data, name, vec_fn, truth_col, estimate_col)

    metric.__name__ = name
    metric.__qualname__ = name
    metric.__doc__ = f"Table form of {name}_vec: one MetricResult row, or one per group."
    metric.metric_name = name
    metric.vec = vec_fn
    return metric


#: Built-in metrics in registration order. The first fourteen match the
#: canonical combined metric set; rmse and mae are the aggregation
#: defaults.
VEC_METRICS = {
    "willmott_d": willmott_d_vec,
    "willmott_d1": willmott_d1_vec,
    "willmott_dr": willmott_dr_vec,
    "systematic_mse": systematic_mse_vec,
    "unsystematic_mse": unsystematic_mse_vec,
    "systematic_rmse": systematic_rmse_vec,
    "unsystematic_rmse": unsystematic_rmse_vec,
    "agreement_coefficient": agreement_coefficient_vec,
    "systematic_agreement_coefficient": systematic_agreement_coefficient_vec,
    "unsystematic_agreement_coefficient": unsystematic_agreement_coefficient_vec,
    "systematic_mpd": systematic_mpd_vec,
    "unsystematic_mpd": unsystematic_mpd_vec,
    "systematic_rmpd": systematic_rmpd_vec,
    "unsystematic_rmpd": unsystematic_rmpd_vec,
    "rmse": rmse_vec,
    "mae": mae_vec,
}

willmott_d = _table_form("willmott_d", willmott_d_vec)
willmott_d1 = _table_form("willmott_d1", willmott_d1_vec)
willmott_dr = _table_form("willmott_dr", willmott_dr_vec)
systematic_mse = _table_form("systematic_mse", systematic_mse_vec)
unsystematic_mse = _table_form("unsystematic_mse", unsystematic_mse_vec)
systematic_rmse = _table_form("systematic_rmse", systematic_rmse_vec)
unsystematic_rmse = _table_form("unsystematic_rmse", unsystematic_rmse_vec)
agreement_coefficient = _table_form("agreement_coefficient", agreement_coefficient_vec)
systematic_agreement_coefficient = _table_form(
    "systematic_agreement_coefficient", systematic_agreement_coefficient_vec
)
unsystematic_agreement_coefficient = _table_form(
    "unsystematic_agreement_coefficient", unsystematic_agreement_coefficient_vec
)
systematic_mpd = _table_form("systematic_mpd", systematic_mpd_vec)
unsystematic_mpd = _table_form("unsystematic_mpd", unsystematic_mpd_vec)
systematic_rmpd = _table_form("systematic_rmpd", systematic_rmpd_vec)
unsystematic_rmpd = _table_form("unsystematic_rmpd", unsystematic_rmpd_vec)
rmse = _table_form("rmse", rmse_vec)
mae = _table_form("mae", mae_vec)

TABLE_METRICS = {
    name: globals()[name] for name in VEC_METRICS
}


def resolve_metric(metric):
    """Normalize a metric given by name, table form, or vec function to
    a (name, vec_fn) pair."""
    if isinstance(metric, str):
        if metric not in VEC_METRICS:
            raise KeyError(f"unknown metric {metric!r}")
        return metric, VEC_METRICS[metric]
    name = getattr(metric, "metric_name", None)
    if name is not None:
        return name, metric.vec
    if callable(metric):
        name = metric.__name__
        return (name[: -len("_vec")] if name.endswith("_vec") else name), metric
    raise TypeError(f"cannot interpret {metric!r} as a metric")


class MetricSet:
    """A composite evaluator over several metrics.

    Calling it on a dataset returns one MetricResult row per metric in
    registration order (times one per group for grouped data).
    """

    def __init__(self, metrics):
        if not metrics:
            raise ValueError("metric_set needs at least one metric")
        self.metrics = [resolve_metric(m) for m in metrics]

    def __call__(self, data: Dataset, truth_col="truth", estimate_col="estimate"):
        rows = []
        for name, vec_fn in self.metrics:
            rows.extend(_metric_rows(data, name, vec_fn, truth_col, estimate_col))
        return rows

    def names(self):
        return [name for name, _ in self.metrics]


def metric_set(metrics) -> MetricSet:
    """Combine metrics into a single evaluator (see MetricSet)."""
    return MetricSet(metrics)
