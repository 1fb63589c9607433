"""Dissimilarity index and area of applicability.

The dissimilarity index (DI) of a point is its Euclidean distance in
standardized, importance-weighted predictor space to the nearest
training observation, divided by the mean pairwise distance among
training observations. Points whose DI exceeds a threshold derived from
the training DI distribution (75th percentile plus 1.5 IQR) fall
outside the area of applicability.

Two fitting routes exist: a plain training set (optionally reporting a
test set's DI distribution), and cross-validation folds, where each
fold is standardized on its analysis set alone and the threshold comes
from the pooled assessment-set DI values.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from geowise import _kernels
from geowise.data import Dataset
from geowise.errors import (
    DegenerateFitError,
    EmptyInputError,
    IngestError,
    MissingColumnError,
)

MODEL_FORMAT = "geowise-aoa"
MODEL_VERSION = 1


@dataclass(frozen=True)
class AoaModel:
    """Fitted applicability-domain model.

    ``training_matrix`` holds the standardized, weighted training rows
    used for nearest-neighbor queries at prediction time. For
    cross-validation fits the stored centers/scales come from the whole
    dataset and ``d_bar`` is the mean of the per-fold pairwise means.
    """

    predictor_names: tuple
    centers: np.ndarray
    scales: np.ndarray
    importance: np.ndarray
    d_bar: float
    threshold: float
    training_matrix: np.ndarray
    training_di: np.ndarray
    testing_di: np.ndarray | None = None
    method: str = "train_test"

    def __post_init__(self):
        for name in ("centers", "scales", "importance", "training_matrix", "training_di"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.testing_di is not None:
            arr = np.asarray(self.testing_di, dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, "testing_di", arr)
        if (self.scales <= 0).any():
            raise DegenerateFitError("every predictor scale must be positive")
        if not self.d_bar > 0:
            raise DegenerateFitError("mean pairwise training distance must be positive")

    @property
    def p(self) -> int:
        return len(self.predictor_names)

    def summary(self) -> str:
        from geowise.data import format_number

        return (
            "# Predictors:\n"
            f"   {self.p}\n"
            "Area-of-applicability threshold:\n"
            f"   {format_number(self.threshold)}"
        )


@dataclass(frozen=True)
class FoldSet:
    """Cross-validation partitions: (analysis_indices, assessment_indices)
    per fold. The two sides of a fold must not overlap."""

    folds: tuple

    def __post_init__(self):
        cleaned = []
        for f, (analysis, assessment) in enumerate(self.folds):
            a = np.asarray(analysis, dtype=np.intp)
            b = np.asarray(assessment, dtype=np.intp)
            if np.intersect1d(a, b).size:
                raise ValueError(f"fold {f}: analysis and assessment sets overlap")
            a.flags.writeable = False
            b.flags.writeable = False
            cleaned.append((a, b))
        object.__setattr__(self, "folds", tuple(cleaned))

    def __len__(self) -> int:
        return len(self.folds)


# ---------------------------------------------------------------------------
# Input normalization
# ---------------------------------------------------------------------------


def _normalize_importance(importance):
    """Importance as ordered (term, estimate) pairs.

    Accepts a mapping or a sequence of pairs; estimates must be
    non-negative numbers. The pair order defines the predictor order.
    """
    if isinstance(importance, dict):
        pairs = list(importance.items())
    else:
        pairs = [(str(t), float(v)) for t, v in importance]
    if not pairs:
        raise ValueError("importance must name at least one predictor")
    names = [t for t, _ in pairs]
    if len(set(names)) != len(names):
        raise ValueError("importance lists a predictor twice")
    values = np.array([v for _, v in pairs], dtype=np.float64)
    if np.isnan(values).any():
        raise ValueError("importance estimates must be numbers")
    if (values < 0).any():
        bad = [names[i] for i in np.flatnonzero(values < 0)]
        raise ValueError(f"negative importance for {bad}; importance must be >= 0")
    return names, values


def _predictor_matrix(source, names):
    """Stack the named columns of a Dataset or mapping into an (n, p)
    matrix, in the given name order."""
    columns = []
    for name in names:
        if isinstance(source, Dataset):
            column = source.column(name)
        elif isinstance(source, dict):
            if name not in source:
                raise MissingColumnError(f"predictor table has no column named {name!r}")
            column = np.asarray(source[name], dtype=np.float64)
        else:
            raise TypeError("predictor table must be a Dataset or a mapping of columns")
        if column.ndim != 1:
            raise ValueError(f"predictor column {name!r} must be 1-D")
        columns.append(column)
    lengths = {c.shape[0] for c in columns}
    if len(lengths) != 1:
        raise ValueError("predictor columns differ in length")
    return np.column_stack(columns)


def _check_terms_against(source, names):
    """Unknown importance terms are an error (they name no column)."""
    for name in names:
        if isinstance(source, Dataset):
            source.column(name)
        elif name not in source:
            raise MissingColumnError(f"importance names unknown term {name!r}")


def _standardizer(X, context):
    if X.shape[0] < 2:
        raise EmptyInputError(f"{context}: need at least 2 rows")
    if np.isnan(X).any():
        raise ValueError(f"{context}: predictors contain missing values")
    centers = X.mean(axis=0)
    scales = X.std(axis=0, ddof=1)
    if (scales == 0).any():
        raise DegenerateFitError(f"{context}: constant predictor (zero standard deviation)")
    return centers, scales


def _threshold_from(di: np.ndarray) -> float:
    q75 = float(np.quantile(di, 0.75))
    q25 = float(np.quantile(di, 0.25))
    return q75 + 1.5 * (q75 - q25)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def fit_aoa(training, importance, testing=None) -> AoaModel:
    """Fit from a training predictor table.

    Predictors are centered and scaled by training statistics (sd with
    the n-1 denominator), then multiplied by their importance. The
    threshold comes from the training DI distribution, where each
    training point's distance goes to its nearest OTHER training point.
    A testing table, when given, only contributes its reported DI
    distribution; it never affects the fitted parameters.
    """
    names, weights = _normalize_importance(importance)
    _check_terms_against(training, names)
    X = _predictor_matrix(training, names)
    centers, scales = _standardizer(X, "training data")
    Z = (X - centers) / scales * weights

    d_bar = _kernels.pairwise_mean_distance(Z)
    if not d_bar > 0:
        raise DegenerateFitError("all training rows are identical")
    training_di = _kernels.nearest_other_distance(Z) / d_bar

    testing_di = None
    if testing is not None:
        Xt = _predictor_matrix(testing, names)
        if np.isnan(Xt).any():
            raise ValueError("testing data: predictors contain missing values")
        Zt = (Xt - centers) / scales * weights
        testing_di = _kernels.nearest_cross_distance(Zt, Z) / d_bar

    return AoaModel(
        predictor_names=tuple(names),
        centers=centers,
        scales=scales,
        importance=weights,
        d_bar=float(d_bar),
        threshold=_threshold_from(training_di),
        training_matrix=Z,
        training_di=training_di,
        testing_di=testing_di,
        method="train_test",
    )


def fit_aoa_cv(data, folds, importance, columns=None) -> AoaModel:
    """Fit from cross-validation folds.

    Each fold standardizes on its analysis set alone, computes that
    set's mean pairwise distance, and scores its assessment points
    against the analysis set. The threshold comes from the pooled
    assessment DI values. The stored model standardizes with
    whole-dataset statistics and uses the mean of the per-fold pairwise
    means, reflecting a final model retrained on all rows.
    """
    names, weights = _normalize_importance(importance)
    if columns is not None and set(columns) != set(names):
        raise ValueError("columns must match the importance terms")
    _check_terms_against(data, names)
    if not isinstance(folds, FoldSet):
        folds = FoldSet(folds=tuple(folds))
    if len(folds) < 2:
        raise ValueError("need at least 2 folds")

    X = _predictor_matrix(data, names)
    pooled = []
    fold_d_bars = []
    for f, (analysis, assessment) in enumerate(folds.folds):
        if analysis.size < 2:
            raise EmptyInputError(f"fold {f}: analysis set needs at least 2 rows")
        Xa = X[analysis]
        centers_f, scales_f = _standardizer(Xa, f"fold {f} analysis set")
        Za = (Xa - centers_f) / scales_f * weights
        d_bar_f = _kernels.pairwise_mean_distance(Za)
        if not d_bar_f > 0:
            raise DegenerateFitError(f"fold {f}: analysis rows are all identical")
        fold_d_bars.append(d_bar_f)
        if assessment.size:
            Xb = X[assessment]
            if np.isnan(Xb).any():
                raise ValueError(f"fold {f}: assessment predictors contain missing values")
            Zb = (Xb - centers_f) / scales_f * weights
            pooled.append(_kernels.nearest_cross_distance(Zb, Za) / d_bar_f)

    if not pooled:
        raise EmptyInputError("no assessment rows across folds")
    pooled_di = np.concatenate(pooled)

    centers, scales = _standardizer(X, "full data")
    Z = (X - centers) / scales * weights
    return AoaModel(
        predictor_names=tuple(names),
        centers=centers,
        scales=scales,
        importance=weights,
        d_bar=float(np.mean(fold_d_bars)),
        threshold=_threshold_from(pooled_di),
        training_matrix=Z,
        training_di=pooled_di,
        method="cross_validation",
    )


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AoaPrediction:
    """Per-row DI and applicability flag.

    ``di`` is NaN and ``aoa`` is None for rows with any missing
    predictor; row count and order always match the input.
    """

    di: np.ndarray
    aoa: tuple

    def rows(self):
        return list(zip(self.di.tolist(), self.aoa))


def predict_aoa(model: AoaModel, newdata) -> AoaPrediction:
    """Score new observations against a fitted model.

    A missing predictor COLUMN is a hard error; missing values inside
    rows yield NaN di / None aoa for those rows only.
    """
    X = _predictor_matrix(newdata, model.predictor_names)
    n = X.shape[0]
    di = np.full(n, math.nan)
    complete = ~np.isnan(X).any(axis=1)
    if complete.any():
        Z = (X[complete] - model.centers) / model.scales * model.importance
        dk = _kernels.nearest_cross_distance(Z, model.training_matrix)
        di[complete] = dk / model.d_bar
    aoa = tuple(
        bool(di[i] <= model.threshold) if complete[i] else None for i in range(n)
    )
    return AoaPrediction(di=di, aoa=aoa)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def model_to_json(model: AoaModel) -> dict:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "method": model.method,
        "predictors": list(model.predictor_names),
        "centers": model.centers.tolist(),
        "scales": model.scales.tolist(),
        "importance": model.importance.tolist(),
        "d_bar": model.d_bar,
        "threshold": model.threshold,
        "training_matrix": model.training_matrix.tolist(),
        "training_di": model.training_di.tolist(),
    }
    if model.testing_di is not None:
        doc["testing_di"] = model.testing_di.tolist()
    return doc


def model_from_json(doc: dict) -> AoaModel:
    if doc.get("format") != MODEL_FORMAT:
        raise IngestError("not an applicability model document")
    if doc.get("version") != MODEL_VERSION:
        raise IngestError(f"unsupported model version {doc.get('version')!r}")
    return AoaModel(
        predictor_names=tuple(doc["predictors"]),
        centers=np.asarray(doc["centers"]),
        scales=np.asarray(doc["scales"]),
        importance=np.asarray(doc["importance"]),
        d_bar=float(doc["d_bar"]),
        threshold=float(doc["threshold"]),
        training_matrix=np.asarray(doc["training_matrix"]),
        training_di=np.asarray(doc["training_di"]),
        testing_di=np.asarray(doc["testing_di"]) if "testing_di" in doc else None,
        method=doc.get("method", "train_test"),
    )


def save_aoa_model(model: AoaModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh, indent=2)
        fh.write("\n")


def load_aoa_model(path) -> AoaModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}: invalid JSON ({exc})") from exc
    return model_from_json(doc)


# ---------------------------------------------------------------------------
# Sidecar file formats used by the command-line interface
# ---------------------------------------------------------------------------


def read_importance_csv(path):
    """Read (term, estimate) pairs from a CSV with those two columns."""
    pairs = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"term", "estimate"} <= set(reader.fieldnames):
            raise IngestError(f"{path}: expected columns term,estimate")
        for row in reader:
            try:
                pairs.append((row["term"], float(row["estimate"])))
            except (TypeError, ValueError):
                raise IngestError(
                    f"{path}: estimate for term {row.get('term')!r} is not a number"
                ) from None
    if not pairs:
        raise IngestError(f"{path}: no importance rows")
    return pairs


def read_folds_csv(path, n_rows: int) -> FoldSet:
    """Build folds from a CSV with columns row_index,fold_id.

    Row indices are 0-based. Each fold's assessment set is the rows
    labelled with that fold id; its analysis set is every other row of
    the dataset.
    """
    assignments = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"row_index", "fold_id"} <= set(reader.fieldnames):
            raise IngestError(f"{path}: expected columns row_index,fold_id")
        for row in reader:
            try:
                idx = int(row["row_index"])
            except (TypeError, ValueError):
                raise IngestError(f"{path}: bad row_index {row.get('row_index')!r}") from None
            if not 0 <= idx < n_rows:
                raise IngestError(f"{path}: row_index {idx} out of range for {n_rows} rows")
            assignments.setdefault(str(row["fold_id"]), []).append(idx)
    if len(assignments) < 2:
        raise IngestError(f"{path}: need at least 2 distinct fold ids")
    all_rows = np.arange(n_rows)
    folds = []
    for fold_id in sorted(assignments):
        assessment = np.array(sorted(assignments[fold_id]), dtype=np.intp)
        analysis = np.setdiff1d(all_rows, assessment)
        folds.append((analysis, assessment))
    return FoldSet(folds=tuple(folds))
