"""Spatial neighbor lists and sparse weights matrices.

Neighbors come from exact k-nearest-neighbor search on points (planar
Euclidean, ties broken by lower index) or from shared-vertex contiguity
on polygons. Weights are stored row-compressed; row standardization
divides each row by its neighbor count so every nonempty row sums to 1.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from geowise import _kernels
from geowise.data import PointGeometry, PolygonGeometry, format_number
from geowise.errors import GeometryError, IngestError, NeighborError


class WeightsStyle(enum.Enum):
    ROW_STANDARDIZED = "W"
    BINARY = "B"
    CUSTOM = "C"


@dataclass(frozen=True)
class NeighborList:
    """Per-observation neighbor indices (0-based, self excluded)."""

    neighbors: tuple
    symmetric_hint: bool = False

    def __post_init__(self):
        n = len(self.neighbors)
        frozen = []
        for i, row in enumerate(self.neighbors):
            arr = np.asarray(row, dtype=np.intp)
            if arr.ndim != 1:
                raise NeighborError("each neighbor row must be a 1-D index list")
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise NeighborError(f"neighbor index out of range in row {i}")
            if np.any(arr == i):
                raise NeighborError(f"row {i} lists itself as a neighbor")
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "neighbors", tuple(frozen))

    @property
    def n(self) -> int:
        return len(self.neighbors)

    def counts(self) -> np.ndarray:
        return np.array([row.size for row in self.neighbors], dtype=np.intp)


@dataclass(frozen=True)
class WeightsMatrix:
    """Sparse spatial weights in CSR layout.

    ``indptr`` has n+1 entries; row i holds ``indices[indptr[i]:indptr[i+1]]``
    with weights in the matching slice of ``weights``.
    """

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    style: WeightsStyle

    def __post_init__(self):
        indptr = np.asarray(self.indptr, dtype=np.intp)
        indices = np.array(self.indices, dtype=np.intp)
        weights = np.array(self.weights, dtype=np.float64)
        if indptr.ndim != 1 or indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValueError("malformed indptr")
        if indices.shape != weights.shape:
            raise ValueError("indices and weights must align")
        # canonical layout: rows sorted by column index, so identical
        # topologies produce bitwise-identical statistics regardless of
        # how the matrix was constructed or imported
        for i in range(indptr.shape[0] - 1):
            lo, hi = indptr[i], indptr[i + 1]
            order = np.argsort(indices[lo:hi], kind="stable")
            indices[lo:hi] = indices[lo:hi][order]
            weights[lo:hi] = weights[lo:hi][order]
        for arr in (indptr, indices, weights):
            arr.flags.writeable = False
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return int(self.indptr.shape[0] - 1)

    @property
    def total(self) -> float:
        """Sum of all weights (the W in autocorrelation statistics)."""
        return float(self.weights.sum())

    def row(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), np.diff(self.indptr))

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.row_ids(), weights=self.weights, minlength=self.n)

    def lag(self, values) -> np.ndarray:
        """Spatial lag: per-row weighted sum of neighbor values."""
        values = np.asarray(values, dtype=np.float64)
        contributions = self.weights * values[self.indices]
        return np.bincount(self.row_ids(), weights=contributions, minlength=self.n)

    def neighbor_list(self) -> NeighborList:
        return NeighborList(
            neighbors=tuple(self.row(i)[0].copy() for i in range(self.n))
        )


def build_neighbors_points(points, k: int = 1) -> NeighborList:
    """k nearest neighbors for each point (default 1).

    Accepts a sequence of PointGeometry or an (n, 2) coordinate array.
    Duplicate points are allowed; zero distance between distinct indices
    is fine. Requires n >= k + 1.
    """
    coords = _as_coords(points)
    n = coords.shape[0]
    if n <= k:
        raise NeighborError(f"need at least k + 1 = {k + 1} points, got {n}")
    if not np.isfinite(coords).all():
        raise GeometryError("point coordinates must be finite")
    idx = _kernels.knn_indices(coords, k)
    return NeighborList(neighbors=tuple(idx[i] for i in range(n)), symmetric_hint=False)


def _as_coords(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        coords = np.asarray(points, dtype=np.float64)
    else:
        seq = list(points)
        if seq and isinstance(seq[0], PointGeometry):
            coords = np.array([(p.x, p.y) for p in seq], dtype=np.float64)
        else:
            coords = np.asarray(seq, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise GeometryError("expected (n, 2) point coordinates")
    return coords


def build_neighbors_polygons(polygons, quantize_eps=None) -> NeighborList:
    """Contiguity neighbors: polygons sharing at least one vertex.

    Vertices are quantized to an epsilon grid before comparison
    (default 1e-9 of the bounding-box diagonal), so grid-derived
    polygons with exactly shared corners always register. Contact along
    a segment interior without a shared vertex is NOT detected; for the
    regular grids this package produces, shared boundaries always share
    vertices. The relation is symmetric by construction.
    """
    polygons = list(polygons)
    if len(polygons) < 2:
        raise NeighborError("need at least 2 polygons")
    for poly in polygons:
        if not isinstance(poly, PolygonGeometry):
            raise GeometryError("expected PolygonGeometry instances")

    if quantize_eps is None:
        xmin = min(p.bounds()[0] for p in polygons)
        ymin = min(p.bounds()[1] for p in polygons)
        xmax = max(p.bounds()[2] for p in polygons)
        ymax = max(p.bounds()[3] for p in polygons)
        diagonal = float(np.hypot(xmax - xmin, ymax - ymin))
        quantize_eps = 1e-9 * diagonal if diagonal > 0 else 1e-9

    vertex_owners: dict = {}
    for i, poly in enumerate(polygons):
        for ring in poly.rings:
            for x, y in ring[:-1]:
                key = (round(x / quantize_eps), round(y / quantize_eps))
                vertex_owners.setdefault(key, set()).add(i)

    adjacency = [set() for _ in polygons]
    for owners in vertex_owners.values():
        if len(owners) > 1:
            for i in owners:
                adjacency[i].update(owners - {i})

    return NeighborList(
        neighbors=tuple(np.array(sorted(s), dtype=np.intp) for s in adjacency),
        symmetric_hint=True,
    )


def build_weights(
    neighbors: NeighborList,
    style: WeightsStyle = WeightsStyle.ROW_STANDARDIZED,
    allow_empty: bool = False,
) -> WeightsMatrix:
    """Turn a neighbor list into a weights matrix.

    Row standardization assigns 1/len(row) to each neighbor; binary
    style assigns 1. Observations with no neighbors are an error unless
    ``allow_empty`` is set, in which case they become zero rows that
    contribute nothing to the total.
    """
    counts = neighbors.counts()
    if not allow_empty and (counts == 0).any():
        empty = np.flatnonzero(counts == 0).tolist()
        raise NeighborError(
            f"observations with no neighbors: {empty}; "
            "pass allow_empty=True to keep them as zero rows"
        )
    indptr = np.concatenate([[0], np.cumsum(counts)])
    indices = (
        np.concatenate([row for row in neighbors.neighbors if row.size])
        if counts.sum()
        else np.empty(0, dtype=np.intp)
    )
    if style is WeightsStyle.ROW_STANDARDIZED:
        weights = np.concatenate(
            [np.full(row.size, 1.0 / row.size) for row in neighbors.neighbors if row.size]
        ) if counts.sum() else np.empty(0)
    elif style is WeightsStyle.BINARY:
        weights = np.ones(int(counts.sum()))
    else:
        raise ValueError("build_weights constructs ROW_STANDARDIZED or BINARY styles")
    return WeightsMatrix(indptr=indptr, indices=indices, weights=weights, style=style)


def write_weights_csv(wm: WeightsMatrix, path):
    """Dump weights as a 3-column CSV (i, j, w), row-major."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["i", "j", "w"])
        row_ids = wm.row_ids()
        for i, j, w in zip(row_ids, wm.indices, wm.weights):
            writer.writerow([int(i), int(j), format_number(w)])


def read_weights_csv(path) -> WeightsMatrix:
    """Read a 3-column (i, j, w) CSV into a WeightsMatrix.

    The style is detected: rows summing to 1 give ROW_STANDARDIZED, all
    unit weights give BINARY, anything else is tagged CUSTOM.
    """
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["i", "j", "w"]:
            raise IngestError(f"{path}: expected header i,j,w")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                entries.append((int(row[0]), int(row[1]), float(row[2])))
            except (ValueError, IndexError):
                raise IngestError(f"{path}: malformed weights row at line {lineno}") from None
    if not entries:
        raise IngestError(f"{path}: no weight entries")
    n = max(max(i, j) for i, j, _ in entries) + 1
    entries.sort(key=lambda t: (t[0], t[1]))
    rows = [[] for _ in range(n)]
    vals = [[] for _ in range(n)]
    for i, j, w in entries:
        rows[i].append(j)
        vals[i].append(w)
    counts = np.array([len(r) for r in rows])
    indptr = np.concatenate([[0], np.cumsum(counts)])
    indices = np.array([j for r in rows for j in r], dtype=np.intp)
    weights = np.array([w for v in vals for w in v], dtype=np.float64)

    sums = np.bincount(np.repeat(np.arange(n), counts), weights=weights, minlength=n)
    nonempty = counts > 0
    if np.all(weights == 1.0):
        style = WeightsStyle.BINARY
    elif np.allclose(sums[nonempty], 1.0, rtol=0.0, atol=1e-9):
        style = WeightsStyle.ROW_STANDARDIZED
    else:
        style = WeightsStyle.CUSTOM
    return WeightsMatrix(indptr=indptr, indices=indices, weights=weights, style=style)
