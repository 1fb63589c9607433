"""Core data types and file ingestion.

Coordinates are planar Euclidean throughout: data in a geographic CRS
must be projected before ingestion, none of the computations here apply
spherical corrections. Missing numeric values travel as NaN and are
never dropped at ingest, so row count and row order survive every step.

All container types are frozen dataclasses whose arrays are marked
read-only at construction; they are safe to share between threads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from geowise.errors import (
    GeometryError,
    IngestError,
    MissingColumnError,
)


def format_number(value) -> str:
    """Shortest decimal text that parses back to the same double.

    NaN becomes the empty string, integral values drop the trailing
    ".0" (so 1.0 is written as "1").
    """
    v = float(value)
    if math.isnan(v):
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def parse_number(text: str) -> float:
    """Parse a numeric cell; empty or unparseable text becomes NaN."""
    text = text.strip()
    if not text or text.upper() in ("NA", "NAN"):
        return math.nan
    try:
        return float(text)
    except ValueError:
        return math.nan


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class PointGeometry:
    """A single planar point. Both coordinates must be finite."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"point coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class PolygonGeometry:
    """A polygon as a tuple of rings, each an (m, 2) coordinate array.

    The first ring is the exterior, any further rings are holes. Rings
    must be closed (first vertex equals last) with at least 4 vertices,
    and the exterior ring must not self-intersect.
    """

    rings: tuple

    def __post_init__(self):
        if not self.rings:
            raise GeometryError("polygon needs at least one ring")
        frozen = []
        for ring in self.rings:
            arr = np.asarray(ring, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise GeometryError("each ring must be an (m, 2) coordinate array")
            if arr.shape[0] < 4:
                raise GeometryError("each ring needs at least 4 vertices including closure")
            if not np.array_equal(arr[0], arr[-1]):
                raise GeometryError("rings must be closed (first vertex equals last)")
            if not np.isfinite(arr).all():
                raise GeometryError("ring coordinates must be finite")
            frozen.append(_freeze(arr))
        object.__setattr__(self, "rings", tuple(frozen))
        if _ring_self_intersects(self.rings[0]):
            raise GeometryError("exterior ring is self-intersecting")

    @property
    def exterior(self) -> np.ndarray:
        return self.rings[0]

    def bounds(self):
        ext = self.rings[0]
        return (
            float(ext[:, 0].min()),
            float(ext[:, 1].min()),
            float(ext[:, 0].max()),
            float(ext[:, 1].max()),
        )

    def is_rectangle(self) -> bool:
        """True for an axis-aligned rectangle with no holes."""
        if len(self.rings) != 1:
            return False
        ext = self.rings[0]
        if ext.shape[0] != 5:
            return False
        xs = np.unique(ext[:, 0])
        ys = np.unique(ext[:, 1])
        return len(xs) == 2 and len(ys) == 2

    def contains_point(self, x: float, y: float) -> bool:
        """Even-odd ray casting over all rings (holes subtract)."""
        inside = False
        for ring in self.rings:
            if _ray_cast(ring, x, y):
                inside = not inside
        return inside


def _segments_cross(p1, p2, p3, p4) -> bool:
    """Proper intersection test between segments p1p2 and p3p4."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    o1 = orient(p1, p2, p3)
    o2 = orient(p1, p2, p4)
    o3 = orient(p3, p4, p1)
    o4 = orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _ring_self_intersects(ring: np.ndarray) -> bool:
    # O(m^2) over non-adjacent segment pairs; rings here are small
    m = ring.shape[0] - 1
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue  # first and last segment are adjacent
            if _segments_cross(ring[i], ring[i + 1], ring[j], ring[j + 1]):
                return True
    return False


def _ray_cast(ring: np.ndarray, x: float, y: float) -> bool:
    inside = False
    m = ring.shape[0] - 1
    for i in range(m):
        x1, y1 = ring[i]
        x2, y2 = ring[i + 1]
        if (y1 > y) != (y2 > y):
            xt = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xt:
                inside = not inside
    return inside


@dataclass(frozen=True)
class Dataset:
    """A column table of observations with optional point geometry.

    ``truth`` and ``estimate`` are the canonical response columns;
    further numeric columns live in ``extras``. ``group`` holds string
    labels (numeric codes are stringified at ingest so grouping never
    relies on float equality).
    """

    truth: np.ndarray
    estimate: np.ndarray
    geometry: tuple | None = None
    group: tuple | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        truth = _freeze(np.asarray(self.truth, dtype=np.float64))
        estimate = _freeze(np.asarray(self.estimate, dtype=np.float64))
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "estimate", estimate)
        if truth.ndim != 1 or estimate.ndim != 1:
            raise ValueError("truth and estimate must be 1-D")
        if truth.shape[0] != estimate.shape[0]:
            raise ValueError("truth and estimate must have the same length")
        if self.geometry is not None:
            geometry = tuple(self.geometry)
            if len(geometry) != truth.shape[0]:
                raise ValueError("geometry must align with rows")
            object.__setattr__(self, "geometry", geometry)
        if self.group is not None:
            group = tuple(str(g) for g in self.group)
            if len(group) != truth.shape[0]:
                raise ValueError("group must align with rows")
            object.__setattr__(self, "group", group)
        extras = {k: _freeze(np.asarray(v, dtype=np.float64)) for k, v in self.extras.items()}
        for k, v in extras.items():
            if v.shape[0] != truth.shape[0]:
                raise ValueError(f"extra column {k!r} must align with rows")
        object.__setattr__(self, "extras", extras)

    @property
    def n_rows(self) -> int:
        return int(self.truth.shape[0])

    def column(self, name: str) -> np.ndarray:
        if name == "truth":
            return self.truth
        if name == "estimate":
            return self.estimate
        if name in self.extras:
            return self.extras[name]
        raise MissingColumnError(f"dataset has no column named {name!r}")

    def coords(self) -> np.ndarray:
        """Point coordinates as an (n, 2) array."""
        if self.geometry is None:
            raise GeometryError("dataset has no point geometry")
        return np.array([(p.x, p.y) for p in self.geometry], dtype=np.float64)

    def group_masks(self) -> dict:
        """Ordered mapping of group label to boolean row mask.

        Labels are sorted lexicographically for deterministic output.
        """
        if self.group is None:
            raise ValueError("dataset has no group column")
        labels = sorted(set(self.group))
        garr = np.asarray(self.group, dtype=object)
        return {label: garr == label for label in labels}

    def subset(self, mask: np.ndarray) -> "Dataset":
        idx = np.flatnonzero(mask)
        return Dataset(
            truth=self.truth[idx],
            estimate=self.estimate[idx],
            geometry=None if self.geometry is None else tuple(self.geometry[i] for i in idx),
            group=None if self.group is None else tuple(self.group[i] for i in idx),
            extras={k: v[idx] for k, v in self.extras.items()},
        )


@dataclass(frozen=True)
class RasterGrid:
    """A regular grid of values over a planar extent.

    ``values`` is row-major with the first row at the TOP of the extent
    (max y), matching the ASCII-grid file layout. NaN marks missing
    cells.
    """

    n_cols: int
    n_rows: int
    extent: tuple
    values: np.ndarray

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.extent
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("extent must satisfy xmin < xmax and ymin < ymax")
        values = _freeze(np.asarray(self.values, dtype=np.float64).ravel())
        if values.shape[0] != self.n_cols * self.n_rows:
            raise ValueError("values length must equal n_cols * n_rows")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "extent", (float(xmin), float(ymin), float(xmax), float(ymax)))

    def cell_centers(self) -> np.ndarray:
        """Centers of all cells, (n_cols * n_rows, 2), in value order."""
        xmin, ymin, xmax, ymax = self.extent
        dx = (xmax - xmin) / self.n_cols
        dy = (ymax - ymin) / self.n_rows
        cols = np.arange(self.n_cols)
        rows = np.arange(self.n_rows)
        cx = xmin + (cols + 0.5) * dx
        cy = ymax - (rows + 0.5) * dy
        xx, yy = np.meshgrid(cx, cy)
        return np.column_stack([xx.ravel(), yy.ravel()])

    def same_geometry(self, other: "RasterGrid") -> bool:
        return (
            self.n_cols == other.n_cols
            and self.n_rows == other.n_rows
            and self.extent == other.extent
        )


@dataclass(frozen=True)
class MetricResult:
    """One metric estimate: (metric, estimator, estimate[, group])."""

    metric: str
    estimator: str
    estimate: float
    group: str | None = None


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def read_points_csv(
    path,
    x_col=None,
    y_col=None,
    truth_col="truth",
    estimate_col="estimate",
    group_col=None,
):
    """Read a CSV of observations into a Dataset, in file order.

    Unparseable numeric cells in truth/estimate (and extra columns)
    become NaN; rows are never dropped. Coordinate columns must parse as
    finite numbers, anything else is a hard error naming the offending
    data row (1-based) and column. When ``x_col``/``y_col`` are omitted
    the dataset carries no geometry.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file, expected a header row") from None
        rows = list(reader)

    index = {name: i for i, name in enumerate(header)}
    bound = [truth_col, estimate_col]
    if x_col is not None or y_col is not None:
        if x_col is None or y_col is None:
            raise ValueError("x_col and y_col must be supplied together")
        bound += [x_col, y_col]
    if group_col is not None:
        bound.append(group_col)
    for name in bound:
        if name not in index:
            raise MissingColumnError(f"{path}: column {name!r} not found in header {header}")

    n = len(rows)
    truth = np.empty(n)
    estimate = np.empty(n)
    geometry = [] if x_col is not None else None
    group = [] if group_col is not None else None
    extra_names = [h for h in header if h not in bound]
    extras = {name: np.empty(n) for name in extra_names}

    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise IngestError(f"{path}: row {r + 1} has {len(row)} fields, expected {len(header)}")
        truth[r] = parse_number(row[index[truth_col]])
        estimate[r] = parse_number(row[index[estimate_col]])
        if geometry is not None:
            coords = []
            for cname in (x_col, y_col):
                text = row[index[cname]]
                value = parse_number(text)
                if not math.isfinite(value):
                    raise IngestError(
                        f"{path}: row {r + 1}, column {cname!r}: "
                        f"coordinate {text!r} is not a finite number"
                    )
                coords.append(value)
            geometry.append(PointGeometry(coords[0], coords[1]))
        if group is not None:
            group.append(row[index[group_col]])
        for name in extra_names:
            extras[name][r] = parse_number(row[index[name]])

    return Dataset(
        truth=truth,
        estimate=estimate,
        geometry=None if geometry is None else tuple(geometry),
        group=None if group is None else tuple(group),
        extras=extras,
    )


def write_points_csv(dataset: Dataset, path):
    """Write a Dataset back to CSV with round-trippable numbers.

    Column names are canonical: x, y, truth, estimate, group, then any
    extra columns in their stored order.
    """
    header = []
    if dataset.geometry is not None:
        header += ["x", "y"]
    header += ["truth", "estimate"]
    if dataset.group is not None:
        header.append("group")
    header += list(dataset.extras)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in range(dataset.n_rows):
            row = []
            if dataset.geometry is not None:
                row += [format_number(dataset.geometry[r].x), format_number(dataset.geometry[r].y)]
            row += [format_number(dataset.truth[r]), format_number(dataset.estimate[r])]
            if dataset.group is not None:
                row.append(dataset.group[r])
            row += [format_number(dataset.extras[name][r]) for name in dataset.extras]
            writer.writerow(row)


def read_columns_csv(path, columns):
    """Read named numeric columns from a CSV into a dict of arrays.

    Used for predictor tables; unparseable cells become NaN.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file, expected a header row") from None
        rows = list(reader)
    index = {name: i for i, name in enumerate(header)}
    for name in columns:
        if name not in index:
            raise MissingColumnError(f"{path}: column {name!r} not found in header {header}")
    out = {name: np.empty(len(rows)) for name in columns}
    for r, row in enumerate(rows):
        for name in columns:
            # short or blank rows read as missing cells
            pos = index[name]
            out[name][r] = parse_number(row[pos]) if pos < len(row) else math.nan
    return out


# ---------------------------------------------------------------------------
# GeoJSON ingestion
# ---------------------------------------------------------------------------


def _load_feature_collection(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise IngestError(f"{path}: invalid JSON ({exc})") from exc
    if doc.get("type") != "FeatureCollection":
        raise IngestError(f"{path}: expected a GeoJSON FeatureCollection")
    features = doc.get("features", [])
    types = {f.get("geometry", {}).get("type") for f in features}
    if len(types) > 1:
        raise GeometryError(f"{path}: mixed geometry types {sorted(t or 'null' for t in types)}")
    return features, (types.pop() if types else None)


def _polygon_from_geojson(geometry) -> PolygonGeometry:
    return PolygonGeometry(rings=tuple(np.asarray(ring, dtype=np.float64) for ring in geometry["coordinates"]))


def _numeric_property(props, name):
    value = props.get(name)
    if value is None:
        return math.nan
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    return parse_number(str(value))


def _property_columns(features, skip):
    names = []
    for f in features:
        for key in (f.get("properties") or {}):
            if key not in skip and key not in names:
                names.append(key)
    return names


def read_geojson(path, truth_prop=None, estimate_prop=None, group_prop=None):
    """Read a homogeneous GeoJSON FeatureCollection.

    Point features return a Dataset (feature order preserved, named
    properties mapped to truth/estimate and remaining numeric properties
    to extra columns). Polygon features return a list of
    PolygonGeometry.
    """
    features, geom_type = _load_feature_collection(path)
    if geom_type == "Polygon":
        return [_polygon_from_geojson(f["geometry"]) for f in features]
    if geom_type != "Point":
        raise GeometryError(f"{path}: unsupported geometry type {geom_type!r}")

    return _dataset_from_features(features, truth_prop, estimate_prop, group_prop, points=True)


def read_polygon_geojson(path, truth_prop=None, estimate_prop=None, group_prop=None):
    """Read polygons plus their property table.

    Returns (polygons, dataset) where the dataset has no geometry but
    carries the per-feature values, aligned with the polygon list.
    """
    features, geom_type = _load_feature_collection(path)
    if geom_type != "Polygon":
        raise GeometryError(f"{path}: expected Polygon features, got {geom_type!r}")
    polygons = [_polygon_from_geojson(f["geometry"]) for f in features]
    dataset = _dataset_from_features(features, truth_prop, estimate_prop, group_prop, points=False)
    return polygons, dataset


def _dataset_from_features(features, truth_prop, estimate_prop, group_prop, points):
    n = len(features)
    truth = np.full(n, math.nan)
    estimate = np.full(n, math.nan)
    geometry = [] if points else None
    group = [] if group_prop is not None else None
    skip = {truth_prop, estimate_prop, group_prop} - {None}
    extra_names = _property_columns(features, skip)
    extras = {name: np.full(n, math.nan) for name in extra_names}

    for r, feature in enumerate(features):
        props = feature.get("properties") or {}
        if truth_prop is not None and truth_prop in props:
            truth[r] = _numeric_property(props, truth_prop)
        if estimate_prop is not None and estimate_prop in props:
            estimate[r] = _numeric_property(props, estimate_prop)
        if group is not None:
            group.append(str(props.get(group_prop, "")))
        for name in extra_names:
            extras[name][r] = _numeric_property(props, name)
        if points:
            x, y = feature["geometry"]["coordinates"][:2]
            geometry.append(PointGeometry(float(x), float(y)))

    return Dataset(
        truth=truth,
        estimate=estimate,
        geometry=None if geometry is None else tuple(geometry),
        group=None if group is None else tuple(group),
        extras=extras,
    )


# ---------------------------------------------------------------------------
# ASCII grid rasters
# ---------------------------------------------------------------------------


def read_ascii_grid(path) -> RasterGrid:
    """Read the minimal ASCII grid format.

    Six header lines (ncols, nrows, xmin, ymin, xmax, ymax as
    "name value" pairs) followed by nrows lines of ncols values, first
    line being the top row. "nan", "NA" or empty cells are missing.
    """
    with open(path, encoding="utf-8") as fh:
        tokens = {}
        for _ in range(6):
            line = fh.readline()
            if not line:
                raise IngestError(f"{path}: truncated header")
            parts = line.split()
            if len(parts) != 2:
                raise IngestError(f"{path}: malformed header line {line!r}")
            tokens[parts[0].lower()] = parts[1]
        for key in ("ncols", "nrows", "xmin", "ymin", "xmax", "ymax"):
            if key not in tokens:
                raise IngestError(f"{path}: header is missing {key!r}")
        n_cols = int(tokens["ncols"])
        n_rows = int(tokens["nrows"])
        values = []
        for line in fh:
            if line.strip():
                values.extend(parse_number(tok) for tok in line.split())
    if len(values) != n_cols * n_rows:
        raise IngestError(
            f"{path}: expected {n_cols * n_rows} values, found {len(values)}"
        )
    return RasterGrid(
        n_cols=n_cols,
        n_rows=n_rows,
        extent=(
            float(tokens["xmin"]),
            float(tokens["ymin"]),
            float(tokens["xmax"]),
            float(tokens["ymax"]),
        ),
        values=np.asarray(values),
    )


def write_ascii_grid(raster: RasterGrid, path):
    xmin, ymin, xmax, ymax = raster.extent
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"ncols {raster.n_cols}\n")
        fh.write(f"nrows {raster.n_rows}\n")
        fh.write(f"xmin {format_number(xmin)}\n")
        fh.write(f"ymin {format_number(ymin)}\n")
        fh.write(f"xmax {format_number(xmax)}\n")
        fh.write(f"ymax {format_number(ymax)}\n")
        for r in range(raster.n_rows):
            row = raster.values[r * raster.n_cols : (r + 1) * raster.n_cols]
            fh.write(" ".join("nan" if math.isnan(v) else format_number(v) for v in row))
            fh.write("\n")
