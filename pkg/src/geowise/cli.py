"""Command-line surface: metrics, autocorr, multiscale, and aoa.

Exit codes: 0 on success, 1 when a computation fails (undefined metric,
degenerate fit, bad data values), 2 for usage and configuration errors
(unknown flags or names, missing files or columns). Identical inputs
and flags produce byte-identical outputs.
"""

from __future__ import annotations

import csv
import functools
import json
import math
import os
import sys
from pathlib import Path

import click

from geowise import agreement, autocorr, multiscale, svg
from geowise.applicability import (
    fit_aoa,
    fit_aoa_cv,
    load_aoa_model,
    predict_aoa,
    read_folds_csv,
    read_importance_csv,
    save_aoa_model,
)
from geowise.data import (
    format_number,
    read_ascii_grid,
    read_columns_csv,
    read_geojson,
    read_points_csv,
    read_polygon_geojson,
)
from geowise.errors import GeowiseError, MissingColumnError
from geowise.multiscale import GridSpec, grid_to_geojson
from geowise.weights import build_neighbors_polygons, build_weights, read_weights_csv, write_weights_csv

THREADS_ENV = "GEOWISE_THREADS"


def _thread_cap() -> int:
    """Validated GEOWISE_THREADS cap (all computation is currently
    single-threaded, so any positive cap is honored)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise click.UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if value < 1:
        raise click.UsageError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


def _handle_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except click.ClickException:
            raise
        except (FileNotFoundError, IsADirectoryError) as exc:
            raise click.UsageError(str(exc)) from exc
        except MissingColumnError as exc:
            raise click.UsageError(str(exc)) from exc
        except GeowiseError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _emit(text: str, output):
    if output is None:
        click.echo(text, nl=False)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _is_geojson(path) -> bool:
    return str(path).lower().endswith((".geojson", ".json"))


def _load_point_dataset(path, truth, estimate, group, x_col, y_col):
    """Dataset from CSV or point GeoJSON. CSV coordinate columns are
    optional: used when present under the given names."""
    if _is_geojson(path):
        result = read_geojson(path, truth_prop=truth, estimate_prop=estimate, group_prop=group)
        if not hasattr(result, "n_rows"):
            raise click.UsageError(f"{path}: expected Point features for this command")
        return result
    with open(path, newline="", encoding="utf-8") as fh:
        names = next(csv.reader(fh), [])
    has_xy = x_col in names and y_col in names
    return read_points_csv(
        path,
        x_col=x_col if has_xy else None,
        y_col=y_col if has_xy else None,
        truth_col=truth,
        estimate_col=estimate,
        group_col=group,
    )


def _rows_to_csv(rows) -> str:
    grouped = any(r.group is not None for r in rows)
    lines = ["metric,estimator,estimate" + (",group" if grouped else "")]
    for r in rows:
        line = f"{r.metric},{r.estimator},{format_number(r.estimate)}"
        if grouped:
            line += f",{r.group if r.group is not None else ''}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def _nan_to_none(v: float):
    return None if math.isnan(v) else v


def _rows_to_json(rows) -> str:
    grouped = any(r.group is not None for r in rows)
    payload = []
    for r in rows:
        item = {"metric": r.metric, "estimator": r.estimator, "estimate": _nan_to_none(r.estimate)}
        if grouped:
            item["group"] = r.group
        payload.append(item)
    return json.dumps(payload, indent=2) + "\n"


@click.group()
def main():
    """Assessment tools for models fit to spatial data."""
    _thread_cap()


@main.command("metrics")
@click.option("--input", "input_path", required=True, help="CSV or point GeoJSON.")
@click.option("--truth", required=True, help="Column/property with observed values.")
@click.option("--estimate", required=True, help="Column/property with predictions.")
@click.option("--group", default=None, help="Optional grouping column/property.")
@click.option("--metric", "metric_names", multiple=True, required=True, help="Metric name; repeatable, evaluated in order.")
@click.option("--x-col", default="x", show_default=True, help="CSV x-coordinate column.")
@click.option("--y-col", default="y", show_default=True, help="CSV y-coordinate column.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--output", default=None, help="Output path (stdout when omitted).")
@_handle_errors
def cmd_metrics(input_path, truth, estimate, group, metric_names, x_col, y_col, fmt, output):
    """Evaluate agreement/error metrics on a dataset."""
    for name in metric_names:
        if name not in agreement.VEC_METRICS:
            raise click.UsageError(f"unknown metric {name!r}")
    data = _load_point_dataset(input_path, truth, estimate, group, x_col, y_col)
    rows = agreement.metric_set(list(metric_names))(data)
    _emit(_rows_to_csv(rows) if fmt == "csv" else _rows_to_json(rows), output)


@main.command("autocorr")
@click.option("--input", "input_path", required=True, help="CSV, point GeoJSON, or polygon GeoJSON.")
@click.option("--truth", required=True)
@click.option("--estimate", required=True)
@click.option("--group", default=None)
@click.option("--stat", "stat_name", required=True, help="One autocorrelation statistic.")
@click.option("--weights", "weights_path", default=None, help="Use an (i,j,w) CSV instead of building weights.")
@click.option("--weights-out", "weights_out", default=None, help="Dump the weights used as an (i,j,w) CSV.")
@click.option("--x-col", default="x", show_default=True)
@click.option("--y-col", default="y", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "svg"]), default="csv", show_default=True)
@click.option("--output", default=None)
@_handle_errors
def cmd_autocorr(input_path, truth, estimate, group, stat_name, weights_path, weights_out, x_col, y_col, fmt, output):
    """Spatial autocorrelation statistics on model residuals."""
    if stat_name not in autocorr.STATISTICS:
        raise click.UsageError(
            f"unknown statistic {stat_name!r}; choose from {', '.join(autocorr.STATISTICS)}"
        )
    is_local = stat_name in autocorr.LOCAL_STATISTICS
    if fmt == "svg" and not is_local:
        raise click.UsageError("svg output is only available for local statistics")

    polygons = None
    if _is_geojson(input_path):
        probe = read_geojson(input_path, truth_prop=truth, estimate_prop=estimate, group_prop=group)
        if hasattr(probe, "n_rows"):
            data = probe
        else:
            polygons, data = read_polygon_geojson(
                input_path, truth_prop=truth, estimate_prop=estimate, group_prop=group
            )
    else:
        data = _load_point_dataset(input_path, truth, estimate, group, x_col, y_col)

    if weights_path is not None:
        wt = read_weights_csv(weights_path)
    elif polygons is not None:
        if data.group is not None:
            raise click.UsageError("grouped polygon input is not supported; drop --group")
        wt = build_weights(build_neighbors_polygons(polygons))
    else:
        wt = None  # build automatically (per group when grouped)

    if weights_out is not None:
        if data.group is not None:
            raise click.UsageError("--weights-out needs ungrouped data (one matrix)")
        used = wt if wt is not None else autocorr.build_default_weights(data)
        write_weights_csv(used, weights_out)
        wt = used

    rows = autocorr.STATISTICS[stat_name](data, wt=wt)

    if fmt == "svg":
        values = [r.estimate for r in rows]
        if polygons is not None:
            _emit(svg.polygon_choropleth(polygons, values), output)
        else:
            _emit(svg.point_choropleth(data.coords(), values), output)
        return
    _emit(_rows_to_csv(rows) if fmt == "csv" else _rows_to_json(rows), output)


def _grid_args_text(grid_args: dict) -> str:
    return ";".join(f"{k}={format_number(v)}" for k, v in grid_args.items())


def _multiscale_rows_csv(rows) -> str:
    grouped = any(r.group is not None for r in rows)
    lines = ["metric,estimator,estimate,grid_args" + (",group" if grouped else "")]
    for r in rows:
        line = f"{r.metric},{r.estimator},{format_number(r.estimate)},{_grid_args_text(r.grid_args)}"
        if grouped:
            line += f",{r.group if r.group is not None else ''}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def _multiscale_rows_json(rows) -> str:
    payload = []
    for r in rows:
        item = {
            "metric": r.metric,
            "estimator": r.estimator,
            "estimate": _nan_to_none(r.estimate),
            "grid_args": r.grid_args,
            "notes": list(r.notes),
        }
        if r.group is not None:
            item["group"] = r.group
        payload.append(item)
    return json.dumps(payload, indent=2) + "\n"


@main.command("multiscale")
@click.option("--input", "input_path", default=None, help="Point CSV/GeoJSON; omit for raster mode.")
@click.option("--truth", required=True, help="Column name, or ASCII-grid path in raster mode.")
@click.option("--estimate", required=True, help="Column name, or ASCII-grid path in raster mode.")
@click.option("--group", default=None)
@click.option("--metric", "metric_names", multiple=True, help="Metric name; repeatable. Defaults to rmse and mae.")
@click.option("--n", "n_values", multiple=True, type=int, help="Cells per axis; repeatable, one grid each.")
@click.option("--cellsize", default=None, type=float, help="Cell edge length for one generated grid.")
@click.option("--grids", "grids_path", default=None, help="GeoJSON FeatureCollection of polygons to use as the grid.")
@click.option("--grid-out", "grid_out", default=None, help="Directory for per-grid GeoJSON dumps.")
@click.option("--x-col", default="x", show_default=True)
@click.option("--y-col", default="y", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "svg"]), default="csv", show_default=True)
@click.option("--output", default=None)
@_handle_errors
def cmd_multiscale(input_path, truth, estimate, group, metric_names, n_values, cellsize, grids_path, grid_out, x_col, y_col, fmt, output):
    """Metrics on observations aggregated to one or more grids."""
    for name in metric_names:
        if name not in agreement.VEC_METRICS:
            raise click.UsageError(f"unknown metric {name!r}")
    metrics = list(metric_names) or None

    specs = [GridSpec(n=v) for v in n_values]
    if cellsize is not None:
        specs.append(GridSpec(cellsize=cellsize))
    if grids_path is not None and specs:
        raise click.UsageError("--grids cannot be combined with --n/--cellsize")
    if grids_path is None and not specs:
        raise click.UsageError("specify grids via --n, --cellsize, or --grids")

    grids = None
    if grids_path is not None:
        polygons = read_geojson(grids_path)
        if hasattr(polygons, "n_rows"):
            raise click.UsageError(f"{grids_path}: expected Polygon features")
        grids = [polygons]

    if input_path is None:
        if group is not None:
            raise click.UsageError("raster mode has no --group support")
        truth_raster = read_ascii_grid(truth)
        estimate_raster = read_ascii_grid(estimate)
        per_grid = [
            multiscale.multi_scale_raster(truth_raster, estimate_raster, metrics=metrics, specs=[spec])
            for spec in specs
        ] if grids is None else [
            multiscale.multi_scale_raster(truth_raster, estimate_raster, metrics=metrics, grids=grids)
        ]
    else:
        data = _load_point_dataset(input_path, truth, estimate, group, x_col, y_col)
        per_grid = [
            multiscale.multi_scale(data, metrics=metrics, specs=[spec]) for spec in specs
        ] if grids is None else [
            multiscale.multi_scale(data, metrics=metrics, grids=grids)
        ]

    rows = [row for grid_rows in per_grid for row in grid_rows]

    if grid_out is not None:
        out_dir = Path(grid_out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for gi, grid_rows in enumerate(per_grid):
            seen = set()
            for row in grid_rows:
                if row.group in seen:
                    continue
                seen.add(row.group)
                suffix = f"_{row.group}" if row.group is not None else ""
                doc = grid_to_geojson(row.grid)
                (out_dir / f"grid_{gi}{suffix}.geojson").write_text(
                    json.dumps(doc, indent=2) + "\n", encoding="utf-8"
                )

    if fmt == "svg":
        if len(per_grid) != 1 or any(r.group is not None for r in rows):
            raise click.UsageError("svg output supports exactly one grid and ungrouped data")
        _emit(svg.grid_choropleth(per_grid[0][0].grid), output)
        return
    _emit(_multiscale_rows_csv(rows) if fmt == "csv" else _multiscale_rows_json(rows), output)


@main.group("aoa")
def cmd_aoa():
    """Fit and apply applicability-domain models."""


@cmd_aoa.command("fit")
@click.option("--input", "input_path", required=True, help="Training CSV (predictor columns per --importance).")
@click.option("--importance", "importance_path", required=True, help="CSV with columns term,estimate.")
@click.option("--testing", "testing_path", default=None, help="Optional test CSV; reports its DI distribution.")
@click.option("--folds", "folds_path", default=None, help="CSV with columns row_index,fold_id for the cross-validation variant.")
@click.option("--output", required=True, help="Path for the fitted model JSON.")
@_handle_errors
def aoa_fit(input_path, importance_path, testing_path, folds_path, output):
    """Fit an applicability-domain model; prints p and the threshold."""
    importance = read_importance_csv(importance_path)
    names = [term for term, _ in importance]
    table = read_columns_csv(input_path, names)
    if folds_path is not None:
        if testing_path is not None:
            raise click.UsageError("--testing and --folds are mutually exclusive")
        n_rows = len(next(iter(table.values())))
        folds = read_folds_csv(folds_path, n_rows)
        model = fit_aoa_cv(table, folds, importance)
    else:
        testing = read_columns_csv(testing_path, names) if testing_path else None
        model = fit_aoa(table, importance, testing=testing)
    save_aoa_model(model, output)
    click.echo(model.summary())


@cmd_aoa.command("predict")
@click.option("--model", "model_path", required=True, help="Fitted model JSON.")
@click.option("--input", "input_path", required=True, help="CSV with the model's predictor columns.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--output", default=None)
@_handle_errors
def aoa_predict(model_path, input_path, fmt, output):
    """Score new observations: one di,aoa row per input row."""
    model = load_aoa_model(model_path)
    table = read_columns_csv(input_path, list(model.predictor_names))
    prediction = predict_aoa(model, table)
    if fmt == "csv":
        lines = ["di,aoa"]
        for di, aoa in prediction.rows():
            aoa_text = "" if aoa is None else ("true" if aoa else "false")
            lines.append(f"{format_number(di)},{aoa_text}")
        _emit("\n".join(lines) + "\n", output)
    else:
        payload = [
            {"di": _nan_to_none(di), "aoa": aoa} for di, aoa in prediction.rows()
        ]
        _emit(json.dumps(payload, indent=2) + "\n", output)


if __name__ == "__main__":
    main()
