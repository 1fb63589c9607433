"""geowise: assessment tools for models fit to spatial data.

Agreement metrics and their systematic/unsystematic decompositions,
spatial autocorrelation of residuals, multi-scale aggregated
assessment, and applicability-domain computation, over plain NumPy
arrays and a small set of frozen data types.
"""

from geowise._kernels import BACKEND as KERNEL_BACKEND
from geowise.agreement import (
    DecompositionResult,
    GmfrFit,
    MetricSet,
    SpdDecomposition,
    TABLE_METRICS,
    VEC_METRICS,
    agreement_coefficient,
    agreement_coefficient_vec,
    gmfr_fit,
    mae,
    mae_vec,
    metric_set,
    mse_decomposition_vec,
    rmse,
    rmse_vec,
    spd_decomposition_vec,
    willmott_d,
    willmott_d1,
    willmott_d1_vec,
    willmott_d_vec,
    willmott_dr,
    willmott_dr_vec,
)
from geowise.applicability import (
    AoaModel,
    AoaPrediction,
    FoldSet,
    fit_aoa,
    fit_aoa_cv,
    load_aoa_model,
    predict_aoa,
    save_aoa_model,
)
from geowise.autocorr import (
    STATISTICS,
    global_geary_c,
    global_geary_c_vec,
    global_moran_i,
    global_moran_i_vec,
    local_geary_c,
    local_geary_c_vec,
    local_getis_ord_g,
    local_getis_ord_g_vec,
    local_getis_ord_gstar,
    local_moran_i,
    local_moran_i_vec,
)
from geowise.data import (
    Dataset,
    MetricResult,
    PointGeometry,
    PolygonGeometry,
    RasterGrid,
    read_ascii_grid,
    read_geojson,
    read_points_csv,
    read_polygon_geojson,
    write_ascii_grid,
    write_points_csv,
)
from geowise.errors import (
    DegenerateFitError,
    EmptyInputError,
    GeometryError,
    GeowiseError,
    IngestError,
    MissingColumnError,
    NeighborError,
    UndefinedMetricError,
)
from geowise.multiscale import (
    GridCell,
    GridSpec,
    MultiScaleRow,
    aggregate_points,
    grid_to_geojson,
    make_grid,
    multi_scale,
    multi_scale_raster,
)
from geowise.weights import (
    NeighborList,
    WeightsMatrix,
    WeightsStyle,
    build_neighbors_points,
    build_neighbors_polygons,
    build_weights,
    read_weights_csv,
    write_weights_csv,
)

__version__ = "0.1.0"
