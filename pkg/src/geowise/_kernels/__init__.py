"""Distance kernels with a compiled fast path and a NumPy fallback.

The compiled extension (``geowise._kernels._core``) is selected at import
time when available; otherwise the NumPy implementations in ``_py`` are
used. Setting ``GEOWISE_KERNELS=python`` forces the fallback, and
``GEOWISE_KERNELS=compiled`` makes a missing extension a hard error
instead of a silent downgrade.

Both backends implement the same contracts: exact brute-force scans in
double precision, squared-distance comparisons, and k-NN ties broken by
lower index. Inputs must be finite; callers are responsible for
filtering missing rows first.
"""

import os

_requested = os.environ.get("GEOWISE_KERNELS", "").strip().lower()

if _requested == "python":
    from geowise._kernels import _py as _impl

    BACKEND = "python"
else:
    try:
        from geowise._kernels import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from geowise._kernels import _py as _impl

        BACKEND = "python"

knn_indices = _impl.knn_indices
pairwise_mean_distance = _impl.pairwise_mean_distance
nearest_other_distance = _impl.nearest_other_distance
nearest_cross_distance = _impl.nearest_cross_distance

__all__ = [
    "BACKEND",
    "knn_indices",
    "pairwise_mean_distance",
    "nearest_other_distance",
    "nearest_cross_distance",
]
