import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geowise.data import Dataset, PointGeometry, PolygonGeometry


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def unit_square(x0, y0, size=1.0):
    return PolygonGeometry(
        rings=(
            np.array(
                [
                    [x0, y0],
                    [x0 + size, y0],
                    [x0 + size, y0 + size],
                    [x0, y0 + size],
                    [x0, y0],
                ],
                dtype=float,
            ),
        )
    )


def point_dataset(coords, truth, estimate, group=None, extras=None):
    geometry = tuple(PointGeometry(float(x), float(y)) for x, y in coords)
    return Dataset(
        truth=truth,
        estimate=estimate,
        geometry=geometry,
        group=group,
        extras=extras or {},
    )


def random_series(rng, n, nan_rate=0.0):
    t = rng.normal(size=n) * rng.uniform(0.5, 3.0) + rng.uniform(-5, 5)
    e = t + rng.normal(size=n) * rng.uniform(0.1, 2.0)
    if nan_rate:
        t[rng.random(n) < nan_rate] = np.nan
        e[rng.random(n) < nan_rate] = np.nan
    return t, e
