import subprocess
import sys

import numpy as np
import pytest

import oracles
from geowise import _kernels
from geowise._kernels import _py

try:
    from geowise._kernels import _core
except ImportError:
    _core = None

BACKENDS = [_py] + ([_core] if _core is not None else [])


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
class TestBackend:
    def test_knn_matches_brute_force(self, impl, rng):
        pts = rng.uniform(-5, 5, size=(150, 3))
        got = impl.knn_indices(pts, 4)
        assert [row.tolist() for row in got] == [r for r in oracles.knn(pts, 4)]

    def test_knn_tie_break_lower_index(self, impl):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        got = impl.knn_indices(pts, 3)
        assert got[0].tolist() == [1, 2, 3]

    def test_knn_k_bounds(self, impl):
        pts = np.zeros((3, 2))
        with pytest.raises(ValueError):
            impl.knn_indices(pts, 3)
        with pytest.raises(ValueError):
            impl.knn_indices(pts, 0)

    def test_pairwise_mean(self, impl):
        X = np.array([[-1.0], [0.0], [1.0]])
        assert impl.pairwise_mean_distance(X) == 4.0 / 3.0

    def test_pairwise_mean_random(self, impl, rng):
        X = rng.normal(size=(40, 3))
        n = len(X)
        ref = np.mean(
            [np.sqrt(((X[i] - X[j]) ** 2).sum()) for i in range(n) for j in range(i + 1, n)]
        )
        assert impl.pairwise_mean_distance(X) == pytest.approx(ref, rel=1e-12)

    def test_nearest_other(self, impl, rng):
        X = rng.normal(size=(60, 2))
        got = impl.nearest_other_distance(X)
        n = len(X)
        ref = [
            min(np.sqrt(((X[i] - X[j]) ** 2).sum()) for j in range(n) if j != i)
            for i in range(n)
        ]
        np.testing.assert_allclose(got, ref, rtol=1e-12)

    def test_nearest_cross(self, impl, rng):
        Q = rng.normal(size=(20, 2))
        X = rng.normal(size=(50, 2))
        got = impl.nearest_cross_distance(Q, X)
        ref = [min(np.sqrt(((q - x) ** 2).sum()) for x in X) for q in Q]
        np.testing.assert_allclose(got, ref, rtol=1e-12)

    def test_read_only_input_accepted(self, impl):
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        X.flags.writeable = False
        assert impl.nearest_other_distance(X).shape == (2,)


@pytest.mark.skipif(_core is None, reason="compiled extension not built")
class TestParity:
    def test_identical_outputs(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 120))
            p = int(rng.integers(1, 5))
            X = rng.normal(size=(n, p)) * rng.uniform(0.1, 10)
            np.testing.assert_array_equal(
                _py.nearest_other_distance(X), _core.nearest_other_distance(X)
            )
            assert _py.pairwise_mean_distance(X) == pytest.approx(
                _core.pairwise_mean_distance(X), rel=1e-13
            )
            if n > 3:
                np.testing.assert_array_equal(
                    _py.knn_indices(X, 3), _core.knn_indices(X, 3)
                )

    def test_knn_ties_identical(self, rng):
        # lattice points force many exact distance ties
        pts = rng.integers(0, 5, size=(80, 2)).astype(float)
        np.testing.assert_array_equal(_py.knn_indices(pts, 4), _core.knn_indices(pts, 4))


class TestSelection:
    def test_forced_python_backend(self):
        code = (
            "import geowise; print(geowise.KERNEL_BACKEND)"
        )
        out = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin", "GEOWISE_KERNELS": "python"},
            cwd="/",
        )
        assert out.returncode == 0, out.stderr
        assert out.stdout.strip() == "python"

    def test_default_prefers_compiled_when_available(self):
        if _core is not None:
            assert _kernels.BACKEND == "compiled"
        else:
            assert _kernels.BACKEND == "python"
