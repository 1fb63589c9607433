import numpy as np
import pytest

import oracles
from conftest import point_dataset, unit_square
from geowise import autocorr as ac
from geowise.data import Dataset
from geowise.errors import UndefinedMetricError
from geowise.weights import (
    NeighborList,
    build_neighbors_points,
    build_neighbors_polygons,
    build_weights,
)


@pytest.fixture
def checkerboard():
    """2x2 rook grid with alternating residuals: maximal dispersion."""
    rook = NeighborList(neighbors=([1, 2], [0, 3], [0, 3], [1, 2]), symmetric_hint=True)
    wm = build_weights(rook)
    truth = np.array([1.0, -1.0, -1.0, 1.0])
    estimate = np.zeros(4)
    return truth, estimate, wm


def random_case(rng, n, k=2):
    pts = rng.uniform(0, 10, size=(n, 2))
    wm = build_weights(build_neighbors_points(pts, k=k))
    truth = rng.normal(size=n)
    estimate = truth * rng.uniform(0.5, 1.5) + rng.normal(size=n) * 0.3
    return truth, estimate, wm


class TestGlobalMoran:
    def test_checkerboard_is_minus_one(self, checkerboard):
        t, e, wm = checkerboard
        assert ac.global_moran_i_vec(t, e, wm) == -1.0

    def test_constant_residuals_error(self, checkerboard):
        _, _, wm = checkerboard
        with pytest.raises(UndefinedMetricError):
            ac.global_moran_i_vec(np.ones(4), np.zeros(4), wm)

    def test_matches_direct_summation(self, rng):
        for _ in range(20):
            t, e, wm = random_case(rng, int(rng.integers(5, 60)))
            W = oracles.dense_weights(wm)
            assert ac.global_moran_i_vec(t, e, wm) == pytest.approx(
                oracles.global_moran(t - e, W), rel=1e-10
            )


class TestLocalMoran:
    def test_row_count(self, rng):
        t, e, wm = random_case(rng, 37)
        assert ac.local_moran_i_vec(t, e, wm).shape == (37,)

    def test_checkerboard_all_minus_one(self, checkerboard):
        t, e, wm = checkerboard
        np.testing.assert_array_equal(ac.local_moran_i_vec(t, e, wm), -1.0)

    def test_reconstructs_global(self, rng):
        # I = sum(I_i) / W for any weights
        for _ in range(10):
            t, e, wm = random_case(rng, int(rng.integers(5, 80)))
            local = ac.local_moran_i_vec(t, e, wm)
            total = ac.global_moran_i_vec(t, e, wm)
            assert local.sum() / wm.total == pytest.approx(total, rel=1e-10)

    def test_matches_direct_summation(self, rng):
        t, e, wm = random_case(rng, 50)
        W = oracles.dense_weights(wm)
        np.testing.assert_allclose(
            ac.local_moran_i_vec(t, e, wm), oracles.local_moran(t - e, W), rtol=1e-10
        )


class TestGlobalGeary:
    def test_checkerboard_value(self, checkerboard):
        t, e, wm = checkerboard
        assert ac.global_geary_c_vec(t, e, wm) == pytest.approx(1.5, abs=1e-12)

    def test_constant_residuals_error(self, checkerboard):
        _, _, wm = checkerboard
        with pytest.raises(UndefinedMetricError):
            ac.global_geary_c_vec(np.full(4, 2.0), np.zeros(4), wm)

    def test_matches_direct_summation(self, rng):
        for _ in range(20):
            t, e, wm = random_case(rng, int(rng.integers(5, 60)))
            W = oracles.dense_weights(wm)
            assert ac.global_geary_c_vec(t, e, wm) == pytest.approx(
                oracles.global_geary(t - e, W), rel=1e-10
            )

    def test_non_negative(self, rng):
        for _ in range(50):
            t, e, wm = random_case(rng, int(rng.integers(4, 40)))
            assert ac.global_geary_c_vec(t, e, wm) >= 0.0


class TestLocalGeary:
    def test_constant_residuals_all_zero(self, checkerboard):
        _, _, wm = checkerboard
        np.testing.assert_array_equal(
            ac.local_geary_c_vec(np.ones(4), np.zeros(4), wm), 0.0
        )

    def test_checkerboard_all_four(self, checkerboard):
        t, e, wm = checkerboard
        np.testing.assert_array_equal(ac.local_geary_c_vec(t, e, wm), 4.0)

    def test_matches_direct_summation(self, rng):
        t, e, wm = random_case(rng, 60)
        W = oracles.dense_weights(wm)
        np.testing.assert_allclose(
            ac.local_geary_c_vec(t, e, wm), oracles.local_geary(t - e, W), rtol=1e-10
        )


class TestGetisOrd:
    @pytest.fixture
    def hotspot_line(self):
        # uneven spacing puts the hotspot in index 3's neighborhood
        pts = np.array([[0.0, 0], [1, 0], [2, 0], [3, 0], [3.5, 0]])
        wm = build_weights(build_neighbors_points(pts, k=1))
        truth = np.array([0.0, 0, 0, 0, 10.0])
        estimate = np.zeros(5)
        return truth, estimate, wm

    def test_constant_residuals_nan_with_note(self, checkerboard):
        _, _, wm = checkerboard
        with pytest.warns(RuntimeWarning, match="zero variance"):
            z = ac.local_getis_ord_g_vec(np.ones(4), np.zeros(4), wm)
        assert np.isnan(z).all()

    def test_hotspot_neighbor_positive(self, hotspot_line):
        t, e, wm = hotspot_line
        with pytest.warns(RuntimeWarning):
            z = ac.local_getis_ord_g_vec(t, e, wm)
        assert z[3] == pytest.approx(2.0, rel=1e-10)
        W = oracles.dense_weights(wm)
        ref = oracles.local_getis(t - e, W, star=False)
        np.testing.assert_allclose(z[:4], ref[:4], rtol=1e-10)
        # the hotspot itself sees zero remaining variance
        assert np.isnan(z[4]) and np.isnan(ref[4])

    def test_star_differs_and_matches_oracle(self, rng):
        t, e, wm = random_case(rng, 40)
        W = oracles.dense_weights(wm)
        plain = ac.local_getis_ord_g_vec(t, e, wm)
        star = ac.local_getis_ord_g_vec(t, e, wm, star=True)
        np.testing.assert_allclose(plain, oracles.local_getis(t - e, W), rtol=1e-10)
        np.testing.assert_allclose(star, oracles.local_getis(t - e, W, star=True), rtol=1e-10)
        assert not np.allclose(plain, star)


class TestScaleInvariance:
    def test_ratios_unchanged_local_geary_scales(self, rng):
        t, e, wm = random_case(rng, 45)
        c = 7.5
        assert ac.global_moran_i_vec(t * c, e * c, wm) == pytest.approx(
            ac.global_moran_i_vec(t, e, wm), rel=1e-10
        )
        assert ac.global_geary_c_vec(t * c, e * c, wm) == pytest.approx(
            ac.global_geary_c_vec(t, e, wm), rel=1e-10
        )
        np.testing.assert_allclose(
            ac.local_moran_i_vec(t * c, e * c, wm), ac.local_moran_i_vec(t, e, wm), rtol=1e-10
        )
        np.testing.assert_allclose(
            ac.local_getis_ord_g_vec(t * c, e * c, wm),
            ac.local_getis_ord_g_vec(t, e, wm),
            rtol=1e-10,
        )
        np.testing.assert_allclose(
            ac.local_geary_c_vec(t * c, e * c, wm),
            ac.local_geary_c_vec(t, e, wm) * c * c,
            rtol=1e-10,
        )


class TestMissingResiduals:
    def test_global_returns_nan(self, checkerboard):
        t, e, wm = checkerboard
        t = t.copy()
        t[0] = np.nan
        assert np.isnan(ac.global_moran_i_vec(t, e, wm))
        assert np.isnan(ac.global_geary_c_vec(t, e, wm))

    def test_local_stays_size_stable(self, checkerboard):
        t, e, wm = checkerboard
        t = t.copy()
        t[1] = np.nan
        local = ac.local_moran_i_vec(t, e, wm)
        assert local.shape == (4,)
        z = ac.local_getis_ord_g_vec(t, e, wm)
        assert z.shape == (4,)


class TestTableForms:
    def test_auto_weights_match_explicit(self, rng):
        pts = rng.uniform(0, 5, size=(30, 2))
        t = rng.normal(size=30)
        e = t + rng.normal(size=30) * 0.2
        data = point_dataset(pts, t, e)
        wm = build_weights(build_neighbors_points(pts, k=1))
        auto = ac.global_moran_i(data)
        explicit = ac.global_moran_i(data, wt=wm)
        assert auto[0].estimate == explicit[0].estimate
        assert auto[0].metric == "global_moran_i"
        assert auto[0].estimator == "standard"

    def test_wt_callable(self, rng):
        pts = rng.uniform(0, 5, size=(20, 2))
        t = rng.normal(size=20)
        data = point_dataset(pts, t, t + rng.normal(size=20))
        rows = ac.global_geary_c(data, wt=ac.build_default_weights)
        assert len(rows) == 1

    def test_local_row_counts(self, rng):
        pts = rng.uniform(0, 5, size=(25, 2))
        t = rng.normal(size=25)
        data = point_dataset(pts, t, t + rng.normal(size=25))
        for name in ("local_moran_i", "local_geary_c", "local_getis_ord_g", "local_getis_ord_gstar"):
            rows = ac.STATISTICS[name](data)
            assert len(rows) == 25
            assert all(r.metric == name for r in rows)

    def test_grouped_global(self, rng):
        pts = rng.uniform(0, 5, size=(40, 2))
        t = rng.normal(size=40)
        group = tuple("ab"[i % 2] for i in range(40))
        data = point_dataset(pts, t, t + rng.normal(size=40), group=group)
        rows = ac.global_moran_i(data)
        assert [r.group for r in rows] == ["a", "b"]

    def test_grouped_local_input_order(self, rng):
        pts = rng.uniform(0, 5, size=(30, 2))
        t = rng.normal(size=30)
        e = t + rng.normal(size=30)
        group = tuple("ab"[i % 2] for i in range(30))
        data = point_dataset(pts, t, e, group=group)
        rows = ac.local_moran_i(data)
        assert len(rows) == 30
        assert [r.group for r in rows] == list(group)
        # per-group values land at their original positions
        mask = np.array([g == "a" for g in group])
        sub = data.subset(mask)
        expected = ac.local_moran_i_vec(sub.truth, sub.estimate, ac.build_default_weights(sub))
        got = np.array([rows[i].estimate for i in np.flatnonzero(mask)])
        np.testing.assert_array_equal(got, expected)

    def test_grouped_rejects_fixed_matrix(self, rng):
        pts = rng.uniform(0, 5, size=(20, 2))
        t = rng.normal(size=20)
        data = point_dataset(pts, t, t, group=tuple("ab"[i % 2] for i in range(20)))
        wm = build_weights(build_neighbors_points(pts, k=1))
        with pytest.raises(ValueError, match="grouped"):
            ac.global_moran_i(data, wt=wm)

    def test_vec_requires_matrix(self):
        with pytest.raises(TypeError):
            ac.global_moran_i_vec([1.0, 2.0, 3.0], [1.0, 2.0, 2.0], None)

    def test_polygon_weights_route(self):
        polys = [unit_square(0, 0), unit_square(1, 0), unit_square(2, 0)]
        wm = build_weights(build_neighbors_polygons(polys))
        data = Dataset(truth=[1.0, 2.0, 4.0], estimate=[0.0, 0.0, 0.0])
        rows = ac.global_geary_c(data, wt=wm)
        W = oracles.dense_weights(wm)
        assert rows[0].estimate == pytest.approx(
            oracles.global_geary(np.array([1.0, 2.0, 4.0]), W), rel=1e-12
        )
