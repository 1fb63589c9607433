import numpy as np
import pytest

import oracles
from conftest import unit_square
from geowise.errors import NeighborError
from geowise.weights import (
    NeighborList,
    WeightsStyle,
    build_neighbors_points,
    build_neighbors_polygons,
    build_weights,
    read_weights_csv,
    write_weights_csv,
)


class TestPointNeighbors:
    def test_hand_distances(self):
        nl = build_neighbors_points(np.array([[0.0, 0], [1, 0], [5, 0]]), k=1)
        assert [r.tolist() for r in nl.neighbors] == [[1], [0], [1]]

    def test_two_points(self):
        nl = build_neighbors_points(np.array([[0.0, 0], [3, 4]]), k=1)
        assert [r.tolist() for r in nl.neighbors] == [[1], [0]]

    def test_matches_brute_force(self, rng):
        pts = rng.uniform(-10, 10, size=(100, 2))
        nl = build_neighbors_points(pts, k=3)
        ref = oracles.knn(pts, 3)
        assert [r.tolist() for r in nl.neighbors] == ref

    def test_duplicate_points_tie_break(self):
        pts = np.array([[0.0, 0], [0, 0], [0, 0], [9, 9]])
        nl = build_neighbors_points(pts, k=2)
        assert nl.neighbors[0].tolist() == [1, 2]
        assert nl.neighbors[2].tolist() == [0, 1]

    def test_too_few_points(self):
        with pytest.raises(NeighborError):
            build_neighbors_points(np.array([[0.0, 0], [1, 1]]), k=2)

    def test_brute_force_sweep(self, rng):
        for n in (2, 3, 7, 40, 500):
            pts = rng.integers(0, 12, size=(n, 2)).astype(float)  # ties likely
            nl = build_neighbors_points(pts, k=1)
            assert [r.tolist() for r in nl.neighbors] == oracles.knn(pts, 1)


class TestPolygonNeighbors:
    def test_two_by_two_block_is_fully_connected(self):
        block = [unit_square(0, 0), unit_square(1, 0), unit_square(0, 1), unit_square(1, 1)]
        nl = build_neighbors_polygons(block)
        # corner touch counts, so each square neighbors the other three
        assert [r.tolist() for r in nl.neighbors] == [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]
        assert nl.symmetric_hint

    def test_disjoint_squares(self):
        apart = [unit_square(0, 0), unit_square(10, 0)]
        nl = build_neighbors_polygons(apart)
        assert [r.tolist() for r in nl.neighbors] == [[], []]

    def test_strip(self):
        strip = [unit_square(0, 0), unit_square(1, 0), unit_square(2, 0)]
        nl = build_neighbors_polygons(strip)
        assert [r.tolist() for r in nl.neighbors] == [[1], [0, 2], [1]]

    def test_symmetry_random_blocks(self, rng):
        polys = [
            unit_square(x, y)
            for x, y in {tuple(v) for v in rng.integers(0, 6, size=(30, 2))}
        ]
        nl = build_neighbors_polygons(polys)
        for i, row in enumerate(nl.neighbors):
            for j in row:
                assert i in nl.neighbors[j]


class TestNeighborList:
    def test_rejects_self_neighbor(self):
        with pytest.raises(NeighborError):
            NeighborList(neighbors=([0], [0]))

    def test_rejects_out_of_range(self):
        with pytest.raises(NeighborError):
            NeighborList(neighbors=([5], [0]))


class TestBuildWeights:
    def test_mutual_pair(self):
        wm = build_weights(NeighborList(neighbors=([1], [0])))
        assert wm.row(0)[1].tolist() == [1.0]
        assert wm.total == 2.0

    def test_row_standardized_quarter(self):
        nl = NeighborList(neighbors=([1, 2, 3, 4], [0], [0], [0], [0]))
        wm = build_weights(nl)
        assert wm.row(0)[1].tolist() == [0.25] * 4

    def test_rows_sum_to_one(self, rng):
        pts = rng.uniform(0, 1, size=(80, 2))
        wm = build_weights(build_neighbors_points(pts, k=4))
        sums = wm.row_sums()
        np.testing.assert_allclose(sums, 1.0, rtol=0, atol=1e-12)

    def test_total_equals_region_count(self):
        # an 85-region synthetic map mirrors the row-standardized total
        polys = [unit_square(x, y) for y in range(5) for x in range(17)]
        wm = build_weights(build_neighbors_polygons(polys))
        assert wm.n == 85
        assert wm.total == pytest.approx(85.0, abs=1e-9)
        assert wm.style is WeightsStyle.ROW_STANDARDIZED

    def test_zero_neighbor_errors_by_default(self):
        lonely = [unit_square(0, 0), unit_square(5, 5), unit_square(6, 5)]
        nl = build_neighbors_polygons(lonely)
        with pytest.raises(NeighborError, match=r"\[0\]"):
            build_weights(nl)

    def test_allow_empty_excludes_from_total(self):
        lonely = [unit_square(0, 0), unit_square(5, 5), unit_square(6, 5)]
        wm = build_weights(build_neighbors_polygons(lonely), allow_empty=True)
        assert wm.total == 2.0
        assert wm.row(0)[0].size == 0

    def test_binary_style(self):
        nl = NeighborList(neighbors=([1, 2], [0], [0]))
        wm = build_weights(nl, style=WeightsStyle.BINARY)
        assert wm.weights.tolist() == [1.0, 1.0, 1.0, 1.0]
        assert wm.total == 4.0


class TestWeightsCsv:
    def test_round_trip(self, tmp_path, rng):
        # within-row order normalizes to ascending index; the pattern,
        # the weights, and every lag computation survive exactly
        pts = rng.uniform(0, 1, size=(20, 2))
        wm = build_weights(build_neighbors_points(pts, k=3))
        path = tmp_path / "w.csv"
        write_weights_csv(wm, path)
        back = read_weights_csv(path)
        assert back.n == wm.n
        np.testing.assert_array_equal(back.indptr, wm.indptr)
        for i in range(wm.n):
            original = sorted(zip(wm.row(i)[0], wm.row(i)[1]))
            restored = sorted(zip(back.row(i)[0], back.row(i)[1]))
            assert original == restored
        values = rng.normal(size=20)
        np.testing.assert_array_equal(back.lag(values), wm.lag(values))
        assert back.style is WeightsStyle.ROW_STANDARDIZED

    def test_binary_detection(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("i,j,w\n0,1,1\n1,0,1\n", encoding="utf-8")
        assert read_weights_csv(path).style is WeightsStyle.BINARY

    def test_custom_detection(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("i,j,w\n0,1,0.7\n1,0,0.2\n", encoding="utf-8")
        assert read_weights_csv(path).style is WeightsStyle.CUSTOM

    def test_bad_header(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("a,b,c\n0,1,1\n", encoding="utf-8")
        from geowise.errors import IngestError

        with pytest.raises(IngestError):
            read_weights_csv(path)
