import json
import math

import numpy as np
import pytest

import oracles
from geowise.applicability import (
    AoaModel,
    FoldSet,
    fit_aoa,
    fit_aoa_cv,
    load_aoa_model,
    model_from_json,
    model_to_json,
    predict_aoa,
    read_folds_csv,
    read_importance_csv,
    save_aoa_model,
)
from geowise.errors import DegenerateFitError, EmptyInputError, MissingColumnError


ONE_D = {"a": [0.0, 1.0, 2.0]}
ONE_D_IMPORTANCE = [("a", 1.0)]


def random_table(rng, n, p):
    return {f"v{i}": rng.normal(loc=rng.uniform(-2, 2), scale=rng.uniform(0.5, 3), size=n) for i in range(p)}


class TestFitTrainTest:
    def test_one_dimensional_fixture(self):
        model = fit_aoa(ONE_D, ONE_D_IMPORTANCE)
        assert model.centers.tolist() == [1.0]
        assert model.scales.tolist() == [1.0]
        assert model.d_bar == 4.0 / 3.0
        np.testing.assert_array_equal(model.training_di, 0.75)
        assert model.threshold == 0.75
        assert model.p == 1

    def test_testing_di_zero_for_duplicates(self):
        model = fit_aoa(ONE_D, ONE_D_IMPORTANCE, testing=ONE_D)
        np.testing.assert_array_equal(model.testing_di, 0.0)
        # and the threshold is the same as fitting without testing data
        assert model.threshold == fit_aoa(ONE_D, ONE_D_IMPORTANCE).threshold

    def test_matches_exhaustive_oracle(self, rng):
        for _ in range(20):
            n = int(rng.integers(5, 120))
            p = int(rng.integers(1, 5))
            table = random_table(rng, n, p)
            weights = rng.uniform(0.1, 4, size=p)
            importance = list(zip(table.keys(), weights))
            model = fit_aoa(table, importance)
            X = np.column_stack(list(table.values()))
            d_bar, di, threshold = oracles.aoa_train_test(X, weights)
            assert model.d_bar == pytest.approx(d_bar, rel=1e-10)
            np.testing.assert_allclose(model.training_di, di, rtol=1e-10)
            assert model.threshold == pytest.approx(threshold, rel=1e-10)

    def test_negative_importance_rejected(self):
        with pytest.raises(ValueError, match="negative importance"):
            fit_aoa(ONE_D, [("a", -1.0)])

    def test_unknown_term_rejected(self):
        with pytest.raises(MissingColumnError):
            fit_aoa(ONE_D, [("zz", 1.0)])

    def test_constant_predictor_rejected(self):
        with pytest.raises(DegenerateFitError):
            fit_aoa({"a": [1.0, 1.0, 1.0]}, ONE_D_IMPORTANCE)

    def test_too_few_rows(self):
        with pytest.raises(EmptyInputError):
            fit_aoa({"a": [1.0]}, ONE_D_IMPORTANCE)

    def test_nan_training_rejected(self):
        with pytest.raises(ValueError, match="missing values"):
            fit_aoa({"a": [0.0, np.nan, 2.0]}, ONE_D_IMPORTANCE)


class TestFitCv:
    def test_identical_folds_duplicate_pool_same_threshold(self, rng):
        # repeating one split doubles the pooled DI sample; with a
        # five-point assessment set the quantile positions land inside
        # the duplicate pairs, so the threshold is exactly the single
        # split's threshold
        table = random_table(rng, 10, 2)
        importance = [("v0", 1.0), ("v1", 2.0)]
        fold = (np.arange(5), np.arange(5, 10))
        model = fit_aoa_cv(table, [fold, fold], importance)
        assert model.training_di.size == 10
        single = model.training_di[:5]
        np.testing.assert_array_equal(model.training_di[5:], single)
        assert model.threshold == oracles.aoa_quantile_threshold(single)

    def test_assessment_duplicate_of_analysis_scores_zero(self):
        table = {"a": [0.0, 1.0, 2.0, 0.0, 5.0, 7.0]}
        folds = [(np.array([0, 1, 2]), np.array([3, 4, 5])), (np.array([3, 4, 5]), np.array([0, 1, 2]))]
        model = fit_aoa_cv(table, folds, ONE_D_IMPORTANCE)
        # row 3 duplicates analysis row 0 in the first fold
        assert model.training_di[0] == 0.0

    def test_matches_fold_oracle(self, rng):
        n, p = 60, 3
        table = random_table(rng, n, p)
        weights = rng.uniform(0.5, 2, size=p)
        importance = list(zip(table.keys(), weights))
        order = rng.permutation(n)
        thirds = np.array_split(order, 3)
        folds = [
            (np.sort(np.concatenate([thirds[j] for j in range(3) if j != i])), np.sort(thirds[i]))
            for i in range(3)
        ]
        model = fit_aoa_cv(table, folds, importance)
        X = np.column_stack(list(table.values()))
        d_bar, pooled, threshold = oracles.aoa_cv(X, folds, weights)
        assert model.d_bar == pytest.approx(d_bar, rel=1e-10)
        np.testing.assert_allclose(model.training_di, pooled, rtol=1e-10)
        assert model.threshold == pytest.approx(threshold, rel=1e-10)

    def test_stored_parameters_are_whole_dataset(self, rng):
        table = random_table(rng, 30, 2)
        importance = [("v0", 1.0), ("v1", 1.0)]
        folds = [(np.arange(15), np.arange(15, 30)), (np.arange(15, 30), np.arange(15))]
        model = fit_aoa_cv(table, folds, importance)
        X = np.column_stack(list(table.values()))
        np.testing.assert_allclose(model.centers, X.mean(axis=0))
        np.testing.assert_allclose(model.scales, X.std(axis=0, ddof=1))
        assert model.training_matrix.shape == (30, 2)
        assert model.method == "cross_validation"

    def test_small_analysis_set_rejected(self):
        with pytest.raises(EmptyInputError):
            fit_aoa_cv(
                {"a": [0.0, 1.0, 2.0]},
                [(np.array([0]), np.array([1, 2])), (np.array([1, 2]), np.array([0]))],
                ONE_D_IMPORTANCE,
            )

    def test_overlapping_fold_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            FoldSet(folds=((np.array([0, 1]), np.array([1, 2])),))


class TestPredict:
    def test_training_row_is_inside(self):
        model = fit_aoa(ONE_D, ONE_D_IMPORTANCE)
        pred = predict_aoa(model, {"a": [0.0]})
        assert pred.di[0] == 0.0
        assert pred.aoa[0] is True

    def test_far_query_hand_value(self):
        model = fit_aoa(ONE_D, ONE_D_IMPORTANCE)
        pred = predict_aoa(model, {"a": [10.0]})
        assert pred.di[0] == 6.0
        assert pred.aoa[0] is False

    def test_missing_value_rows_survive(self):
        model = fit_aoa(ONE_D, ONE_D_IMPORTANCE)
        pred = predict_aoa(model, {"a": [1.0, np.nan, 10.0]})
        assert pred.di.shape == (3,)
        assert math.isnan(pred.di[1])
        assert pred.aoa[1] is None
        assert pred.aoa == (True, None, False)

    def test_missing_column_is_hard_error(self):
        model = fit_aoa(ONE_D, ONE_D_IMPORTANCE)
        with pytest.raises(MissingColumnError):
            predict_aoa(model, {"b": [1.0]})

    def test_monotonic_in_distance(self, rng):
        model = fit_aoa({"a": rng.normal(size=50).tolist()}, ONE_D_IMPORTANCE)
        left = float(min(model.training_matrix.ravel()))
        queries = {"a": (model.centers[0] + model.scales[0] * (left - np.arange(1, 30) * 0.5)).tolist()}
        pred = predict_aoa(model, queries)
        assert (np.diff(pred.di) >= -1e-12).all()

    def test_importance_rescaling_invariance(self, rng):
        table = random_table(rng, 40, 3)
        weights = rng.uniform(0.2, 3, size=3)
        newdata = random_table(rng, 15, 3)
        base = fit_aoa(table, list(zip(table.keys(), weights)))
        scaled = fit_aoa(table, list(zip(table.keys(), weights * 17.0)))
        assert scaled.d_bar == pytest.approx(17.0 * base.d_bar, rel=1e-10)
        assert scaled.threshold == pytest.approx(base.threshold, rel=1e-10)
        p1 = predict_aoa(base, newdata)
        p2 = predict_aoa(scaled, newdata)
        np.testing.assert_allclose(p2.di, p1.di, rtol=1e-10)
        assert p1.aoa == p2.aoa


class TestSerialization:
    def test_round_trip(self, tmp_path, rng):
        table = random_table(rng, 25, 2)
        model = fit_aoa(table, [("v0", 1.0), ("v1", 0.5)], testing=random_table(rng, 10, 2))
        path = tmp_path / "model.json"
        save_aoa_model(model, path)
        back = load_aoa_model(path)
        assert back.predictor_names == model.predictor_names
        np.testing.assert_array_equal(back.centers, model.centers)
        np.testing.assert_array_equal(back.scales, model.scales)
        np.testing.assert_array_equal(back.training_matrix, model.training_matrix)
        np.testing.assert_array_equal(back.testing_di, model.testing_di)
        assert back.d_bar == model.d_bar
        assert back.threshold == model.threshold
        # predictions survive the round trip bit for bit
        query = random_table(rng, 8, 2)
        np.testing.assert_array_equal(predict_aoa(back, query).di, predict_aoa(model, query).di)

    def test_version_checked(self):
        doc = model_to_json(fit_aoa(ONE_D, ONE_D_IMPORTANCE))
        doc["version"] = 99
        from geowise.errors import IngestError

        with pytest.raises(IngestError):
            model_from_json(doc)

    def test_summary_format(self):
        model = fit_aoa(ONE_D, ONE_D_IMPORTANCE)
        assert model.summary() == (
            "# Predictors:\n   1\nArea-of-applicability threshold:\n   0.75"
        )


class TestSidecarFiles:
    def test_importance_csv(self, tmp_path):
        p = tmp_path / "imp.csv"
        p.write_text("term,estimate\na,1.5\nb,0.5\n", encoding="utf-8")
        assert read_importance_csv(p) == [("a", 1.5), ("b", 0.5)]

    def test_folds_csv(self, tmp_path):
        p = tmp_path / "folds.csv"
        p.write_text(
            "row_index,fold_id\n0,1\n1,1\n2,2\n3,2\n4,1\n5,2\n", encoding="utf-8"
        )
        folds = read_folds_csv(p, 6)
        assert len(folds) == 2
        analysis, assessment = folds.folds[0]
        assert assessment.tolist() == [0, 1, 4]
        assert analysis.tolist() == [2, 3, 5]

    def test_folds_out_of_range(self, tmp_path):
        p = tmp_path / "folds.csv"
        p.write_text("row_index,fold_id\n9,1\n0,2\n", encoding="utf-8")
        from geowise.errors import IngestError

        with pytest.raises(IngestError, match="out of range"):
            read_folds_csv(p, 3)
