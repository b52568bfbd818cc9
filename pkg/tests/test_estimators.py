import json

import numpy as np
import pytest

from emgfinger.dsp import NormalizationScale
from emgfinger.estimators import (
    BaggedTreeEnsemble,
    Dataset,
    LinearModel,
    RankDeficientError,
    TreeParams,
    fit_bagged_trees,
    fit_linear,
    load_model,
    r_squared,
    rmse,
    save_model,
)
from emgfinger.estimators.trees import RegressionTree


def make_dataset(n=200, seed=0, fn=None):
    rng = np.random.default_rng(seed)
    feats = rng.uniform(0, 1, size=(n, 2))
    if fn is None:
        fn = lambda X: 0.7 * X[:, 0] + 0.1
    return Dataset(np.arange(n, dtype=float), feats, fn(feats))


class TestLinear:
    def test_recovers_exact_linear_data(self):
        ds = make_dataset(fn=lambda X: 0.7 * X[:, 0] + 0.1)
        model = fit_linear(ds)
        assert model.weights[0] == pytest.approx(0.7, abs=1e-6)
        assert model.weights[1] == pytest.approx(0.0, abs=1e-6)
        assert model.intercept == pytest.approx(0.1, abs=1e-6)
        assert r_squared(ds.force, model.predict(ds.features)) == pytest.approx(1.0, abs=1e-9)

    def test_residuals_orthogonal_to_features(self):
        ds = make_dataset(fn=lambda X: 0.3 * X[:, 0] - 0.2 * X[:, 1] ** 2 + 0.5)
        model = fit_linear(ds)
        resid = ds.force - model.predict(ds.features)
        assert np.all(np.abs(ds.features.T @ resid) < 1e-8)
        assert abs(resid.sum()) < 1e-8

    def test_single_repeated_point_rank_deficient(self):
        feats = np.tile([0.5, 0.5], (10, 1))
        ds = Dataset(np.arange(10.0), feats, np.full(10, 0.3))
        with pytest.raises(RankDeficientError):
            fit_linear(ds)

    def test_too_few_samples(self):
        ds = Dataset([0.0, 1.0], [[0.1, 0.2], [0.3, 0.4]], [0.0, 1.0])
        with pytest.raises(ValueError):
            fit_linear(ds)

    def test_known_weights_prediction(self):
        model = LinearModel(weights=np.array([0.5, 0.5]), intercept=0.0)
        assert model.predict(np.array([0.4, 0.2])) == pytest.approx(0.3)


class TestTrees:
    def test_single_bag_equals_bag_prediction(self):
        ds = make_dataset(seed=1)
        ens = fit_bagged_trees(ds, "gradient_boosting", TreeParams(n_bags=1), seed=3)
        X = ds.features[:20]
        assert np.allclose(ens.predict(X), ens.bags[0].predict(X), atol=1e-12)

    def test_same_seed_identical(self):
        ds = make_dataset(seed=2)
        a = fit_bagged_trees(ds, "random_forest", seed=7)
        b = fit_bagged_trees(ds, "random_forest", seed=7)
        assert np.array_equal(a.predict(ds.features), b.predict(ds.features))
        assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)

    def test_different_seed_differs(self):
        ds = make_dataset(seed=2)
        a = fit_bagged_trees(ds, "random_forest", seed=7)
        b = fit_bagged_trees(ds, "random_forest", seed=8)
        assert not np.array_equal(a.predict(ds.features), b.predict(ds.features))

    def test_piecewise_constant_beats_linear(self):
        rng = np.random.default_rng(3)
        feats = rng.uniform(0, 1, size=(300, 2))
        force = np.where(feats[:, 0] < 0.5, 0.2, 0.8)
        ds = Dataset(np.arange(300.0), feats, force)
        ens = fit_bagged_trees(ds, "gradient_boosting", seed=0)
        lin = fit_linear(ds)
        assert rmse(force, ens.predict(feats)) <= rmse(force, lin.predict(feats))

    def test_bagging_average_with_stub_bags(self):
        class Stub:
            def __init__(self, value):
                self.value = value

            def predict(self, X):
                return np.full(len(X), self.value)

        ens = BaggedTreeEnsemble("random_forest", [Stub(0.2), Stub(0.4)])
        assert ens.predict(np.zeros((5, 2)))[0] == pytest.approx(0.3, abs=1e-12)

    def test_empty_and_small_datasets_rejected(self):
        ds = make_dataset(n=5)
        with pytest.raises(ValueError):
            fit_bagged_trees(ds, "random_forest")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            fit_bagged_trees(make_dataset(), "extra_trees")

    def test_tree_fits_exact_step(self):
        X = np.array([[0.0, 0], [0.2, 0], [0.6, 0], [0.9, 0]])
        y = np.array([1.0, 1.0, 2.0, 2.0])
        tree = RegressionTree(max_depth=3, min_samples_leaf=1).fit(X, y)
        assert np.allclose(tree.predict(X), y)

    def test_trees_reach_r2_on_exact_linear(self):
        ds = make_dataset(n=400, seed=4)
        ens = fit_bagged_trees(ds, "gradient_boosting", seed=0)
        assert r_squared(ds.force, ens.predict(ds.features)) >= 0.95


class TestMetrics:
    def test_r2_perfect(self):
        y = np.array([1.0, 2.0, 3.0])
        assert r_squared(y, y) == pytest.approx(1.0)

    def test_r2_mean_predictor_zero(self):
        y = np.array([1.0, 2.0, 3.0])
        assert r_squared(y, np.full(3, 2.0)) == pytest.approx(0.0)

    def test_r2_negative_when_worse_than_mean(self):
        y = np.array([1.0, 2.0, 3.0])
        assert r_squared(y, np.array([3.0, 1.0, 0.0])) < 0.0

    def test_r2_constant_actual_rejected(self):
        with pytest.raises(ValueError):
            r_squared(np.ones(5), np.zeros(5))

    def test_rmse_identical(self):
        assert rmse(np.arange(5.0), np.arange(5.0)) == 0.0

    def test_rmse_constant_offset(self):
        y = np.arange(5.0)
        assert rmse(y, y + 2.0) == pytest.approx(2.0)

    def test_rmse_mixed_errors(self):
        assert rmse(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(
            np.sqrt(12.5), abs=1e-4
        )

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            rmse(np.zeros(3), np.zeros(4))


class TestPersistence:
    @pytest.mark.parametrize("kind", ["linear", "random_forest", "gradient_boosting"])
    def test_roundtrip_identical_predictions(self, tmp_path, kind):
        ds = make_dataset(seed=5, fn=lambda X: np.sin(X[:, 0]) + 0.2 * X[:, 1])
        if kind == "linear":
            model = fit_linear(ds)
        else:
            model = fit_bagged_trees(ds, kind, TreeParams(n_bags=3, trees_per_bag=5), seed=1)
        path = tmp_path / "model.json"
        scale = NormalizationScale(np.array([1.0, 2.0]), 10.0)
        save_model(path, model, scale=scale, seed=1)
        clone = load_model(path)
        probe = ds.features[:25]
        assert np.array_equal(np.atleast_1d(model.predict(probe)), np.atleast_1d(clone.predict(probe)))

    def test_dataset_csv_roundtrip(self, tmp_path):
        ds = make_dataset(seed=6)
        path = tmp_path / "ds.csv"
        ds.save_csv(path)
        clone = Dataset.load_csv(path)
        assert np.array_equal(ds.features, clone.features)
        assert np.array_equal(ds.force, clone.force)
        assert np.array_equal(ds.t, clone.t)
