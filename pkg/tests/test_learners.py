"""Unit tests for the learner zoo and its model primitives."""

import numpy as np
import pytest

from pitelens.core import learners
from pitelens.core.learners import (
    DETERMINISTIC_LEARNERS,
    LEARNER_IDS,
    LearnerSpec,
    assign_folds,
    get_learner,
    make_learner_spec,
)
from pitelens.core.linear_models import (
    Standardizer,
    elastic_net_path,
    fit_ols,
    lambda_grid,
    lambda_max,
    pcr_path,
    pls_path,
    ridge_path,
)
from pitelens.core.tree_models import (
    ConstantModel,
    fit_cart,
    fit_gradient_boosting,
    fit_random_forest,
)
from pitelens.utils.errors import InvalidParameterError, RankDeficiencyError


def _linear_data(n=120, p=4, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    coef = np.arange(1, p + 1, dtype=float)
    y = 2.0 + X @ coef + noise * rng.normal(size=n)
    return X, y, coef


class TestLinearModels:
    """Test cases for OLS, penalized and projection fits."""

    def test_ols_exact_recovery(self):
        """Test noiseless OLS recovers intercept and slopes."""
        X, y, coef = _linear_data()
        model = fit_ols(X, y)
        assert model.intercept == pytest.approx(2.0, abs=1e-10)
        np.testing.assert_allclose(model.coef, coef, atol=1e-10)

    def test_ols_needs_more_rows_than_columns(self):
        """Test OLS with n <= p raises a rank deficiency error."""
        X, y, _ = _linear_data(n=4, p=4)
        with pytest.raises(RankDeficiencyError, match="n > p"):
            fit_ols(X, y)

    def test_ols_collinear_design(self):
        """Test OLS rejects duplicated columns."""
        X, y, _ = _linear_data(n=50, p=3)
        X = np.column_stack([X, X[:, 0]])
        with pytest.raises(RankDeficiencyError, match="rank"):
            fit_ols(X, y)

    def test_lambda_grid_shape(self):
        """Test the grid is 50 descending values spanning four decades."""
        X, y, _ = _linear_data(noise=1.0)
        grid = lambda_grid(X, y, alpha=1.0)
        assert len(grid) == 50
        assert all(a > b for a, b in zip(grid, grid[1:]))
        assert grid[0] == pytest.approx(lambda_max(X, y, 1.0))
        assert grid[-1] / grid[0] == pytest.approx(1e-4)

    def test_lambda_grid_constant_response(self):
        """Test a constant response collapses the grid to a single zero."""
        X, _, _ = _linear_data()
        assert lambda_grid(X, np.ones(X.shape[0]), alpha=0.5) == [0.0]

    def test_ridge_zero_penalty_is_ols(self):
        """Test ridge at lambda 0 matches OLS."""
        X, y, _ = _linear_data(noise=1.0)
        ridge = ridge_path(X, y, [0.0])[0]
        ols = fit_ols(X, y)
        np.testing.assert_allclose(ridge.coef, ols.coef, rtol=1e-8)
        assert ridge.intercept == pytest.approx(ols.intercept, rel=1e-8)

    def test_ridge_shrinks_with_lambda(self):
        """Test larger penalties give smaller coefficient norms."""
        X, y, _ = _linear_data(noise=1.0)
        models = ridge_path(X, y, [10.0, 1.0, 0.1])
        norms = [np.linalg.norm(m.coef) for m in models]
        assert norms[0] < norms[1] < norms[2]

    def test_lasso_above_lambda_max_is_empty(self):
        """Test the lasso zeroes every coefficient above lambda_max and keeps input order."""
        X, y, _ = _linear_data(noise=1.0)
        lam = lambda_max(X, y, 1.0)
        small, big = elastic_net_path(X, y, 1.0, [lam * 1e-3, lam * 1.01])
        np.testing.assert_array_equal(big.coef, np.zeros(X.shape[1]))
        assert big.intercept == pytest.approx(y.mean())
        assert np.all(np.abs(small.coef) > 0)

    def test_pcr_all_components_is_ols(self):
        """Test PCR with every component matches OLS."""
        X, y, _ = _linear_data(noise=1.0)
        pcr = pcr_path(X, y, [X.shape[1]])[0]
        np.testing.assert_allclose(pcr.coef, fit_ols(X, y).coef, rtol=1e-8)

    def test_pls_all_components_is_ols(self):
        """Test PLS with every component matches OLS."""
        X, y, _ = _linear_data(noise=1.0)
        pls = pls_path(X, y, [1, X.shape[1]])
        np.testing.assert_allclose(pls[1].coef, fit_ols(X, y).coef, rtol=1e-6)
        assert not np.allclose(pls[0].coef, pls[1].coef)

    def test_ridge_lambda_grid_starts_at_lasso_lambda_max(self):
        """Test the ridge grid spans lasso lambda_max down to 1e-4 of it."""
        X, y, _ = _linear_data(noise=1.0)
        grid = lambda_grid(X, y, alpha=0.0)
        assert grid[0] == pytest.approx(lambda_max(X, y, 1.0))
        assert grid[-1] == pytest.approx(lambda_max(X, y, 1.0) * 1e-4)

    def test_ridge_orthonormal_design_shrinks_ols(self):
        """Test ridge on an orthogonal unit-variance design is OLS divided by 1 + lambda."""
        n, lam = 100, 0.7
        rng = np.random.default_rng(4)
        A = rng.normal(size=(n, 3))
        Q, _ = np.linalg.qr(A - A.mean(axis=0))
        X = Q * np.sqrt(n)
        y = 1.0 + X @ np.array([2.0, -1.0, 0.5]) + rng.normal(size=n)
        ridge = ridge_path(X, y, [lam])[0]
        np.testing.assert_allclose(ridge.coef, fit_ols(X, y).coef / (1 + lam), atol=1e-10)

    def test_univariate_lasso_is_soft_threshold(self):
        """Test the lasso on one standardized predictor soft-thresholds the OLS slope."""
        rng = np.random.default_rng(5)
        z = rng.normal(size=80)
        x = (z - z.mean()) / z.std()
        y = 0.8 * x + rng.normal(size=80)
        beta_ols = fit_ols(x[:, None], y).coef[0]
        for lam in [0.1, 0.5, abs(beta_ols) + 0.1]:
            coef = elastic_net_path(x[:, None], y, 1.0, [lam])[0].coef[0]
            expected = np.sign(beta_ols) * max(abs(beta_ols) - lam, 0.0)
            assert coef == pytest.approx(expected, abs=1e-8)

    @pytest.mark.parametrize("alpha", [1.0, 0.2])
    def test_penalized_fits_satisfy_kkt(self, alpha):
        """Test lasso and elastic-net coefficients meet the subgradient conditions."""
        X, y, _ = _linear_data(n=150, p=8, noise=2.0, seed=6)
        std = Standardizer.fit(X)
        Xs = std.transform(X)
        yc = y - y.mean()
        n = X.shape[0]
        lam_max = lambda_max(X, y, alpha)
        for lam in [lam_max * 0.3, lam_max * 0.05, lam_max * 0.001]:
            model = elastic_net_path(X, y, alpha, [lam])[0]
            b = model.coef * std.scale
            grad = Xs.T @ (yc - Xs @ b) / n - lam * (1 - alpha) * b
            active = b != 0
            np.testing.assert_allclose(grad[active], lam * alpha * np.sign(b[active]), atol=1e-6)
            assert np.all(np.abs(grad[~active]) <= lam * alpha + 1e-6)


class TestTreeModels:
    """Test cases for CART, random forest and boosting primitives."""

    def test_depth_zero_is_constant(self):
        """Test a depth-0 tree predicts the training mean."""
        X, y, _ = _linear_data()
        model = fit_cart(X, y, max_depth=0)
        assert isinstance(model, ConstantModel)
        np.testing.assert_allclose(model.predict(X[:3]), np.full(3, y.mean()))

    def test_cart_fits_step_function(self):
        """Test a depth-1 tree recovers a single split."""
        X = np.linspace(-1, 1, 100).reshape(-1, 1)
        y = np.where(X[:, 0] > 0, 3.0, -3.0)
        model = fit_cart(X, y, max_depth=1, min_leaf=5)
        np.testing.assert_allclose(model.predict(X), y)

    def test_forest_is_reproducible(self):
        """Test a forest is a pure function of its seed."""
        X, y, _ = _linear_data(noise=1.0)
        a = fit_random_forest(X, y, n_trees=10, seed=3)
        b = fit_random_forest(X, y, n_trees=10, seed=3)
        np.testing.assert_array_equal(a.predict(X), b.predict(X))
        assert len(a.trees) == 10

    def test_boosting_without_trees_predicts_mean(self):
        """Test zero boosting rounds leave the initial constant."""
        X, y, _ = _linear_data()
        model = fit_gradient_boosting(X, y, n_trees=0)
        np.testing.assert_allclose(model.predict(X[:4]), np.full(4, y.mean()))

    def test_boosting_reduces_training_error(self):
        """Test more boosting rounds lower the training error."""
        X, y, _ = _linear_data(noise=0.5)
        short = fit_gradient_boosting(X, y, n_trees=5)
        long = fit_gradient_boosting(X, y, n_trees=100)
        assert np.mean((long.predict(X) - y) ** 2) < np.mean((short.predict(X) - y) ** 2)

    def test_single_unbagged_tree_forest_is_cart(self):
        """Test one tree without bootstrap on all features matches CART."""
        X, y, _ = _linear_data(noise=1.0)
        p = X.shape[1]
        forest = fit_random_forest(X, y, n_trees=1, mtry=p, bootstrap=False, seed=11)
        cart = fit_cart(X, y, max_depth=None, min_leaf=5, seed=11, max_features=p)
        np.testing.assert_array_equal(forest.predict(X), cart.predict(X))

    def test_forest_predicts_mean_of_trees(self):
        """Test forest predictions are the average of its trees."""
        X, y, _ = _linear_data(noise=1.0)
        forest = fit_random_forest(X, y, n_trees=7, seed=2)
        by_tree = np.stack([t.predict(X) for t in forest.trees])
        np.testing.assert_allclose(forest.predict(X), by_tree.mean(axis=0), rtol=0, atol=1e-12)

    def test_one_full_step_boosting_is_cart_on_residuals(self):
        """Test one tree at learning rate 1 is the mean plus CART fit to centered y."""
        X, y, _ = _linear_data(noise=1.0)
        model = fit_gradient_boosting(X, y, n_trees=1, learning_rate=1.0, max_depth=3, min_leaf=5, seed=4)
        cart = fit_cart(X, y - y.mean(), max_depth=3, min_leaf=5, seed=4)
        np.testing.assert_allclose(model.predict(X), y.mean() + cart.predict(X), atol=1e-12)


class TestLearnerRegistry:
    """Test cases for learner lookup and specs."""

    def test_all_learners_registered(self):
        """Test the full zoo is available."""
        assert LEARNER_IDS == ["ols", "ridge", "lasso", "enet", "pcr", "pls", "cart", "rf", "gbm"]
        assert set(DETERMINISTIC_LEARNERS) <= set(LEARNER_IDS)

    def test_unknown_learner(self):
        """Test unknown ids name the offending id."""
        with pytest.raises(InvalidParameterError, match="unknown learner: 'xyz'"):
            get_learner("xyz")

    def test_spec_overrides(self):
        """Test overrides are merged into the default grid."""
        spec = make_learner_spec("cart", {"max_depth": [2, 3]}, cv_folds=5)
        assert spec.hyper_grid["max_depth"] == [2, 3]
        assert spec.hyper_grid["min_leaf"] == 5
        assert spec.cv_folds == 5

    def test_spec_unknown_hyperparameter(self):
        """Test unknown hyperparameters are rejected."""
        with pytest.raises(InvalidParameterError, match="unknown hyperparameter"):
            make_learner_spec("ridge", {"depth": 3})

    def test_spec_empty_grid(self):
        """Test an empty candidate list is rejected."""
        with pytest.raises(InvalidParameterError, match="empty grid"):
            make_learner_spec("cart", {"max_depth": []})


class TestFit:
    """Test cases for CV-selected fitting."""

    def test_folds_are_balanced(self):
        """Test every fold id appears and sizes differ by at most one."""
        folds = assign_folds(103, 10, seed=1)
        counts = np.bincount(folds)
        assert counts.size == 10
        assert counts.max() - counts.min() <= 1

    def test_ols_fit_and_predict(self):
        """Test the OLS learner predicts noiseless data exactly."""
        X, y, _ = _linear_data()
        model = learners.fit(LearnerSpec("ols"), X, y, np.random.default_rng(0))
        np.testing.assert_allclose(learners.predict(model, X), y, atol=1e-9)
        assert model.cv_errors is None

    def test_cv_records_errors_and_choice(self):
        """Test CV scores every candidate and keeps the argmin."""
        X, y, _ = _linear_data(noise=1.0)
        spec = make_learner_spec("ridge", cv_folds=5)
        model = learners.fit(spec, X, y, np.random.default_rng(0))
        assert len(model.cv_errors) == 50
        assert model.params["lambda"] == lambda_grid(X, y, 0.0)[int(np.argmin(model.cv_errors))]

    def test_tie_goes_to_parsimonious_candidate(self):
        """Test equal CV errors select the first (most parsimonious) candidate."""
        X = np.random.default_rng(0).normal(size=(60, 2))
        y = np.ones(60)
        spec = make_learner_spec("cart", {"max_depth": [1, 2, 3]}, cv_folds=5)
        model = learners.fit(spec, X, y, np.random.default_rng(0))
        assert model.params["max_depth"] == 1

    def test_same_stream_same_model(self):
        """Test fitting is a pure function of the random stream."""
        X, y, _ = _linear_data(noise=1.0)
        spec = make_learner_spec("rf", {"n_trees": 5}, cv_folds=3)
        a = learners.fit(spec, X, y, np.random.default_rng(9))
        b = learners.fit(spec, X, y, np.random.default_rng(9))
        np.testing.assert_array_equal(learners.predict(a, X), learners.predict(b, X))

    def test_explicit_folds(self):
        """Test a supplied fold assignment is used as given."""
        X, y, _ = _linear_data(noise=1.0)
        folds = np.arange(X.shape[0]) % 4
        spec = make_learner_spec("lasso", cv_folds=4)
        a = learners.fit(spec, X, y, np.random.default_rng(1), folds=folds)
        b = learners.fit(spec, X, y, np.random.default_rng(2), folds=folds)
        assert a.cv_errors == b.cv_errors

    def test_too_few_rows(self):
        """Test n <= cv_folds is rejected."""
        X, y, _ = _linear_data(n=10)
        with pytest.raises(InvalidParameterError, match="n > cv_folds"):
            learners.fit(LearnerSpec("ridge", cv_folds=10), X, y, np.random.default_rng(0))

    def test_non_finite_input(self):
        """Test NaN in the design is rejected."""
        X, y, _ = _linear_data()
        X[0, 0] = np.nan
        with pytest.raises(InvalidParameterError, match="non-finite"):
            learners.fit(LearnerSpec("ols"), X, y, np.random.default_rng(0))

    def test_predict_dimension_mismatch(self):
        """Test predicting with the wrong column count fails."""
        X, y, _ = _linear_data()
        model = learners.fit(LearnerSpec("ols"), X, y, np.random.default_rng(0))
        with pytest.raises(InvalidParameterError, match="columns"):
            learners.predict(model, X[:, :2])

    @pytest.mark.parametrize("learner_id", ["pcr", "pls", "enet", "gbm"])
    def test_learners_fit_noisy_data(self, learner_id):
        """Test each learner fits and beats the constant predictor."""
        X, y, _ = _linear_data(n=200, noise=0.5)
        overrides = {"n_trees": 50} if learner_id == "gbm" else None
        spec = make_learner_spec(learner_id, overrides, cv_folds=5)
        model = learners.fit(spec, X, y, np.random.default_rng(0))
        mse = np.mean((learners.predict(model, X) - y) ** 2)
        assert mse < np.var(y)

    @pytest.mark.parametrize("learner_id", DETERMINISTIC_LEARNERS)
    def test_row_permutation_leaves_predictions_unchanged(self, learner_id):
        """Test reordering training rows with their folds gives the same predictions."""
        X, y, _ = _linear_data(n=120, p=4, noise=1.0, seed=8)
        folds = assign_folds(X.shape[0], 5, seed=3)
        perm = np.random.default_rng(12).permutation(X.shape[0])
        spec = make_learner_spec(learner_id, cv_folds=5)
        a = learners.fit(spec, X, y, np.random.default_rng(0), folds=folds)
        b = learners.fit(spec, X[perm], y[perm], np.random.default_rng(0), folds=folds[perm])
        np.testing.assert_allclose(learners.predict(a, X), learners.predict(b, X), rtol=0, atol=1e-10)
