import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from learncurve.core import Dataset
from learncurve.errors import InvalidInput, LearnerNonConvergence
from learncurve.learners import (ConstantLearner, LearnerSpec, fit, fit_path, lambda_grid,
                                 stratified_folds, tune_penalty)
from learncurve.learners.forest import fit_forest, resolve_mtry
from learncurve.learners.linear import fit_linear


def standardize(X):
    mu, sd = X.mean(axis=0), X.std(axis=0)
    return (X - mu) / sd, mu, sd


def to_original(beta_s, b0, mu, sd):
    coef = beta_s / sd
    return coef, b0 - coef @ mu


def logistic_objective(params, Z, y, lam, l1):
    b0, beta = params[0], params[1:]
    eta = b0 + Z @ beta
    pen = np.abs(beta).sum() if l1 else 0.5 * beta @ beta
    return np.mean(np.logaddexp(0, eta) - y * eta) + lam * pen


def regression_data(n=40, p=6, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) * rng.uniform(0.5, 3, p) + rng.normal(size=p)
    y = X @ rng.normal(size=p) + rng.normal(size=n)
    return X, y


def classification_data(n=60, p=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    eta = X @ rng.normal(size=p)
    y = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(float)
    return X, y


class TestRidge:
    @pytest.mark.parametrize("n,p", [(40, 6), (15, 30)])
    @pytest.mark.parametrize("lam", [0.01, 0.3, 5.0])
    def test_gaussian_matches_closed_form(self, n, p, lam):
        X, y = regression_data(n, p)
        Z, mu, sd = standardize(X)
        beta = np.linalg.solve(Z.T @ Z / n + lam * np.eye(p), Z.T @ (y - y.mean()) / n)
        coef, b0 = to_original(beta, y.mean(), mu, sd)
        model = fit_linear(X, y, "ridge", "regression", lam, tol=1e-12)
        assert np.allclose(model.coef, coef, rtol=1e-6, atol=1e-8)
        assert model.intercept == pytest.approx(b0, rel=1e-6, abs=1e-8)

    @pytest.mark.parametrize("n,p", [(60, 5), (25, 40)])
    def test_logistic_matches_generic_optimizer(self, n, p):
        X, y = classification_data(n, p)
        Z, mu, sd = standardize(X)
        lam = 0.1
        ref = optimize.minimize(logistic_objective, np.zeros(p + 1), args=(Z, y, lam, False),
                                method="BFGS", options={"gtol": 1e-10})
        coef, b0 = to_original(ref.x[1:], ref.x[0], mu, sd)
        model = fit_linear(X, y, "ridge", "classification", lam, tol=1e-12)
        assert np.allclose(model.coef, coef, atol=1e-5)
        assert model.intercept == pytest.approx(b0, abs=1e-5)

    def test_zero_penalty_is_least_squares(self):
        X, y = regression_data()
        model = fit_linear(X, y, "ridge", "regression", 0.0, tol=1e-14)
        A = np.c_[np.ones(len(y)), X]
        ref = np.linalg.lstsq(A, y, rcond=None)[0]
        assert np.allclose(model.coef, ref[1:], rtol=1e-6)


class TestLasso:
    def test_gaussian_kkt(self):
        X, y = regression_data(50, 8, seed=3)
        Z, mu, sd = standardize(X)
        lam = 0.3 * np.abs(Z.T @ (y - y.mean())).max() / len(y)
        model = fit_linear(X, y, "lasso", "regression", lam, tol=1e-12)
        beta = model.coef * sd
        b0 = model.intercept + model.coef @ mu
        grad = Z.T @ (y - b0 - Z @ beta) / len(y)
        active = beta != 0
        assert active.any() and not active.all()
        assert np.allclose(grad[active], lam * np.sign(beta[active]), atol=1e-6)
        assert np.all(np.abs(grad[~active]) <= lam + 1e-6)

    def test_logistic_matches_generic_optimizer(self):
        X, y = classification_data(80, 4, seed=5)
        Z, mu, sd = standardize(X)
        lam = 0.02
        # smooth reformulation: beta = u - v with u, v >= 0
        def obj(params):
            b0, u, v = params[0], params[1:5], params[5:]
            return logistic_objective(np.r_[b0, u - v], Z, y, 0.0, False) + lam * (u + v).sum()
        bounds = [(None, None)] + [(0, None)] * 8
        ref = optimize.minimize(obj, np.zeros(9), method="L-BFGS-B", bounds=bounds,
                                options={"ftol": 1e-15, "gtol": 1e-12})
        beta = ref.x[1:5] - ref.x[5:]
        coef, b0 = to_original(beta, ref.x[0], mu, sd)
        model = fit_linear(X, y, "lasso", "classification", lam, tol=1e-12)
        assert np.allclose(model.coef, coef, atol=1e-4)

    def test_lambda_max_zeroes_everything(self):
        X, y = regression_data()
        grid = lambda_grid(X, y, "lasso", 5)
        model = fit_linear(X, y, "lasso", "regression", grid[0])
        assert np.all(model.coef == 0)
        assert model.intercept == pytest.approx(y.mean())


class TestPath:
    def test_path_matches_single_fits(self):
        X, y = classification_data(40, 6, seed=1)
        lambdas = lambda_grid(X, y, "lasso", 8)
        coefs, _, _ = fit_path(X, y, "lasso", "classification", lambdas, tol=1e-12,
                               early_stop=False)
        for lam, c in zip(lambdas, coefs):
            single = fit_linear(X, y, "lasso", "classification", lam, tol=1e-12)
            assert np.allclose(c, single.coef, atol=1e-5)

    def test_infinite_penalty_gives_null_model(self):
        X, y = regression_data()
        coefs, intercepts, _ = fit_path(X, y, "ridge", "regression", [np.inf, 1.0])
        assert np.all(coefs[0] == 0) and intercepts[0] == pytest.approx(y.mean())

    @pytest.mark.parametrize("lambdas", [[1.0, np.nan], [1.0, -0.5], [1.0, np.inf]])
    def test_bad_penalties(self, lambdas):
        X, y = regression_data()
        with pytest.raises(InvalidInput):
            fit_path(X, y, "ridge", "regression", lambdas)

    def test_constant_column_gets_zero_coefficient(self):
        X, y = regression_data()
        X[:, 2] = 4.0
        model = fit_linear(X, y, "ridge", "regression", 0.1)
        assert model.coef[2] == 0.0

    def test_partial_path_truncates_at_failure(self):
        X, y = classification_data(40, 6, seed=1)
        lambdas = lambda_grid(X, y, "lasso", 8)
        with pytest.raises(LearnerNonConvergence):
            fit_path(X, y, "lasso", "classification", lambdas, max_sweeps=1, early_stop=False)
        coefs, intercepts, _ = fit_path(X, y, "lasso", "classification", lambdas,
                                        max_sweeps=1, early_stop=False, partial=True)
        bad = np.isnan(intercepts)
        assert bad.any() and np.all(np.isnan(coefs[bad]))
        # once a penalty fails, every smaller one is dropped too
        assert np.all(bad[np.argmax(bad):])

    def test_width_mismatch(self):
        X, y = regression_data()
        model = fit_linear(X, y, "ridge", "regression", 0.1)
        with pytest.raises(InvalidInput):
            model.predict(X[:, :3])


class TestTuning:
    def test_picks_grid_value_and_is_deterministic(self):
        X, y = classification_data(60, 10, seed=2)
        spec = LearnerSpec("lasso", cv_repeats=3)
        a = tune_penalty(spec, X, y, np.random.default_rng(4))
        b = tune_penalty(spec, X, y, np.random.default_rng(4))
        assert a == b
        assert np.isclose(lambda_grid(X, y, "lasso"), a, rtol=1e-12).any()

    def test_separable_data_tunes(self):
        rng = np.random.default_rng(5)
        y = np.r_[np.ones(10), np.zeros(10)]
        X = rng.normal(size=(20, 10)) + 3.0 * y[:, None]
        a = tune_penalty(LearnerSpec("lasso"), X, y, rng)
        assert np.isclose(lambda_grid(X, y, "lasso"), a, rtol=1e-12).any()

    def test_too_few_rows(self):
        X, y = classification_data(8, 2)
        with pytest.raises(InvalidInput):
            tune_penalty(LearnerSpec("ridge"), X, y)

    def test_forest_has_no_penalty(self):
        with pytest.raises(InvalidInput):
            tune_penalty(LearnerSpec("random_forest"), *classification_data())

    def test_tuned_spec_is_fixed(self):
        X, y = classification_data(60, 5)
        tuned = LearnerSpec("ridge", cv_repeats=1).tuned(X, y, 0)
        assert isinstance(tuned.penalty, float) and not tuned.needs_tuning

    def test_fit_accepts_dataset(self):
        X, y = classification_data(60, 5)
        model = fit(LearnerSpec("ridge", penalty=0.1), Dataset(X, y, "classification"))
        assert model.predict(X).shape == (60,)


class TestSpec:
    @pytest.mark.parametrize("kwargs", [{"family": "svm"}, {"task": "survival"},
                                        {"penalty": -1.0}, {"penalty": "big"}])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidInput):
            LearnerSpec(**kwargs)

    def test_constant_learner(self):
        assert ConstantLearner(2.0).fit(None, None).predict(np.zeros((3, 1))).tolist() == [2.0] * 3


@settings(max_examples=60, deadline=None)
@given(st.lists(st.booleans(), min_size=10, max_size=60), st.integers(2, 10),
       st.integers(0, 2**32 - 1))
def test_stratified_folds_balance(labels, n_folds, seed):
    y = np.array(labels, dtype=float)
    folds = stratified_folds(y, n_folds, np.random.default_rng(seed), True)
    assert set(folds) <= set(range(n_folds))
    for c in (0, 1):
        counts = np.bincount(folds[y == c], minlength=n_folds)
        assert counts.max() - counts.min() <= 1


def best_stump(X, y, min_leaf):
    """Exhaustive search for the variance-reducing split."""
    best = (-np.inf, None, None)
    n = len(y)
    for f in range(X.shape[1]):
        for t in np.unique(X[:, f])[:-1]:
            left = X[:, f] <= t
            if min(left.sum(), n - left.sum()) < min_leaf:
                continue
            gain = y[left].sum() ** 2 / left.sum() + y[~left].sum() ** 2 / (~left).sum()
            if gain > best[0]:
                best = (gain, f, left)
    return best


class TestForest:
    def test_stump_matches_exhaustive_search(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            X = rng.normal(size=(20, 3))
            y = rng.normal(size=20) + (X[:, 1] > 0)
            model = fit_forest(X, y, trees=1, mtry=3, min_leaf=7, bootstrap=False, rng=0)
            _, f, left = best_stump(X, y, 7)
            expected = np.where(left, y[left].mean(), y[~left].mean())
            assert model.feature[0, 0] == f
            assert np.allclose(model.predict(X), expected)

    def test_single_tree_interpolates_distinct_rows(self):
        X, y = classification_data(30, 3)
        model = fit_forest(X, y, trees=1, mtry=3, min_leaf=1, bootstrap=False, rng=0)
        assert np.array_equal(model.predict(X), y)

    def test_large_leaf_gives_mean(self):
        X, y = classification_data(30, 3)
        model = fit_forest(X, y, trees=3, min_leaf=16, bootstrap=False, rng=0)
        assert np.allclose(model.predict(X), y.mean())

    def test_deterministic_and_probabilities(self):
        X, y = classification_data(50, 8)
        a = fit_forest(X, y, trees=20, rng=5).predict(X)
        b = fit_forest(X, y, trees=20, rng=5).predict(X)
        assert np.array_equal(a, b) and np.all((a >= 0) & (a <= 1))

    def test_resolve_mtry(self):
        assert resolve_mtry("sqrt_p", 200) == 15
        assert resolve_mtry(3, 10) == 3
        with pytest.raises(InvalidInput):
            resolve_mtry(11, 10)
