import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._common import split_eval, validate_eval_set, validate_fit_args, weighted_sq_loss

RIDGE_GRID = tuple(10.0 ** k for k in range(-4, 3))


def _solve_ridge(X, y, w, alpha):
    w = w / w.sum()
    x_mean = w @ X
    y_mean = float(w @ y)
    Xc = X - x_mean
    gram = Xc.T @ (Xc * w[:, None])
    rhs = Xc.T @ (w * (y - y_mean))
    coef = np.linalg.solve(gram + alpha * np.eye(X.shape[1]), rhs)
    return coef, y_mean - float(x_mean @ coef)


class ConstantRegressor(RegressorMixin, BaseEstimator):
    """Predicts the weighted mean of the targets."""

    def fit(self, X, y, sample_weight=None, eval_set=None, deadline=None):
        X, y, w = validate_fit_args(X, y, sample_weight)
        self.constant_ = float(np.dot(w, y) / w.sum())
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "constant_")
        X = check_array(X, dtype=float)
        return np.full(X.shape[0], self.constant_)


class WeightedRidge(RegressorMixin, BaseEstimator):
    """Weighted ridge regression with an unpenalised intercept.

    Parameters
    ----------
    alpha : float or None
        L2 penalty on the coefficients, relative to weights normalised to
        sum to one. ``None`` selects it from ``alphas`` by held-out weighted
        squared error.
    alphas : tuple of float
        Candidate penalties, tried in order; ties keep the first.
    random_state : int
        Seed of the internal holdout used when no ``eval_set`` is given.
    """

    def __init__(self, alpha=None, alphas=RIDGE_GRID, random_state=0):
        self.alpha = alpha
        self.alphas = alphas
        self.random_state = random_state

    def fit(self, X, y, sample_weight=None, eval_set=None, deadline=None):
        X, y, w = validate_fit_args(X, y, sample_weight)
        eval_set = validate_eval_set(eval_set, X.shape[1])
        self.n_features_in_ = X.shape[1]
        if self.alpha is not None:
            self.alpha_ = float(self.alpha)
            self.coef_, self.intercept_ = _solve_ridge(X, y, w, self.alpha_)
            return self

        external = eval_set is not None
        (Xf, yf, wf), held = split_eval(X, y, w, eval_set, self.random_state)
        if held is None:
            self.alpha_ = 1.0
            self.coef_, self.intercept_ = _solve_ridge(X, y, w, self.alpha_)
            return self
        Xv, yv, wv = held
        best = None
        for a in self.alphas:
            coef, b = _solve_ridge(Xf, yf, wf, a)
            loss = weighted_sq_loss(yv, Xv @ coef + b, wv)
            if best is None or loss < best[0]:
                best = (loss, a, coef, b)
        self.alpha_ = best[1]
        if external:
            self.coef_, self.intercept_ = best[2], best[3]
        else:
            self.coef_, self.intercept_ = _solve_ridge(X, y, w, self.alpha_)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        return X @ self.coef_ + self.intercept_
