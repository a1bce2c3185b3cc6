import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._common import split_eval, validate_eval_set, validate_fit_args, weighted_sq_loss

K_GRID = (1, 3, 5, 9, 17)


class WeightedKNNRegressor(RegressorMixin, BaseEstimator):
    """k-nearest-neighbour regressor averaging targets with the sample weights.

    Features are standardised with the training mean and standard deviation.
    With ``n_neighbors=None`` the neighbourhood size is chosen from ``k_grid``
    on held-out data.
    """

    def __init__(self, n_neighbors=None, k_grid=K_GRID, random_state=0):
        self.n_neighbors = n_neighbors
        self.k_grid = k_grid
        self.random_state = random_state

    def _index(self, X, y, w):
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        self.tree_ = cKDTree((X - self.mean_) / self.scale_)
        self.y_ = y
        self.w_ = w

    def _curves(self, X, ks):
        """Predictions for every k in ``ks`` from one neighbour query."""
        k_max = min(max(ks), self.tree_.n)
        _, idx = self.tree_.query((X - self.mean_) / self.scale_, k=k_max)
        idx = idx.reshape(len(X), k_max)
        wy = np.cumsum(self.w_[idx] * self.y_[idx], axis=1)
        ww = np.cumsum(self.w_[idx], axis=1)
        out = {}
        for k in ks:
            j = min(k, k_max) - 1
            denom = ww[:, j]
            # all-zero-weight neighbourhoods fall back to the plain mean
            plain = np.cumsum(self.y_[idx], axis=1)[:, j] / (j + 1)
            out[k] = np.where(denom > 0, wy[:, j] / np.where(denom > 0, denom, 1.0), plain)
        return out

    def fit(self, X, y, sample_weight=None, eval_set=None, deadline=None):
        X, y, w = validate_fit_args(X, y, sample_weight)
        eval_set = validate_eval_set(eval_set, X.shape[1])
        self.n_features_in_ = X.shape[1]
        if self.n_neighbors is not None:
            self.k_ = int(self.n_neighbors)
            self._index(X, y, w)
            return self

        external = eval_set is not None
        (Xf, yf, wf), held = split_eval(X, y, w, eval_set, self.random_state)
        if held is None:
            self.k_ = min(5, len(y))
            self._index(X, y, w)
            return self
        self._index(Xf, yf, wf)
        Xv, yv, wv = held
        curves = self._curves(Xv, self.k_grid)
        losses = [weighted_sq_loss(yv, curves[k], wv) for k in self.k_grid]
        self.k_ = self.k_grid[int(np.argmin(losses))]
        if not external:
            self._index(X, y, w)
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("wrong number of features")
        return self._curves(X, (self.k_,))[self.k_]
