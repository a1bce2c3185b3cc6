import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.distance import cdist, pdist
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .._seeding import make_rng
from ._common import split_eval, validate_eval_set, validate_fit_args, weighted_sq_loss

BANDWIDTH_FACTORS = (0.25, 0.5, 1.0)
KERNEL_ALPHAS = (1e-5, 1e-4, 1e-3, 1e-2)
MAX_KERNEL_ROWS = 2000


def _median_distance(Z, rng, max_rows=1000):
    if len(Z) > max_rows:
        Z = Z[rng.choice(len(Z), max_rows, replace=False)]
    d = pdist(Z)
    d = d[d > 0]
    return float(np.median(d)) if d.size else 1.0


def _subsample(y, w, max_rows, rng):
    """Row subset of size ``max_rows`` keeping each label's total weight."""
    idx = np.sort(rng.choice(len(y), max_rows, replace=False))
    w_sub = w[idx].copy()
    for v in np.unique(y):
        full, part = w[y == v].sum(), w_sub[y[idx] == v].sum()
        if part > 0:
            w_sub[y[idx] == v] *= full / part
    return idx, w_sub


class WeightedKernelRidge(RegressorMixin, BaseEstimator):
    """Gaussian-kernel ridge regression on standardised features.

    Minimises ``sum_i w_i (y_i - f(x_i))^2 + alpha * ||f||^2`` over an RKHS
    plus a constant, with weights normalised to sum to one. With
    ``bandwidth=None`` the bandwidth (as a multiple of the median pairwise
    distance) and ``alpha`` are chosen from the fixed grids on held-out
    data. More than ``max_rows`` rows are subsampled before fitting.
    """

    def __init__(self, bandwidth=None, alpha=1e-3, factors=BANDWIDTH_FACTORS,
                 alphas=KERNEL_ALPHAS, max_rows=MAX_KERNEL_ROWS, random_state=0):
        self.bandwidth = bandwidth
        self.alpha = alpha
        self.factors = factors
        self.alphas = alphas
        self.max_rows = max_rows
        self.random_state = random_state

    def _gram(self, A, B, bw):
        return np.exp(-cdist(A, B, "sqeuclidean") / (2.0 * bw * bw))

    def _solve(self, K, y, w, alpha):
        w = w / w.sum()
        offset = float(w @ y)
        s = np.sqrt(w)
        A = s[:, None] * K * s[None, :]
        A[np.diag_indices_from(A)] += alpha
        try:
            beta = cho_solve(cho_factor(A), s * (y - offset))
        except LinAlgError:
            beta = np.linalg.lstsq(A, s * (y - offset), rcond=None)[0]
        return s * beta, offset

    def fit(self, X, y, sample_weight=None, eval_set=None, deadline=None):
        X, y, w = validate_fit_args(X, y, sample_weight)
        eval_set = validate_eval_set(eval_set, X.shape[1])
        self.n_features_in_ = X.shape[1]
        rng = make_rng(self.random_state)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        Z = (X - self.mean_) / self.scale_
        if len(y) > self.max_rows:
            idx, w = _subsample(y, w, self.max_rows, rng)
            Z, y = Z[idx], y[idx]
        med = _median_distance(Z, rng)

        if self.bandwidth is not None:
            self.bandwidth_, self.alpha_ = float(self.bandwidth), float(self.alpha)
            self._store(Z, y, w)
            return self

        external = eval_set is not None
        if external:
            Zv = (eval_set[0] - self.mean_) / self.scale_
            (Zf, yf, wf), (_, yv, wv) = (Z, y, w), eval_set
        else:
            (Zf, yf, wf), held = split_eval(Z, y, w, None, self.random_state)
            if held is None:
                self.bandwidth_, self.alpha_ = 0.5 * med, float(self.alpha)
                self._store(Z, y, w)
                return self
            Zv, yv, wv = held
        best = None
        for f in self.factors:
            bw = f * med
            K, Kv = self._gram(Zf, Zf, bw), self._gram(Zv, Zf, bw)
            for a in self.alphas:
                coef, offset = self._solve(K, yf, wf, a)
                loss = weighted_sq_loss(yv, Kv @ coef + offset, wv)
                if best is None or loss < best[0]:
                    best = (loss, bw, a, coef, offset)
        self.bandwidth_, self.alpha_ = best[1], best[2]
        if external:
            self.support_, self.dual_coef_, self.offset_ = Zf, best[3], best[4]
        else:
            self._store(Z, y, w)
        return self

    def _store(self, Z, y, w):
        self.support_ = Z
        self.dual_coef_, self.offset_ = self._solve(self._gram(Z, Z, self.bandwidth_), y, w, self.alpha_)

    def predict(self, X):
        check_is_fitted(self, "dual_coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("wrong number of features")
        Z = (X - self.mean_) / self.scale_
        out = np.empty(len(Z))
        for start in range(0, len(Z), 4096):
            block = self._gram(Z[start:start + 4096], self.support_, self.bandwidth_)
            out[start:start + 4096] = block @ self.dual_coef_ + self.offset_
        return out
