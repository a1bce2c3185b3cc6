"""Gradient-boosted regression trees on the weighted squared loss and on the
weighted binary cross-entropy.

Depth-limited CART trees from scikit-learn are the base learners; the
boosting loop, early stopping and time-budget checks live here.
"""

import time

import numpy as np
from scipy.special import expit, logit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.tree import DecisionTreeRegressor
from sklearn.utils.validation import check_array, check_is_fitted

from ._common import split_eval, validate_eval_set, validate_fit_args, weighted_sq_loss


def _weighted_log_loss(y, prob, w):
    prob = np.clip(prob, 1e-12, 1 - 1e-12)
    ll = -(y * np.log(prob) + (1 - y) * np.log1p(-prob))
    return float(np.dot(w, ll) / w.sum())


class _BaseBoosting(RegressorMixin, BaseEstimator):
    """Shared boosting loop.

    With ``patience=None`` all ``n_estimators`` rounds are fitted on the
    full data; otherwise rounds stop once the held-out loss (on
    ``eval_set`` or an internal holdout) has not improved for ``patience``
    rounds, and the model is cut back to its best round.
    """

    def __init__(self, n_estimators=300, learning_rate=0.1, max_depth=3,
                 min_samples_leaf=5, patience=20, random_state=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.patience = patience
        self.random_state = random_state

    # subclass hooks -----------------------------------------------------
    def _init_score(self, y, w):
        raise NotImplementedError

    def _round(self, X, y, w, F, tree):
        """Fit ``tree`` for one round; return per-node leaf values."""
        raise NotImplementedError

    def _link(self, F):
        raise NotImplementedError

    def _val_loss(self, y, F, w):
        raise NotImplementedError

    # ------------------------------------------------------------------
    def fit(self, X, y, sample_weight=None, eval_set=None, deadline=None, clock=time.perf_counter):
        X, y, w = validate_fit_args(X, y, sample_weight)
        eval_set = validate_eval_set(eval_set, X.shape[1])
        self.n_features_in_ = X.shape[1]
        if self.patience is None:
            (Xf, yf, wf), held = (X, y, w), None
        else:
            (Xf, yf, wf), held = split_eval(X, y, w, eval_set, self.random_state)

        self.init_ = self._init_score(yf, wf)
        F = np.full(len(yf), self.init_)
        Fv = None if held is None else np.full(len(held[1]), self.init_)
        trees, leaf_values = [], []
        best_loss = np.inf if held is None else self._val_loss(held[1], Fv, held[2])
        best_rounds, since_best = 0, 0
        self.budget_stopped_ = False
        for r in range(self.n_estimators):
            if deadline is not None and clock() > deadline:
                self.budget_stopped_ = True
                break
            tree = DecisionTreeRegressor(
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                random_state=int(self.random_state) % (2 ** 32),
            )
            values = self._round(Xf, yf, wf, F, tree)
            F = F + self.learning_rate * values[tree.apply(Xf)]
            trees.append(tree)
            leaf_values.append(values)
            if held is None:
                best_rounds = r + 1
                continue
            Fv = Fv + self.learning_rate * values[tree.apply(held[0])]
            loss = self._val_loss(held[1], Fv, held[2])
            if loss < best_loss - 1e-15:
                best_loss, best_rounds, since_best = loss, r + 1, 0
            else:
                since_best += 1
                if since_best >= self.patience:
                    break
        self.trees_ = trees[:best_rounds]
        self.leaf_values_ = leaf_values[:best_rounds]
        self.n_rounds_ = best_rounds
        self.validation_loss_ = best_loss
        return self

    def decision_function(self, X):
        check_is_fitted(self, "trees_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("wrong number of features")
        F = np.full(X.shape[0], self.init_)
        for tree, values in zip(self.trees_, self.leaf_values_):
            F += self.learning_rate * values[tree.apply(X)]
        return F

    def predict(self, X):
        return self._link(self.decision_function(X))


class SquaredLossBoosting(_BaseBoosting):
    """Least-squares boosting: each tree fits the current residuals."""

    def _init_score(self, y, w):
        return float(np.dot(w, y) / w.sum())

    def _round(self, X, y, w, F, tree):
        tree.fit(X, y - F, sample_weight=w)
        return tree.tree_.value[:, 0, 0].copy()

    def _link(self, F):
        return F

    def _val_loss(self, y, F, w):
        return weighted_sq_loss(y, F, w)


class CrossEntropyBoosting(_BaseBoosting):
    """Logistic boosting on 0/1 targets; ``predict`` returns P(label 1 | x).

    Trees are grown on the gradient of the weighted log-loss and their
    leaves take one Newton step.
    """

    def _init_score(self, y, w):
        p = np.clip(np.dot(w, y) / w.sum(), 1e-6, 1 - 1e-6)
        return float(logit(p))

    def _round(self, X, y, w, F, tree):
        p = expit(F)
        tree.fit(X, y - p, sample_weight=w)
        leaves = tree.apply(X)
        num = np.bincount(leaves, weights=w * (y - p), minlength=tree.tree_.node_count)
        den = np.bincount(leaves, weights=w * p * (1 - p), minlength=tree.tree_.node_count)
        values = np.where(den > 1e-12, num / np.maximum(den, 1e-12), 0.0)
        return np.clip(values, -10.0, 10.0)

    def _link(self, F):
        return expit(F)

    def _val_loss(self, y, F, w):
        return _weighted_log_loss(y, expit(F), w)
