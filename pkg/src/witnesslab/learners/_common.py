import time

import numpy as np
from sklearn.utils.validation import check_array, check_X_y

from .._seeding import make_rng


class BudgetExceeded(Exception):
    """Raised by a learner whose fit ran past its deadline without a usable model."""


def weighted_sq_loss(y, pred, w):
    """Weighted mean squared error ``sum w (y - pred)^2 / sum w``."""
    w = np.asarray(w, dtype=float)
    return float(np.dot(w, (np.asarray(y) - np.asarray(pred)) ** 2) / w.sum())


def validate_fit_args(X, y, sample_weight):
    X, y = check_X_y(X, y, dtype=float, y_numeric=True)
    if sample_weight is None:
        sample_weight = np.full(len(y), 1.0 / len(y))
    sample_weight = np.asarray(sample_weight, dtype=float).ravel()
    if sample_weight.shape != y.shape:
        raise ValueError("sample_weight must have one entry per row")
    if np.any(sample_weight < 0) or sample_weight.sum() <= 0:
        raise ValueError("sample_weight must be non-negative with positive sum")
    return X, y, sample_weight


def validate_eval_set(eval_set, n_features):
    if eval_set is None:
        return None
    X_val, y_val, w_val = eval_set
    X_val = check_array(X_val, dtype=float)
    if X_val.shape[1] != n_features:
        raise ValueError("eval_set has a different number of features")
    y_val = np.asarray(y_val, dtype=float).ravel()
    w_val = np.full(len(y_val), 1.0 / len(y_val)) if w_val is None else np.asarray(w_val, dtype=float)
    return X_val, y_val, w_val


def holdout_indices(y, fraction, seed, min_per_group=1):
    """Random holdout split, stratified by label when ``y`` is binary.

    Returns ``(fit_idx, val_idx)`` or ``None`` when some group cannot give
    ``min_per_group`` rows to both sides.
    """
    rng = make_rng(seed)
    y = np.asarray(y)
    binary = np.all((y == 0) | (y == 1))
    groups = [np.flatnonzero(y == v) for v in (1, 0)] if binary else [np.arange(len(y))]
    fit_parts, val_parts = [], []
    for g in groups:
        if len(g) == 0:
            continue
        n_val = max(min_per_group, int(round(fraction * len(g))))
        if len(g) - n_val < min_per_group:
            return None
        perm = rng.permutation(g)
        val_parts.append(perm[:n_val])
        fit_parts.append(perm[n_val:])
    return np.sort(np.concatenate(fit_parts)), np.sort(np.concatenate(val_parts))


def split_eval(X, y, w, eval_set, seed, fraction=0.2):
    """Resolve the data used for fitting and for model selection.

    With an explicit ``eval_set`` all of ``X`` is used for fitting. Otherwise
    an internal holdout is carved out of ``X``; ``None`` means the data are
    too small for one and defaults must be used.
    """
    if eval_set is not None:
        return (X, y, w), eval_set
    split = holdout_indices(y, fraction, seed)
    if split is None:
        return (X, y, w), None
    fi, vi = split
    return (X[fi], y[fi], w[fi]), (X[vi], y[vi], w[vi])


def past(deadline, clock=time.perf_counter):
    return deadline is not None and clock() > deadline
