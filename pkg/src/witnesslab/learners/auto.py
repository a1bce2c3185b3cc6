"""Budgeted witness training: candidate learners, holdout selection, greedy
ensembling and affine calibration of the result.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .._seeding import child_seed, make_rng
from ..core import DimensionMismatchError, InsufficientDataError
from ..witness_math import (
    IDENTITY,
    AffineCalibration,
    DegenerateWitnessError,
    WitnessValues,
    affine_calibrate,
    snr,
    weighted_mse,
)
from ._common import holdout_indices
from .boosting import CrossEntropyBoosting, SquaredLossBoosting
from .kernel import WeightedKernelRidge
from .linear import ConstantRegressor, WeightedRidge
from .neighbors import WeightedKNNRegressor

LEARNER_KINDS = ("constant", "ridge", "knn", "kernel_ridge", "boosted_trees", "xent_trees")
DEFAULT_CANDIDATES = LEARNER_KINDS


def make_learner(kind, seed=0):
    if kind == "constant":
        return ConstantRegressor()
    if kind == "ridge":
        return WeightedRidge(random_state=seed)
    if kind == "knn":
        return WeightedKNNRegressor(random_state=seed)
    if kind == "kernel_ridge":
        return WeightedKernelRidge(random_state=seed)
    if kind == "boosted_trees":
        return SquaredLossBoosting(random_state=seed)
    if kind == "xent_trees":
        return CrossEntropyBoosting(random_state=seed)
    raise ValueError(f"unknown learner kind {kind!r}; expected one of {LEARNER_KINDS}")


class GreedyEnsemble:
    """Average of fitted members, repeated according to ``counts``."""

    def __init__(self, members, counts):
        self.members = list(members)
        self.counts = np.asarray(counts, dtype=float)

    def predict(self, X):
        total = np.zeros(np.asarray(X).shape[0])
        for member, k in zip(self.members, self.counts):
            if k:
                total += k * member.predict(X)
        return total / self.counts.sum()


class _Bagged:
    """Average of models fitted on different folds."""

    def __init__(self, models):
        self.models = list(models)

    def predict(self, X):
        return sum(m.predict(X) for m in self.models) / len(self.models)


class _Binarized:
    def __init__(self, inner, threshold):
        self.inner = inner
        self.threshold = threshold

    def predict(self, X):
        return (self.inner.predict(X) >= self.threshold).astype(float)


@dataclass(frozen=True)
class Witness:
    """A fitted witness ``x -> gamma * base(x) + nu``.

    ``kind`` names the base (a learner kind, ``"ensemble"`` or
    ``"binarized"``); ``info`` carries training diagnostics such as
    ``train_loss``, ``validation_loss``, ``fit_seconds`` and flags like
    ``budget_exhausted``.
    """

    base: object
    n_features: int
    kind: str
    calibration: AffineCalibration = IDENTITY
    info: dict = field(default_factory=dict)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[1] != self.n_features:
            raise DimensionMismatchError(
                f"dimension mismatch: witness expects {self.n_features} columns, got {X.shape[1]}"
            )
        return self.calibration(self.base.predict(X))

    __call__ = predict


def predict(w, xs):
    return w.predict(xs)


def binarize(w, threshold=0.5):
    """Witness emitting 1 where ``w(x) >= threshold`` and 0 elsewhere."""
    info = dict(w.info, threshold=threshold)
    return Witness(base=_Binarized(w, threshold), n_features=w.n_features, kind="binarized", info=info)


def constant_witness(c, n_features, **flags):
    """The best constant ``1 - c`` of the weighted squared loss."""
    base = ConstantRegressor()
    base.constant_ = 1.0 - c
    base.n_features_in_ = n_features
    return Witness(base=base, n_features=n_features, kind="constant", info=dict(flags))


@dataclass(frozen=True)
class BudgetConfig:
    """Resources and search space for :func:`fit_auto`.

    ``time_limit`` is wall-clock seconds and may be ``math.inf``.
    ``cv_folds`` is the number of cross-fitting folds; 1 means a single
    holdout of ``validation_fraction`` of the rows.
    ``clock`` is injectable for deterministic budget tests.
    """

    time_limit: float = 60.0
    validation_fraction: float = 0.2
    candidate_set: Sequence[str] = DEFAULT_CANDIDATES
    seed: int = 0
    ensemble_max_members: int = 25
    cv_folds: int = 5
    clock: Callable[[], float] = time.perf_counter

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")
        for kind in self.candidate_set:
            if kind not in LEARNER_KINDS:
                raise ValueError(f"unknown learner kind {kind!r}")
        if self.cv_folds < 1:
            raise ValueError("cv_folds must be >= 1")
        if self.ensemble_max_members < 1:
            raise ValueError("ensemble_max_members must be >= 1")


def _values(pred, labels, c):
    return WitnessValues(pred[labels == 1], pred[labels == 0], c=c)


def fit_single(kind, data, seed=0):
    """Fit one learner on the whole training set (internal holdout only)."""
    t0 = time.perf_counter()
    model = make_learner(kind, seed).fit(data.features, data.labels, sample_weight=data.sample_weight)
    train_pred = model.predict(data.features)
    info = {
        "train_loss": weighted_mse(_values(train_pred, data.labels, data.c)),
        "fit_seconds": time.perf_counter() - t0,
    }
    return Witness(base=model, n_features=data.features.shape[1], kind=kind, info=info)


def greedy_ensemble(val_preds, loss_fn, max_members):
    """Forward selection with replacement over candidate prediction vectors.

    Returns ``(counts, losses)`` where ``losses[i]`` is the loss after the
    ``i+1``-th draw. Stops early when no draw improves the loss, so
    ``losses`` is non-increasing. Ties go to the lower candidate index.
    """
    k = len(val_preds)
    counts = np.zeros(k, dtype=int)
    running = np.zeros_like(val_preds[0])
    losses = []
    for draw in range(max_members):
        trial = [loss_fn((running + p) / (draw + 1)) for p in val_preds]
        j = int(np.argmin(trial))
        if losses and trial[j] >= losses[-1]:
            break
        counts[j] += 1
        running = running + val_preds[j]
        losses.append(trial[j])
    return counts, losses


def _snr_or_none(values):
    try:
        return snr(values)
    except DegenerateWitnessError:
        return None


def _fold_plan(labels, folds, fraction, seed):
    """List of ``(fit_idx, val_idx)`` pairs.

    ``folds >= 2`` gives stratified cross-fitting, used only when every label
    has at least ``2 * folds`` rows; otherwise, and for ``folds == 1``, a
    single stratified holdout of size ``fraction``.
    """
    counts = [int(np.sum(labels == v)) for v in (0, 1)]
    if folds >= 2 and min(counts) >= 2 * folds:
        rng = make_rng(seed)
        assign = np.empty(len(labels), dtype=int)
        for v in (0, 1):
            g = rng.permutation(np.flatnonzero(labels == v))
            assign[g] = np.arange(len(g)) % folds
        return [(np.flatnonzero(assign != f), np.flatnonzero(assign == f)) for f in range(folds)]
    split = holdout_indices(labels, fraction, seed, min_per_group=2)
    if split is None:
        raise InsufficientDataError("insufficient data: need >= 2 rows per label in the validation split")
    return [split]


def fit_auto(data, cfg=BudgetConfig()):
    """Train a calibrated witness on a labelled training set within a time budget.

    Candidates are fitted in ``cfg.candidate_set`` order and scored by the
    weighted squared loss, with the training ``c``, on held-out rows: a single
    stratified holdout when ``cfg.cv_folds == 1``, out-of-fold predictions
    over the whole training set otherwise. With cross-fitting a candidate's
    model is the average of its fold models. A candidate is not started once
    the budget is spent, and a non-boosting candidate that finishes late is
    dropped. The constant learner is always fitted, so the result never
    loses to it on the held-out rows.

    Raises
    ------
    InsufficientDataError
        If the holdout cannot hold two rows per label with two left to fit.
    """
    if not cfg.candidate_set:
        raise ValueError("empty candidate set")
    clock = cfg.clock
    t0 = clock()
    deadline = t0 + cfg.time_limit if math.isfinite(cfg.time_limit) else None
    d = data.features.shape[1]
    X, y, sw = data.features, data.labels, data.sample_weight
    c = data.c
    plan = _fold_plan(y, cfg.cv_folds, cfg.validation_fraction, child_seed(cfg.seed, 0))
    vi = np.concatenate([v for _, v in plan])
    yv = y[vi]

    def val_loss(pred):
        return weighted_mse(_values(pred, yv, c))

    def fit_folds(kind, seed):
        models, preds, stopped = [], [], False
        for f, (fi, fv) in enumerate(plan):
            model = make_learner(kind, child_seed(seed, f))
            fit_kwargs = dict(sample_weight=sw[fi], eval_set=(X[fv], y[fv], sw[fv]), deadline=deadline)
            if isinstance(model, (SquaredLossBoosting, CrossEntropyBoosting)):
                fit_kwargs["clock"] = clock
            model.fit(X[fi], y[fi], **fit_kwargs)
            stopped = stopped or getattr(model, "budget_stopped_", False)
            models.append(model)
            preds.append(model.predict(X[fv]))
        base = models[0] if len(models) == 1 else _Bagged(models)
        return base, np.concatenate(preds), stopped

    fitted, names, val_preds, skipped = [], [], [], []
    const, pred, _ = fit_folds("constant", 0)
    fitted.append(const)
    names.append("constant")
    val_preds.append(pred)

    for i, kind in enumerate(cfg.candidate_set):
        if kind == "constant":
            continue
        if deadline is not None and clock() > deadline:
            skipped.append(kind)
            continue
        model, pred, stopped = fit_folds(kind, child_seed(cfg.seed, i + 1))
        late = deadline is not None and clock() > deadline
        if late and (not stopped or val_loss(pred) >= val_loss(val_preds[0])):
            skipped.append(kind)
            continue
        fitted.append(model)
        names.append(kind)
        val_preds.append(pred)

    info = {"candidates": names, "skipped": skipped, "folds": len(plan)}
    if len(fitted) == 1:
        info["budget_exhausted"] = bool(skipped)
        base, kind, v_pred = const, "constant", val_preds[0]
    else:
        counts, losses = greedy_ensemble(val_preds, val_loss, cfg.ensemble_max_members)
        info["ensemble_counts"] = dict(zip(names, counts.tolist()))
        info["ensemble_losses"] = losses
        nz = np.flatnonzero(counts)
        if len(nz) == 1:
            base, kind = fitted[nz[0]], names[nz[0]]
        else:
            base, kind = GreedyEnsemble(fitted, counts), "ensemble"
        v_pred = sum(counts[j] * val_preds[j] for j in nz) / counts.sum()

    cal = affine_calibrate(_values(v_pred, yv, c))
    info["validation_loss"] = val_loss(cal(v_pred))
    info["validation_snr"] = _snr_or_none(_values(cal(v_pred), yv, c))
    info["constant_validation_loss"] = val_loss(val_preds[0])
    info["train_loss"] = weighted_mse(_values(cal(base.predict(X)), y, c))
    info["degenerate"] = cal.degenerate
    info["fit_seconds"] = clock() - t0
    return Witness(base=base, n_features=d, kind=kind, calibration=cal, info=info)
