"""Comparator tests: quadratic-time MMD with permutations, the rank-one kernel
built from a witness, and the F-test of equal variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.special import betainc

from ._seeding import child_seed, make_rng
from .core import DimensionMismatchError, InsufficientDataError
from .inference import PERMUTATION_BATCH, TestOutcome, pvalue_from_counts

MEDIAN = "median"


@dataclass(frozen=True)
class KernelSpec:
    """``gaussian``: ``exp(-|x - y|^2 / (2 bandwidth^2))``, bandwidth a positive
    float or ``"median"``. ``rank_one``: ``h_fn(x) * h_fn(y)``.
    """

    kind: str = "gaussian"
    bandwidth: Union[float, str] = MEDIAN
    h_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "rank_one"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rank_one" and self.h_fn is None:
            raise ValueError("rank_one kernel needs h_fn")
        if self.kind == "gaussian" and self.bandwidth != MEDIAN and not float(self.bandwidth) > 0:
            raise ValueError("gaussian bandwidth must be positive")


def median_heuristic(pooled):
    """Median of the non-zero pairwise Euclidean distances of the pooled rows."""
    d = pdist(pooled)
    d = d[d > 0]
    return float(np.median(d)) if d.size else 1.0


def _check_pair(sp, sq):
    if sp.d != sq.d:
        raise DimensionMismatchError(f"dimension mismatch: {sp.d} vs {sq.d} columns")
    if sp.n < 2 or sq.n < 2:
        raise InsufficientDataError("MMD needs at least two rows per sample")


def _bandwidth(kernel, X, Y):
    if kernel.bandwidth == MEDIAN:
        return median_heuristic(np.vstack([X, Y]))
    return float(kernel.bandwidth)


def gram(kernel, A, B, bandwidth=None):
    if kernel.kind == "rank_one":
        return np.outer(np.asarray(kernel.h_fn(A), dtype=float), np.asarray(kernel.h_fn(B), dtype=float))
    return np.exp(-cdist(A, B, "sqeuclidean") / (2.0 * bandwidth ** 2))


def mmd2_unbiased(sp, sq, kernel=KernelSpec()):
    """Unbiased estimate of the squared MMD.

    Block sums use exactly rounded summation, so swapping the samples gives
    a bitwise identical value.
    """
    _check_pair(sp, sq)
    X, Y = sp.rows, sq.rows
    bw = None if kernel.kind == "rank_one" else _bandwidth(kernel, X, Y)
    n, m = len(X), len(Y)
    Kxx, Kyy, Kxy = gram(kernel, X, X, bw), gram(kernel, Y, Y, bw), gram(kernel, X, Y, bw)
    xx = (math.fsum(Kxx.ravel()) - math.fsum(np.diag(Kxx))) / (n * (n - 1))
    yy = (math.fsum(Kyy.ravel()) - math.fsum(np.diag(Kyy))) / (m * (m - 1))
    xy = math.fsum(Kxy.ravel()) / (n * m)
    return (xx + yy) - 2.0 * xy


def _mmd2_from_masks(K, diag, masks, n, m):
    """Unbiased MMD^2 for each row of the 0/1 ``masks`` (1 = first sample)."""
    A = masks
    Bm = 1.0 - masks
    KA = A @ K
    s_aa = np.einsum("ij,ij->i", KA, A)
    s_ab = np.einsum("ij,ij->i", KA, Bm)
    s_bb = K.sum() - s_aa - 2.0 * s_ab
    tr_a = A @ diag
    tr_b = diag.sum() - tr_a
    return (s_aa - tr_a) / (n * (n - 1)) + (s_bb - tr_b) / (m * (m - 1)) - 2.0 * s_ab / (n * m)


def mmd_permutation_test(sp, sq, kernel=KernelSpec(), B=999, seed=0, alpha=0.05):
    """MMD test with a permutation threshold; the pooled Gram matrix is built
    once and re-indexed for each permutation.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    _check_pair(sp, sq)
    X, Y = sp.rows, sq.rows
    n, m = len(X), len(Y)
    Z = np.vstack([X, Y])
    bw = None if kernel.kind == "rank_one" else _bandwidth(kernel, X, Y)
    K = gram(kernel, Z, Z, bw)
    diag = np.diag(K).copy()
    identity = np.zeros((1, n + m))
    identity[0, :n] = 1.0
    observed = _mmd2_from_masks(K, diag, identity, n, m)[0]
    tol = 1e-12 * max(1.0, float(np.max(np.abs(K))))
    T = 0
    for b, start in enumerate(range(0, B, PERMUTATION_BATCH)):
        size = min(PERMUTATION_BATCH, B - start)
        rng = make_rng(child_seed(seed, b))
        keys = rng.random((size, n + m))
        masks = (np.argsort(keys, axis=1) < n).astype(float)
        # rows of ``masks`` mark the positions drawn into the first group
        stats = _mmd2_from_masks(K, diag, masks, n, m)
        T += int(np.count_nonzero(stats >= observed - tol))
    return TestOutcome(
        tau=float(observed), p_value=pvalue_from_counts(T, B), method="mmd_permutation", B=int(B), T=T,
        sigma_hat=None, snr_hat=None, alpha=alpha, seed=int(seed), flags={"bandwidth": bw},
    )


def rank_one_mmd_witness(h_vals_on_grid, p_weights, q_weights):
    """MMD witness ``mu_P - mu_Q`` of the kernel ``h(x) h(x')`` on a finite domain.

    Equals ``h(x') * (E_P h - E_Q h)``, i.e. a multiple of ``h``.
    """
    h = np.asarray(h_vals_on_grid, dtype=float)
    p = np.asarray(p_weights, dtype=float)
    q = np.asarray(q_weights, dtype=float)
    if not (h.shape == p.shape == q.shape):
        raise ValueError("h, p_weights and q_weights must have the same length")
    for name, w in (("p_weights", p), ("q_weights", q)):
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"{name} must be a probability vector (sum 1 within 1e-12)")
    return h * (float(p @ h) - float(q @ h))


def f_cdf(x, d1, d2):
    """CDF of the F distribution through the regularised incomplete beta."""
    if x <= 0:
        return 0.0
    return float(betainc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2)))


def f_sf(x, d1, d2):
    if x <= 0:
        return 1.0
    return float(betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x)))


def f_test_equal_variance(x, y):
    """Two-sided F-test p-value ``2 min(F_cdf, 1 - F_cdf)`` for equal variances."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise ValueError("f_test requires 1-dimensional data")
        x = x[:, 0]
    if y.ndim == 2:
        if y.shape[1] != 1:
            raise ValueError("f_test requires 1-dimensional data")
        y = y[:, 0]
    if len(x) < 2 or len(y) < 2:
        raise InsufficientDataError("f_test needs at least two observations per sample")
    vx, vy = np.var(x, ddof=1), np.var(y, ddof=1)
    if vx == 0 or vy == 0:
        raise ValueError("f_test undefined: zero variance in a sample")
    ratio = vx / vy
    d1, d2 = len(x) - 1, len(y) - 1
    return min(1.0, 2.0 * min(f_cdf(ratio, d1, d2), f_sf(ratio, d1, d2)))


def f_test_outcome(sp, sq, alpha=0.05, seed=0):
    """F-test packaged as a :class:`TestOutcome` (``tau`` is the variance ratio)."""
    if sp.d != 1 or sq.d != 1:
        raise ValueError("f_test requires 1-dimensional data")
    p = f_test_equal_variance(sp.rows[:, 0], sq.rows[:, 0])
    ratio = float(np.var(sp.rows[:, 0], ddof=1) / np.var(sq.rows[:, 0], ddof=1))
    return TestOutcome(tau=ratio, p_value=p, method="f_test", B=0, T=0, sigma_hat=None,
                       snr_hat=None, alpha=alpha, seed=int(seed))
