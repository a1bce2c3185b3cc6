"""Closed-form quantities of a witness: mean discrepancy, noise level, SNR,
the weighted squared loss, its affine minimiser and the optimal witness.

All moments are plug-in moments (denominator = count, or probability weights
when a population on a finite domain is given explicitly). With plug-in
moments the relation between the affinely minimised loss and the SNR holds
exactly on empirical data, not only in the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .normal import norm_cdf, norm_ppf


class DegenerateWitnessError(ValueError):
    """The witness has zero variance on both samples."""


class OutsideSupportError(ValueError):
    """Both densities vanish at the query point."""


def _prob_weights(weights, size, name):
    if weights is None:
        return None
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape != (size,):
        raise ValueError(f"{name} must have one weight per value")
    if np.any(w < 0) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12):
        raise ValueError(f"{name} must be non-negative and sum to 1")
    return w


@dataclass(frozen=True)
class WitnessValues:
    """Witness evaluated on a P-set and a Q-set.

    ``c`` defaults to ``n / (n + m)``. ``weights_p`` / ``weights_q`` turn the
    value vectors into a finite population with the given probabilities;
    without them every value counts ``1 / count``.
    """

    vals_p: np.ndarray
    vals_q: np.ndarray
    c: Optional[float] = None
    weights_p: Optional[np.ndarray] = None
    weights_q: Optional[np.ndarray] = None

    def __post_init__(self):
        vp = np.asarray(self.vals_p, dtype=float).ravel()
        vq = np.asarray(self.vals_q, dtype=float).ravel()
        if vp.size == 0 or vq.size == 0:
            raise ValueError("witness values must be non-empty on both samples")
        if not (np.all(np.isfinite(vp)) and np.all(np.isfinite(vq))):
            raise ValueError("witness values must be finite")
        c = vp.size / (vp.size + vq.size) if self.c is None else float(self.c)
        if not 0.0 < c < 1.0:
            raise ValueError(f"c must lie in (0, 1), got {c}")
        object.__setattr__(self, "vals_p", vp)
        object.__setattr__(self, "vals_q", vq)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "weights_p", _prob_weights(self.weights_p, vp.size, "weights_p"))
        object.__setattr__(self, "weights_q", _prob_weights(self.weights_q, vq.size, "weights_q"))

    @property
    def n(self):
        return self.vals_p.size

    @property
    def m(self):
        return self.vals_q.size

    def _mean(self, vals, w):
        return float(np.mean(vals)) if w is None else float(np.dot(w, vals))

    @property
    def mean_p(self):
        return self._mean(self.vals_p, self.weights_p)

    @property
    def mean_q(self):
        return self._mean(self.vals_q, self.weights_q)

    @property
    def sq_mean_p(self):
        return self._mean(self.vals_p ** 2, self.weights_p)

    @property
    def sq_mean_q(self):
        return self._mean(self.vals_q ** 2, self.weights_q)

    def _var(self, vals, w):
        if vals.min() == vals.max():
            return 0.0
        mu = self._mean(vals, w)
        return self._mean((vals - mu) ** 2, w)

    @property
    def var_p(self):
        return self._var(self.vals_p, self.weights_p)

    @property
    def var_q(self):
        return self._var(self.vals_q, self.weights_q)

    def transform(self, gamma, nu):
        """Values of ``gamma * h + nu`` with the same ``c`` and weights."""
        return WitnessValues(
            gamma * self.vals_p + nu,
            gamma * self.vals_q + nu,
            c=self.c,
            weights_p=self.weights_p,
            weights_q=self.weights_q,
        )


@dataclass(frozen=True)
class AffineCalibration:
    gamma: float = 1.0
    nu: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and math.isfinite(self.nu)):
            raise ValueError("calibration coefficients must be finite")

    def __call__(self, values):
        return self.gamma * np.asarray(values, dtype=float) + self.nu


IDENTITY = AffineCalibration()


@dataclass(frozen=True)
class DensityPair:
    """Log-densities of P and Q and the mixing fraction ``c``."""

    log_p: Callable[[np.ndarray], float]
    log_q: Callable[[np.ndarray], float]
    c: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must lie in (0, 1), got {self.c}")


def mean_discrepancy(w):
    return w.mean_p - w.mean_q


def sigma_c_squared(w):
    c = w.c
    return ((1.0 - c) * w.var_p + c * w.var_q) / (c * (1.0 - c))


def sigma_c(w):
    return math.sqrt(sigma_c_squared(w))


def snr(w):
    """Mean discrepancy divided by ``sigma_c``.

    Raises
    ------
    DegenerateWitnessError
        If the witness is constant on each sample (``sigma_c == 0``).
    """
    sigma = sigma_c(w)
    if sigma == 0.0:
        raise DegenerateWitnessError("degenerate witness: sigma_c is zero")
    return mean_discrepancy(w) / sigma


def weighted_mse(w):
    """``(1-c) E_P[(1-h)^2] + c E_Q[h^2]`` on the given values."""
    c = w.c
    loss_p = w._mean((1.0 - w.vals_p) ** 2, w.weights_p)
    loss_q = w._mean(w.vals_q ** 2, w.weights_q)
    return (1.0 - c) * loss_p + c * loss_q


def affine_calibrate(w):
    """Exact minimiser of ``(gamma, nu) -> weighted_mse(gamma * h + nu)``.

    The objective is a weighted least-squares fit of the 1/0 labels on
    ``[h, 1]`` with total weight one, so the solution follows from the
    weighted first and second moments of ``h``. A witness that is constant
    over both samples has no slope information; the best constant ``1 - c``
    is returned and the result is flagged ``degenerate``.
    """
    c = w.c
    mean_h = (1.0 - c) * w.mean_p + c * w.mean_q
    # weighted variance of h, split into within- and between-sample parts
    var_h = (1.0 - c) * w.var_p + c * w.var_q + c * (1.0 - c) * (w.mean_p - w.mean_q) ** 2
    scale = max(abs(mean_h), w.sq_mean_p, w.sq_mean_q, 1e-300)
    if var_h <= 1e-15 * scale:
        return AffineCalibration(gamma=0.0, nu=1.0 - c, degenerate=True)
    # cov(h, label) under the same weights
    cov_hy = c * (1.0 - c) * (w.mean_p - w.mean_q)
    gamma = cov_hy / var_h
    nu = (1.0 - c) - gamma * mean_h
    return AffineCalibration(gamma=float(gamma), nu=float(nu))


def lemma1_rhs(c, snr_value):
    """Minimum affine-calibrated loss predicted from the SNR: ``c(1-c)/(1+snr^2)``."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    return c * (1.0 - c) / (1.0 + snr_value ** 2)


def asymptotic_power(tau_pop, sigma, n_te, m_te, alpha):
    """Limiting rejection probability of the level-``alpha`` threshold test."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    z = math.sqrt(n_te + m_te) * tau_pop / sigma
    return norm_cdf(z - norm_ppf(1.0 - alpha))


def analytic_threshold(sigma, n_te, m_te, alpha):
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return sigma / math.sqrt(n_te + m_te) * norm_ppf(1.0 - alpha)


def optimal_witness(dp, x):
    """Population minimiser of the weighted squared loss at ``x``:
    ``(1-c) p / ((1-c) p + c q)``, evaluated as a logistic of the log-odds.
    """
    a = math.log1p(-dp.c) + float(dp.log_p(x))
    b = math.log(dp.c) + float(dp.log_q(x))
    if a == -math.inf and b == -math.inf:
        raise OutsideSupportError("both densities are zero at x")
    if math.isnan(a) or math.isnan(b):
        raise ValueError("log-density evaluated to NaN")
    diff = b - a
    if diff >= 0:
        e = math.exp(-diff)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(diff))
