"""Testing stage: p-values from witness values, the end-to-end pipeline,
interpretation of the fitted witness and the classifier-accuracy mapping.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._seeding import child_seed, make_rng
from .core import DimensionMismatchError, InsufficientDataError, Sample, label_and_weight, split
from .learners import BudgetConfig, Witness, binarize, constant_witness, fit_auto
from .normal import norm_sf
from .witness_math import WitnessValues, mean_discrepancy, sigma_c

PERMUTATION_BATCH = 500
MAX_EXACT_SPLITS = 10 ** 6
_TINY = np.nextafter(0.0, 1.0)

OUTCOME_KEYS = ("tau", "p_value", "method", "B", "T", "sigma_hat", "snr_hat", "reject", "alpha", "seed")


@dataclass(frozen=True)
class TestOutcome:
    """Result of one two-sample test.

    Serialises to a JSON object with the keys in ``OUTCOME_KEYS``;
    ``flags`` holds extra diagnostics that are not serialised.
    """

    __test__ = False  # not a pytest class

    tau: float
    p_value: float
    method: str
    B: int
    T: int
    sigma_hat: Optional[float]
    snr_hat: Optional[float]
    alpha: float
    seed: int
    flags: dict = field(default_factory=dict, compare=False)

    @property
    def reject(self):
        return self.p_value <= self.alpha

    def to_dict(self):
        return {key: getattr(self, key) for key in OUTCOME_KEYS}

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _diagnostics(w):
    sigma = sigma_c(w)
    snr = mean_discrepancy(w) / sigma if sigma > 0 else None
    return sigma, snr


def _stat(pooled_sum, total, n, m):
    return pooled_sum / n - (total - pooled_sum) / m


def pvalue_from_counts(T, B):
    """Permutation p-value ``(T + 1) / (B + 1)``; ``T`` counts permuted
    statistics at least as large as the observed one among ``B``."""
    if B < 1 or not 0 <= T <= B:
        raise ValueError("need B >= 1 and 0 <= T <= B")
    return (T + 1) / (B + 1)


def _count_batch(pooled, n, m, total, tau, tol, size, seed):
    rng = make_rng(seed)
    perms = rng.permuted(np.broadcast_to(pooled, (size, pooled.size)), axis=1)
    taus = _stat(perms[:, :n].sum(axis=1), total, n, m)
    return int(np.count_nonzero(taus >= tau - tol))


def permutation_pvalue(w, B=999, seed=0, alpha=0.05, workers=1):
    """One-sided permutation p-value ``(T + 1) / (B + 1)``.

    The pooled witness values are shuffled ``B`` times and re-split into
    groups of the original sizes; ``T`` counts permuted statistics at least
    as large as the observed one (ties included). Permutations are drawn in
    fixed-size batches with seeds derived from ``seed``, so the result does
    not depend on ``workers``.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    pooled = np.concatenate([w.vals_p, w.vals_q])
    n, m = w.n, w.m
    total = pooled.sum()
    tau = _stat(pooled[:n].sum(), total, n, m)
    tol = 1e-12 * float(np.max(np.abs(pooled)))
    sizes = [min(PERMUTATION_BATCH, B - start) for start in range(0, B, PERMUTATION_BATCH)]
    jobs = [(pooled, n, m, total, tau, tol, size, child_seed(seed, b)) for b, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            T = sum(pool.map(lambda job: _count_batch(*job), jobs))
    else:
        T = sum(_count_batch(*job) for job in jobs)
    sigma, snr = _diagnostics(w)
    return TestOutcome(
        tau=float(tau), p_value=pvalue_from_counts(T, B), method="permutation", B=int(B), T=int(T),
        sigma_hat=sigma, snr_hat=snr, alpha=alpha, seed=int(seed),
    )


def exact_permutation_pvalue(w):
    """Fraction of all ``C(n+m, n)`` splits whose statistic is ``>= tau``.

    The identity split is one of them, so the result is at least
    ``1 / C(n+m, n)``.
    """
    pooled = np.concatenate([w.vals_p, w.vals_q])
    n, m = w.n, w.m
    count = math.comb(n + m, n)
    if count > MAX_EXACT_SPLITS:
        raise ValueError(f"{count} splits exceed the enumeration limit of {MAX_EXACT_SPLITS}")
    total = pooled.sum()
    tau = _stat(pooled[:n].sum(), total, n, m)
    tol = 1e-12 * float(np.max(np.abs(pooled)))
    combos = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n + m), n)),
        dtype=np.int64, count=count * n,
    ).reshape(count, n)
    taus = _stat(pooled[combos].sum(axis=1), total, n, m)
    return int(np.count_nonzero(taus >= tau - tol)) / count


def asymptotic_pvalue(w, alpha=0.05, seed=0):
    """Normal-approximation p-value ``1 - Phi(sqrt(n + m) * tau / sigma_hat)``.

    A witness with ``sigma_hat == 0`` gets ``p = 1`` and the ``degenerate``
    flag.
    """
    tau = mean_discrepancy(w)
    sigma, snr = _diagnostics(w)
    if sigma == 0.0:
        return TestOutcome(tau=tau, p_value=1.0, method="asymptotic", B=0, T=0, sigma_hat=0.0,
                           snr_hat=None, alpha=alpha, seed=int(seed), flags={"degenerate": True})
    p = max(norm_sf(math.sqrt(w.n + w.m) * tau / sigma), _TINY)
    return TestOutcome(tau=tau, p_value=p, method="asymptotic", B=0, T=0, sigma_hat=sigma,
                       snr_hat=snr, alpha=alpha, seed=int(seed))


LEARNER_METHODS = {
    "auto": None,
    "ridge": ("constant", "ridge"),
    "gbt": ("constant", "boosted_trees"),
    "knn": ("constant", "knn"),
    "krr": ("constant", "kernel_ridge"),
    "xent": ("constant", "xent_trees"),
    "bin": None,
}


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of :func:`run_test`.

    ``method`` picks the witness learner (``auto`` uses every candidate,
    ``bin`` thresholds the ``auto`` witness at 1/2); ``pvalue`` is
    ``"permutation"`` or ``"asymptotic"``.
    """

    ratio: float = 0.5
    alpha: float = 0.05
    permutations: int = 999
    pvalue: str = "permutation"
    method: str = "auto"
    time_limit: float = 60.0
    validation_fraction: float = 0.2
    cv_folds: int = 5
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.permutations < 1:
            raise ValueError("permutations must be >= 1")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        if self.pvalue not in ("permutation", "asymptotic"):
            raise ValueError(f"unknown p-value method {self.pvalue!r}")
        if self.method not in LEARNER_METHODS:
            raise ValueError(f"unknown witness method {self.method!r}")

    def budget(self):
        kw = dict(time_limit=self.time_limit, validation_fraction=self.validation_fraction,
                  cv_folds=self.cv_folds, seed=child_seed(self.seed, 1))
        if LEARNER_METHODS[self.method] is not None:
            kw["candidate_set"] = LEARNER_METHODS[self.method]
        return BudgetConfig(**kw)


@dataclass(frozen=True)
class PipelineResult:
    outcome: TestOutcome
    witness: Witness
    plan: object
    test_p: Sample
    test_q: Sample
    values: WitnessValues


def fit_witness(train_p, train_q, cfg):
    """Training stage of the pipeline; tiny inputs yield a flagged constant witness."""
    data = label_and_weight(train_p, train_q)
    try:
        witness = fit_auto(data, cfg.budget())
    except InsufficientDataError:
        witness = constant_witness(data.c, train_p.d, insufficient_training_data=True)
    if cfg.method == "bin":
        witness = binarize(witness, 0.5)
    return witness


def evaluate_witness(witness, test_p, test_q):
    """Evaluate once on the pooled test rows and split the values by origin."""
    vals = witness.predict(np.vstack([test_p.rows, test_q.rows]))
    return WitnessValues(vals[: test_p.n], vals[test_p.n:])


def compute_pvalue(values, cfg):
    seed = child_seed(cfg.seed, 2)
    if cfg.pvalue == "asymptotic":
        out = asymptotic_pvalue(values, alpha=cfg.alpha)
    else:
        out = permutation_pvalue(values, B=cfg.permutations, seed=seed, alpha=cfg.alpha, workers=cfg.workers)
    return TestOutcome(
        tau=out.tau, p_value=out.p_value, method=out.method, B=out.B, T=out.T,
        sigma_hat=out.sigma_hat, snr_hat=out.snr_hat, alpha=cfg.alpha, seed=int(cfg.seed),
        flags=dict(out.flags),
    )


def run_pipeline(sp, sq, cfg=PipelineConfig()):
    """Split, train the witness, evaluate it on the held-out rows and test."""
    if sp.d != sq.d:
        raise DimensionMismatchError(f"dimension mismatch: P has {sp.d} columns, Q has {sq.d}")
    plan = split(sp, sq, cfg.ratio, child_seed(cfg.seed, 0))
    train_p, test_p, train_q, test_q = plan.apply(sp, sq)
    witness = fit_witness(train_p, train_q, cfg)
    values = evaluate_witness(witness, test_p, test_q)
    outcome = compute_pvalue(values, cfg)
    flags = {k: v for k, v in witness.info.items()
             if k in ("budget_exhausted", "degenerate", "insufficient_training_data") and v}
    outcome.flags.update(flags)
    return PipelineResult(outcome=outcome, witness=witness, plan=plan, test_p=test_p,
                          test_q=test_q, values=values)


def run_test(sp, sq, cfg=PipelineConfig()):
    """Full witness two-sample test; returns a :class:`TestOutcome`."""
    return run_pipeline(sp, sq, cfg).outcome


@dataclass(frozen=True)
class InterpretedRow:
    index: int
    origin: str
    value: float
    features: tuple


@dataclass(frozen=True)
class Interpretation:
    highest: list
    lowest: list
    k: int
    clamped: bool = False


def interpret(witness, test_p, test_q, k=10):
    """Pooled test rows with the ``k`` highest and ``k`` lowest witness values.

    High values point to regions more likely under P, low values to Q.
    ``index`` is the position in the pooled rows (P rows first); ties are
    broken by that index.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rows = np.vstack([test_p.rows, test_q.rows])
    origins = ["P"] * test_p.n + ["Q"] * test_q.n
    vals = witness.predict(rows)
    clamped = False
    if k > len(vals):
        warnings.warn(f"k={k} exceeds the {len(vals)} pooled rows; reporting all of them")
        k, clamped = len(vals), True
    idx = np.arange(len(vals))
    order_hi = np.lexsort((idx, -vals))
    order_lo = np.lexsort((idx, vals))

    def entries(order):
        return [InterpretedRow(int(i), origins[i], float(vals[i]), tuple(float(x) for x in rows[i]))
                for i in order[:k]]

    return Interpretation(highest=entries(order_hi), lowest=entries(order_lo), k=k, clamped=clamped)


def c2st_accuracy(w_binary):
    """Classification accuracy ``1/2 + tau/2`` of a 0/1 witness on balanced sets."""
    vals = np.concatenate([w_binary.vals_p, w_binary.vals_q])
    if not np.all((vals == 0) | (vals == 1)):
        raise ValueError("c2st_accuracy requires binary (0/1) witness values")
    if w_binary.n != w_binary.m:
        raise ValueError("c2st_accuracy requires balanced test sets (n == m)")
    return 0.5 + 0.5 * mean_discrepancy(w_binary)
