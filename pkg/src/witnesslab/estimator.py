"""Estimator-style front end to the witness two-sample test."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .core import DimensionMismatchError, Sample
from .inference import PipelineConfig, run_pipeline


class WitnessTwoSampleTest(BaseEstimator):
    """Two-sample test that learns a witness function.

    ``fit(X_p, X_q)`` splits both samples, trains a witness on one part and
    tests its mean discrepancy on the other. After fitting, ``p_value_``,
    ``statistic_`` and ``reject_`` hold the result, ``outcome_`` the full
    :class:`~witnesslab.inference.TestOutcome` and ``predict`` evaluates the
    witness (high values point towards P).

    Parameters
    ----------
    alpha : float, default=0.05
    permutations : int, default=999
    method : str, default="auto"
        Witness learner: ``auto``, ``ridge``, ``knn``, ``krr``, ``gbt``,
        ``xent`` or ``bin``.
    pvalue : {"permutation", "asymptotic"}, default="permutation"
    time_limit : float, default=60.0
        Training budget in seconds.
    split_ratio : float, default=0.5
        Fraction of each sample used for training.
    cv_folds : int, default=5
    random_state : int, default=0

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> test = WitnessTwoSampleTest(permutations=199).fit(
    ...     rng.normal(size=(200, 2)), rng.normal(size=(200, 2)) + [1.0, 0.0])
    >>> bool(test.reject_)
    True
    """

    def __init__(self, alpha=0.05, permutations=999, method="auto", pvalue="permutation",
                 time_limit=60.0, split_ratio=0.5, cv_folds=5, random_state=0):
        self.alpha = alpha
        self.permutations = permutations
        self.method = method
        self.pvalue = pvalue
        self.time_limit = time_limit
        self.split_ratio = split_ratio
        self.cv_folds = cv_folds
        self.random_state = random_state

    def _config(self):
        return PipelineConfig(ratio=self.split_ratio, alpha=self.alpha, permutations=self.permutations,
                              pvalue=self.pvalue, method=self.method, time_limit=self.time_limit,
                              cv_folds=self.cv_folds, seed=int(self.random_state))

    def fit(self, X_p, X_q):
        sp = Sample(check_array(X_p, dtype=float, ensure_2d=False))
        sq = Sample(check_array(X_q, dtype=float, ensure_2d=False))
        result = run_pipeline(sp, sq, self._config())
        self.outcome_ = result.outcome
        self.witness_ = result.witness
        self.p_value_ = result.outcome.p_value
        self.statistic_ = result.outcome.tau
        self.reject_ = result.outcome.reject
        self.n_features_in_ = sp.d
        return self

    def predict(self, X):
        """Witness values of the rows of ``X``."""
        check_is_fitted(self, "witness_")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(
                f"dimension mismatch: fitted on {self.n_features_in_} columns, got {X.shape[1]}")
        return self.witness_.predict(X)

    decision_function = predict
