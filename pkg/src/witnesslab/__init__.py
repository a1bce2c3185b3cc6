"""Witness two-sample testing: learn a witness on one half of the data by
minimising a weighted squared loss, then test its mean discrepancy on the
other half."""

from .core import Sample, SplitPlan, LabeledTrainSet, label_and_weight, read_csv, split
from .inference import (
    PipelineConfig,
    TestOutcome,
    asymptotic_pvalue,
    c2st_accuracy,
    exact_permutation_pvalue,
    interpret,
    permutation_pvalue,
    run_pipeline,
    run_test,
)
from .estimator import WitnessTwoSampleTest
from .learners import BudgetConfig, Witness, binarize, fit_auto, fit_single
from .witness_math import WitnessValues

__version__ = "0.1.0"

__all__ = [
    "BudgetConfig",
    "LabeledTrainSet",
    "PipelineConfig",
    "Sample",
    "SplitPlan",
    "TestOutcome",
    "Witness",
    "WitnessTwoSampleTest",
    "WitnessValues",
    "asymptotic_pvalue",
    "binarize",
    "c2st_accuracy",
    "exact_permutation_pvalue",
    "fit_auto",
    "fit_single",
    "interpret",
    "label_and_weight",
    "permutation_pvalue",
    "read_csv",
    "run_pipeline",
    "run_test",
    "split",
]
