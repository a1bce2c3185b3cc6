from .auto import (
    DEFAULT_CANDIDATES,
    LEARNER_KINDS,
    BudgetConfig,
    GreedyEnsemble,
    Witness,
    binarize,
    constant_witness,
    fit_auto,
    fit_single,
    greedy_ensemble,
    make_learner,
    predict,
)
from .boosting import CrossEntropyBoosting, SquaredLossBoosting
from .kernel import BANDWIDTH_FACTORS, KERNEL_ALPHAS, WeightedKernelRidge
from .linear import RIDGE_GRID, ConstantRegressor, WeightedRidge
from .neighbors import K_GRID, WeightedKNNRegressor

__all__ = [
    "BANDWIDTH_FACTORS",
    "BudgetConfig",
    "ConstantRegressor",
    "CrossEntropyBoosting",
    "DEFAULT_CANDIDATES",
    "GreedyEnsemble",
    "KERNEL_ALPHAS",
    "K_GRID",
    "LEARNER_KINDS",
    "RIDGE_GRID",
    "SquaredLossBoosting",
    "WeightedKNNRegressor",
    "WeightedKernelRidge",
    "WeightedRidge",
    "Witness",
    "binarize",
    "constant_witness",
    "fit_auto",
    "fit_single",
    "greedy_ensemble",
    "make_learner",
    "predict",
]
