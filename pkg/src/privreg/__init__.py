"""Differentially private linear regression toolkit.

Core pieces: Gaussian-DP accounting, clipped Gaussian release mechanisms,
single-shot adaptive ridge regression, its gradient-boosted variant, a
numerical theory lab for the mean-estimation convergence claims, and a
benchmark harness with a FastAPI service wrapper and a thin CLI.
"""

__version__ = "0.1.0"

from .accounting import (
    BudgetSplit,
    PrivacyBudget,
    PrivacyLedger,
    compose,
    delta_for_mu,
    mu_for_epsilon_delta,
    per_round_budget,
    split_budget,
)
from .boosting import BoostConfig, boosted_adassp_fit
from .mechanisms import ClipSpec, NoiseDraw, gaussian_mechanism, gaussian_mechanism_symmetric
from .regression import EncodedDataset, LinearModel, adassp_fit, ridge_solve

__all__ = [
    "__version__",
    "BudgetSplit",
    "PrivacyBudget",
    "PrivacyLedger",
    "compose",
    "delta_for_mu",
    "mu_for_epsilon_delta",
    "per_round_budget",
    "split_budget",
    "ClipSpec",
    "NoiseDraw",
    "gaussian_mechanism",
    "gaussian_mechanism_symmetric",
    "EncodedDataset",
    "LinearModel",
    "adassp_fit",
    "ridge_solve",
    "BoostConfig",
    "boosted_adassp_fit",
]
