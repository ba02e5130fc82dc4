"""Gradient-boosted variant of the adaptive noisy ridge fit.

The second moments are released once up front; each boosting round clips
the current residuals, releases one noisy cross term from its per-round
budget slice, and takes a full ridge step through the cached inverse. With
one round the procedure reduces to the single-shot fit bit for bit (same
stream labels, same solve path).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .accounting import BudgetSplit, PrivacyBudget, PrivacyLedger, per_round_budget
from .mechanisms import NoiseDraw, clip_rows_l2, clip_values, gaussian_mechanism
from .regression import (
    EncodedDataset,
    LinearModel,
    SufficientStats,
    _check_split_consistent,
    _release_second_moments,
    compute_cross,
)

__all__ = [
    "BoostConfig",
    "BoostState",
    "BoostRun",
    "residuals",
    "boosted_adassp_fit",
    "boosted_adassp_fit_detailed",
]


@dataclass(frozen=True)
class BoostConfig:
    """Boosting knobs: round count, residual clip, feature clip, budget split.

    tau bounds each round's residuals; together with x_clip it sets the
    per-round cross-term sensitivity x_clip * tau. strict_lambda_mode
    drops the adaptive ridge floor and regularizes by the released
    eigenvalue alone, matching the plain noisy sufficient-statistics rule.
    """

    rounds: int
    tau: float
    split: BudgetSplit
    x_clip: float = 1.0
    strict_lambda_mode: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.rounds, int) or isinstance(self.rounds, bool) or self.rounds < 1:
            raise ValueError(f"rounds must be a positive integer, got {self.rounds!r}")
        for name in ("tau", "x_clip"):
            v = float(getattr(self, name))
            if math.isnan(v) or math.isinf(v) or v <= 0.0:
                raise ValueError(f"{name} must be a positive finite real, got {v}")
            object.__setattr__(self, name, v)
        if not isinstance(self.split, BudgetSplit):
            raise ValueError("split must be a BudgetSplit")


@dataclass
class BoostState:
    """Mutable per-round state: current model, cached inverse, round index."""

    theta: np.ndarray
    gamma: np.ndarray
    round_index: int


@dataclass(frozen=True)
class BoostRun:
    """Full boosting record: final model, releases, and the per-round trajectory."""

    model: LinearModel
    stats: SufficientStats
    cross_hats: tuple[np.ndarray, ...]
    round_models: tuple[LinearModel, ...]
    ledger: PrivacyLedger


def residuals(y, X, theta) -> np.ndarray:
    """y - X theta."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or theta.ndim != 1:
        raise ValueError(
            f"expected 2-dim X, 1-dim y and theta; got {X.shape}, {y.shape}, {theta.shape}"
        )
    if X.shape[0] != y.shape[0] or X.shape[1] != theta.shape[0]:
        raise ValueError(f"shape mismatch: X is {X.shape}, y is {y.shape}, theta is {theta.shape}")
    return y - X @ theta


def boosted_adassp_fit_detailed(
    data: EncodedDataset,
    budget: PrivacyBudget,
    config: BoostConfig,
    noise: NoiseDraw,
) -> BoostRun:
    """Run the boosted fit and return the complete release record.

    Budget layout: the gram release spends split.mu1 and the eigenvalue
    release split.mu3, once each; every one of the `rounds` cross releases
    spends split.mu2 / sqrt(rounds), so the whole run composes back to the
    granted mu_total (checked against the ledger before returning).
    """
    _check_split_consistent(budget, config.split)
    ledger = PrivacyLedger()

    bound = min(config.x_clip, data.x_bound)
    X_c = clip_rows_l2(data.X, bound)

    stats = _release_second_moments(
        X_c, bound, budget.delta, config.split, noise, ledger, config.strict_lambda_mode
    )

    T = config.rounds
    mu_round = per_round_budget(config.split.mu2, T)
    sens_round = bound * config.tau

    theta = np.zeros(data.p)
    cross_hats: list[np.ndarray] = []
    round_models: list[LinearModel] = []
    for t in range(1, T + 1):
        g = clip_values(residuals(data.y, X_c, theta), config.tau)
        cross = compute_cross(X_c, g)
        cross_hat = gaussian_mechanism(cross, sens_round, mu_round, noise.child(f"cross-{t}"))
        ledger.charge(f"cross-{t}", mu_round, sens_round)
        theta = theta + stats.gamma @ cross_hat
        cross_hats.append(cross_hat)
        round_models.append(LinearModel(theta=theta))

    ledger.assert_within(budget.mu_total)
    return BoostRun(
        model=round_models[-1],
        stats=stats,
        cross_hats=tuple(cross_hats),
        round_models=tuple(round_models),
        ledger=ledger,
    )


def boosted_adassp_fit(
    data: EncodedDataset,
    budget: PrivacyBudget,
    config: BoostConfig,
    noise: NoiseDraw,
) -> LinearModel:
    """Gradient-boosted adaptive ridge fit. See boosted_adassp_fit_detailed."""
    return boosted_adassp_fit_detailed(data, budget, config, noise).model
