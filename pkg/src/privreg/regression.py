"""Sufficient-statistics linear regression with adaptive noisy ridge.

The single-shot fit releases three statistics of the clipped data (gram
matrix, smallest gram eigenvalue, cross term), picks a ridge level from
the noisy eigenvalue, and solves the perturbed normal equations. The
boosted variant in boosting.py reuses the second-moment release and the
cached inverse from here so its one-round special case matches this fit
bit for bit.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .accounting import BudgetSplit, PrivacyBudget, PrivacyLedger
from .mechanisms import NoiseDraw, clip_rows_l2, clip_values, gaussian_mechanism, gaussian_mechanism_symmetric

__all__ = [
    "EncodedDataset",
    "LinearModel",
    "SufficientStats",
    "AdasspFit",
    "NearlySingularError",
    "compute_gram",
    "compute_cross",
    "min_eigenvalue",
    "ridge_solve",
    "adassp_fit",
    "adassp_fit_detailed",
]

# Relative slack when revalidating norms of already-clipped data; scaling a
# row by tau/norm can land one ulp above tau on recomputation.
_BOUND_SLACK = 1e-12


class NearlySingularError(ValueError):
    """Raised when the ridge system is numerically singular or indefinite."""


@dataclass(frozen=True)
class EncodedDataset:
    """Numeric design matrix and labels with their certified bounds.

    Every row satisfies ||x_i||_2 <= x_bound and every label |y_i| <= y_bound
    (up to roundoff at the boundary); construction enforces this, so code
    downstream can calibrate noise to the bounds without re-checking. The
    arrays are copied and frozen read-only.
    """

    X: np.ndarray
    y: np.ndarray
    x_bound: float
    y_bound: float

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
        if y.ndim != 1:
            raise ValueError(f"y must be 1-dimensional, got shape {y.shape}")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"need at least one row and one feature, got shape {X.shape}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValueError("X and y must be finite everywhere")
        for name in ("x_bound", "y_bound"):
            v = float(getattr(self, name))
            if math.isnan(v) or math.isinf(v) or v <= 0.0:
                raise ValueError(f"{name} must be a positive finite real, got {v}")
            object.__setattr__(self, name, v)
        max_norm = float(np.linalg.norm(X, axis=1).max())
        if max_norm > self.x_bound * (1.0 + _BOUND_SLACK):
            raise ValueError(
                f"row norm {max_norm} exceeds x_bound {self.x_bound}; clip rows first"
            )
        max_label = float(np.abs(y).max())
        if max_label > self.y_bound * (1.0 + _BOUND_SLACK):
            raise ValueError(
                f"label magnitude {max_label} exceeds y_bound {self.y_bound}; clip labels first"
            )
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class LinearModel:
    """A fitted coefficient vector."""

    theta: np.ndarray

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=float)
        if theta.ndim != 1 or theta.shape[0] < 1:
            raise ValueError(f"theta must be a nonempty vector, got shape {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite everywhere")
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.theta.shape[0]:
            raise ValueError(
                f"X must be 2-dimensional with {self.theta.shape[0]} columns, got shape {X.shape}"
            )
        return X @ self.theta


@dataclass(frozen=True)
class SufficientStats:
    """Released second moments and the cached ridge inverse built from them.

    gamma is the explicit inverse of (gram_hat + lambda_used * I); keeping
    it around lets the boosted fit apply the same solve to every round's
    cross release without refactorizing.
    """

    gram_hat: np.ndarray
    lambda_hat: float
    lambda_used: float
    gamma: np.ndarray


@dataclass(frozen=True)
class AdasspFit:
    """Full fit record: model plus everything released to produce it."""

    model: LinearModel
    stats: SufficientStats
    cross_hat: np.ndarray
    ledger: PrivacyLedger


def compute_gram(X) -> np.ndarray:
    """X^T X, exactly symmetrized."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"X must be a nonempty 2-dimensional array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite everywhere")
    G = X.T @ X
    return 0.5 * (G + G.T)


def compute_cross(X, v) -> np.ndarray:
    """X^T v."""
    X = np.asarray(X, dtype=float)
    v = np.asarray(v, dtype=float)
    if X.ndim != 2 or v.ndim != 1 or X.shape[0] != v.shape[0]:
        raise ValueError(f"shape mismatch: X is {X.shape}, v is {v.shape}")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(v)):
        raise ValueError("X and v must be finite everywhere")
    return X.T @ v


def min_eigenvalue(M) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"M must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("M must be finite everywhere")
    tol = 1e-12 * max(1.0, float(np.abs(M).max()))
    if float(np.abs(M - M.T).max()) > tol:
        raise ValueError("M must be symmetric within a scaled 1e-12 tolerance")
    sym = 0.5 * (M + M.T)
    return float(np.linalg.eigvalsh(sym)[0])


def _cholesky(A: np.ndarray):
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NearlySingularError(
            f"gram + lambda*I is not positive definite ({exc}); "
            "increase the ridge level or enable the adaptive lambda floor"
        ) from None
    return factor


def ridge_solve(gram, lam: float, cross) -> LinearModel:
    """Solve (gram + lam*I) theta = cross by Cholesky with one refinement step.

    gram must be symmetric and gram + lam*I positive definite, else
    NearlySingularError. The refined solution satisfies
    ||(gram + lam*I) theta - cross|| <= 1e-8 * ||cross||.
    """
    gram = np.asarray(gram, dtype=float)
    cross = np.asarray(cross, dtype=float)
    lam = float(lam)
    if math.isnan(lam) or math.isinf(lam) or lam < 0.0:
        raise ValueError(f"lam must be finite and nonnegative, got {lam}")
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise ValueError(f"gram must be square, got shape {gram.shape}")
    if cross.ndim != 1 or cross.shape[0] != gram.shape[0]:
        raise ValueError(f"cross has shape {cross.shape}, expected ({gram.shape[0]},)")
    if not np.all(np.isfinite(gram)) or not np.all(np.isfinite(cross)):
        raise ValueError("gram and cross must be finite everywhere")
    tol = 1e-12 * max(1.0, float(np.abs(gram).max()))
    if float(np.abs(gram - gram.T).max()) > tol:
        raise ValueError("gram must be symmetric within a scaled 1e-12 tolerance")

    A = 0.5 * (gram + gram.T) + lam * np.eye(gram.shape[0])
    factor = _cholesky(A)
    theta = scipy.linalg.cho_solve(factor, cross, check_finite=False)
    theta = theta + scipy.linalg.cho_solve(factor, cross - A @ theta, check_finite=False)
    residual = float(np.linalg.norm(A @ theta - cross))
    if residual > 1e-8 * float(np.linalg.norm(cross)):
        raise NearlySingularError(
            f"ridge solve residual {residual} exceeds 1e-8 * ||cross||; "
            "the system is too ill-conditioned to certify"
        )
    return LinearModel(theta=theta)


def _inverse_spd(A: np.ndarray) -> np.ndarray:
    """Explicit SPD inverse via Cholesky, exactly symmetrized."""
    factor = _cholesky(A)
    inv = scipy.linalg.cho_solve(factor, np.eye(A.shape[0]), check_finite=False)
    return 0.5 * (inv + inv.T)


def _adaptive_lambda_target(p: int, x_bound: float, delta: float, mu1: float) -> float:
    """Ridge floor calibrated so the noisy gram stays positive definite whp."""
    z = statistics.NormalDist().inv_cdf(1.0 - delta / 6.0)
    return x_bound * x_bound * math.sqrt(p) * z / mu1


def _release_second_moments(
    X_clipped: np.ndarray,
    x_bound: float,
    delta: float,
    split: BudgetSplit,
    noise: NoiseDraw,
    ledger: PrivacyLedger,
    strict_lambda_mode: bool,
) -> SufficientStats:
    """Release the gram and its smallest eigenvalue, choose lambda, cache the inverse.

    Shared between the single-shot and boosted fits so the two paths are
    bitwise identical through the second-moment stage. Sensitivities under
    add/remove-one-row adjacency: x_bound^2 for the gram (Frobenius) and
    x_bound^2 for the smallest eigenvalue.
    """
    p = X_clipped.shape[1]
    sens_gram = x_bound * x_bound

    gram = compute_gram(X_clipped)
    gram_hat = gaussian_mechanism_symmetric(gram, sens_gram, split.mu1, noise.child("gram"))
    ledger.charge("gram", split.mu1, sens_gram)

    lam_min = min_eigenvalue(gram)
    lam_hat = gaussian_mechanism(lam_min, sens_gram, split.mu3, noise.child("lambda-min"))
    ledger.charge("lambda-min", split.mu3, sens_gram)

    if strict_lambda_mode:
        lam_used = max(0.0, lam_hat)
    else:
        lam_target = _adaptive_lambda_target(p, x_bound, delta, split.mu1)
        lam_used = max(0.0, lam_target - max(0.0, lam_hat))

    gamma = _inverse_spd(gram_hat + lam_used * np.eye(p))
    return SufficientStats(gram_hat=gram_hat, lambda_hat=float(lam_hat), lambda_used=lam_used, gamma=gamma)


def _check_split_consistent(budget: PrivacyBudget, split: BudgetSplit) -> None:
    granted = budget.mu_total
    allocated = split.mu_total
    if math.isinf(granted) or math.isinf(allocated):
        if math.isinf(granted) and math.isinf(allocated):
            return
        raise ValueError(f"budget split totals {allocated} but the budget grants {granted}")
    if abs(allocated - granted) > 1e-9 * max(1.0, granted):
        raise ValueError(f"budget split totals {allocated} but the budget grants {granted}")


def adassp_fit_detailed(
    data: EncodedDataset,
    budget: PrivacyBudget,
    split: BudgetSplit,
    noise: NoiseDraw,
    *,
    strict_lambda_mode: bool = False,
) -> AdasspFit:
    """Single-shot adaptive noisy ridge fit, returning the full release record.

    Rows are L2-clipped at x_bound and labels clamped at y_bound before any
    statistic is computed (idempotent when the data already conforms).
    Releases: gram at mu1, smallest eigenvalue at mu3, cross term at mu2
    with sensitivity x_bound * y_bound. By default the ridge level is
    max(0, lambda_target - max(0, lambda_hat)); strict_lambda_mode instead
    uses max(0, lambda_hat) with no additive floor, which can propagate
    NearlySingularError on degenerate data.
    """
    _check_split_consistent(budget, split)
    ledger = PrivacyLedger()

    X_c = clip_rows_l2(data.X, data.x_bound)
    y_c = clip_values(data.y, data.y_bound)

    stats = _release_second_moments(
        X_c, data.x_bound, budget.delta, split, noise, ledger, strict_lambda_mode
    )

    sens_cross = data.x_bound * data.y_bound
    cross = compute_cross(X_c, y_c)
    cross_hat = gaussian_mechanism(cross, sens_cross, split.mu2, noise.child("cross-1"))
    ledger.charge("cross-1", split.mu2, sens_cross)

    theta = stats.gamma @ cross_hat
    ledger.assert_within(budget.mu_total)
    return AdasspFit(model=LinearModel(theta=theta), stats=stats, cross_hat=cross_hat, ledger=ledger)


def adassp_fit(
    data: EncodedDataset,
    budget: PrivacyBudget,
    split: BudgetSplit,
    noise: NoiseDraw,
    *,
    strict_lambda_mode: bool = False,
) -> LinearModel:
    """Single-shot adaptive noisy ridge fit. See adassp_fit_detailed."""
    return adassp_fit_detailed(
        data, budget, split, noise, strict_lambda_mode=strict_lambda_mode
    ).model
