"""Gaussian differential privacy accounting.

Budgets are tracked by the Gaussian-DP parameter mu. Composition is
Pythagorean (root sum of squares), and the conversion to classical
(epsilon, delta) guarantees is an exact closed form in the standard
normal CDF, so the bookkeeping never needs moment accountants or
numerical integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "standard_normal_cdf",
    "delta_for_mu",
    "mu_for_epsilon_delta",
    "compose",
    "split_budget",
    "per_round_budget",
    "PrivacyBudget",
    "BudgetSplit",
    "LedgerEntry",
    "PrivacyLedger",
    "MU_BRACKET",
]

_SQRT2 = math.sqrt(2.0)

# Largest double strictly below 1. delta saturates here so the documented
# return range [0, 1) survives rounding for enormous mu.
_DELTA_CEILING = math.nextafter(1.0, 0.0)

# Values in [-1e-12, 0) are cancellation dust and clamp to 0; anything more
# negative means the CDF itself is broken and must raise.
_NEGATIVE_DELTA_GUARD = -1e-12

# Search interval for inverting delta_for_mu in mu.
MU_BRACKET = (1e-10, 100.0)

_DELTA_INVERSION_TOL = 1e-9


def standard_normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to a few ulp far into both tails."""
    return 0.5 * math.erfc(-x / _SQRT2)


def _check_finite_number(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def delta_for_mu(mu: float, epsilon: float) -> float:
    """Smallest delta such that a mu-Gaussian-DP mechanism is (epsilon, delta)-DP.

    Computes Phi(-epsilon/mu + mu/2) - e^epsilon * Phi(-epsilon/mu - mu/2)
    with the second term evaluated in log space so large epsilon cannot
    overflow. The result is clamped into [0, 1): tiny negative cancellation
    residue (above -1e-12) clamps to 0, and values that round to 1 clamp to
    the largest double below 1.

    Accuracy is limited by double rounding, roughly 1e-12 absolute; true
    values below that underflow to 0.0.
    """
    mu = _check_finite_number("mu", mu)
    epsilon = _check_finite_number("epsilon", epsilon)
    if mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")

    first = standard_normal_cdf(-epsilon / mu + mu / 2.0)
    tail = standard_normal_cdf(-epsilon / mu - mu / 2.0)
    if tail > 0.0:
        # e^epsilon * tail <= 1 whenever delta >= 0, so exp here cannot
        # overflow for meaningful inputs; log space keeps the intermediate
        # product representable anyway.
        second = math.exp(epsilon + math.log(tail))
    else:
        second = 0.0
    delta = first - second

    if delta < 0.0:
        if delta < _NEGATIVE_DELTA_GUARD:
            raise ArithmeticError(
                f"delta_for_mu(mu={mu}, epsilon={epsilon}) produced {delta}; "
                "this indicates a broken CDF, not rounding"
            )
        return 0.0
    return min(delta, _DELTA_CEILING)


def mu_for_epsilon_delta(epsilon: float, delta: float) -> float:
    """Invert delta_for_mu in mu by bisection on the bracket MU_BRACKET.

    delta_for_mu is strictly increasing in mu for fixed epsilon, so the
    root is unique. Bisection runs until the bracket collapses to machine
    precision rather than stopping on the delta gap: where delta(mu) is
    numerically flat (deep tails) an early delta-based stop would return a
    badly wrong mu. The returned mu satisfies
    |delta_for_mu(mu, epsilon) - delta| <= 1e-9.

    Raises ValueError when delta is not strictly inside (0, 1) or falls
    outside the range achievable on the bracket.
    """
    epsilon = _check_finite_number("epsilon", epsilon)
    delta = _check_finite_number("delta", delta)
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie strictly between 0 and 1, got {delta}")

    lo, hi = MU_BRACKET
    delta_lo = delta_for_mu(lo, epsilon)
    delta_hi = delta_for_mu(hi, epsilon)
    if not (delta_lo <= delta <= delta_hi):
        raise ValueError(
            f"delta={delta} is outside [{delta_lo}, {delta_hi}], the range "
            f"achievable for epsilon={epsilon} with mu in {MU_BRACKET}"
        )

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if delta_for_mu(mid, epsilon) < delta:
            lo = mid
        else:
            hi = mid

    mu = 0.5 * (lo + hi)
    achieved = delta_for_mu(mu, epsilon)
    if abs(achieved - delta) > _DELTA_INVERSION_TOL:
        raise ArithmeticError(
            f"bisection for epsilon={epsilon}, delta={delta} stalled at mu={mu} "
            f"with delta gap {abs(achieved - delta)}"
        )
    return mu


def compose(mus: Sequence[float] | Iterable[float]) -> float:
    """Total mu of a sequence of Gaussian-DP releases: sqrt(sum of squares).

    An empty sequence composes to 0. Entries must be nonnegative and finite.
    """
    total = 0.0
    for i, m in enumerate(mus):
        m = float(m)
        if math.isnan(m) or math.isinf(m):
            raise ValueError(f"mu entries must be finite, entry {i} is {m}")
        if m < 0.0:
            raise ValueError(f"mu entries must be nonnegative, entry {i} is {m}")
        total += m * m
    return math.sqrt(total)


def split_budget(mu_total: float, a: float, b: float, c: float) -> tuple[float, float, float]:
    """Split mu_total across three releases in ratio a:b:c by L2 weight.

    mu_i = mu_total * w_i / sqrt(a^2 + b^2 + c^2), so the parts recompose to
    mu_total exactly up to rounding. Zero ratio entries yield exactly 0.0
    even when mu_total is +inf (the noiseless diagnostic limit).
    """
    mu_total = float(mu_total)
    if math.isnan(mu_total) or mu_total <= 0.0:
        raise ValueError(f"mu_total must be positive, got {mu_total}")
    weights = []
    for name, w in (("a", a), ("b", b), ("c", c)):
        w = _check_finite_number(name, w)
        if w < 0.0:
            raise ValueError(f"ratio {name} must be nonnegative, got {w}")
        weights.append(w)
    norm = math.sqrt(sum(w * w for w in weights))
    if norm == 0.0:
        raise ValueError("at least one ratio entry must be positive")
    return tuple(0.0 if w == 0.0 else mu_total * (w / norm) for w in weights)  # type: ignore[return-value]


def per_round_budget(mu_stage: float, rounds: int) -> float:
    """Per-round mu so that `rounds` equal releases compose back to mu_stage."""
    mu_stage = float(mu_stage)
    if math.isnan(mu_stage) or mu_stage < 0.0:
        raise ValueError(f"mu_stage must be nonnegative, got {mu_stage}")
    if not isinstance(rounds, int) or isinstance(rounds, bool) or rounds < 1:
        raise ValueError(f"rounds must be a positive integer, got {rounds!r}")
    return mu_stage / math.sqrt(rounds)


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) target together with its Gaussian-DP total mu.

    The three fields are kept mutually consistent: construction re-derives
    delta from mu_total and rejects the triple if it disagrees beyond 1e-9.
    Use the factories rather than the raw constructor.
    """

    epsilon: float
    delta: float
    mu_total: float

    def __post_init__(self) -> None:
        eps = float(self.epsilon)
        if math.isnan(eps) or math.isinf(eps) or eps <= 0.0:
            raise ValueError(f"epsilon must be a positive finite real, got {self.epsilon}")
        delta = float(self.delta)
        if math.isnan(delta) or not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie strictly between 0 and 1, got {self.delta}")
        mu = float(self.mu_total)
        if math.isnan(mu) or mu <= 0.0:
            raise ValueError(f"mu_total must be positive, got {self.mu_total}")
        expected = _DELTA_CEILING if math.isinf(mu) else delta_for_mu(mu, eps)
        if abs(expected - delta) > 1e-9:
            raise ValueError(
                f"inconsistent budget: mu_total={mu} and epsilon={eps} imply "
                f"delta={expected}, got delta={delta}"
            )
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "mu_total", mu)

    @classmethod
    def from_epsilon_delta(cls, epsilon: float, delta: float) -> "PrivacyBudget":
        """Budget whose mu_total is the exact Gaussian-DP equivalent of (epsilon, delta)."""
        return cls(epsilon=epsilon, delta=delta, mu_total=mu_for_epsilon_delta(epsilon, delta))

    @classmethod
    def from_mu(cls, mu_total: float, epsilon: float) -> "PrivacyBudget":
        """Budget with a given mu_total; delta is derived, so the triple is consistent.

        mu_total = +inf is permitted and denotes the noiseless diagnostic
        limit, where delta saturates at the largest double below 1.
        """
        mu_total = float(mu_total)
        if math.isinf(mu_total) and mu_total > 0:
            return cls(epsilon=epsilon, delta=_DELTA_CEILING, mu_total=mu_total)
        delta = delta_for_mu(mu_total, epsilon)
        if delta <= 0.0:
            # Saturate at the smallest positive double so the budget type's
            # open-interval constraint on delta stays satisfiable.
            delta = math.nextafter(0.0, 1.0)
        return cls(epsilon=epsilon, delta=delta, mu_total=mu_total)


@dataclass(frozen=True)
class BudgetSplit:
    """Three-way allocation of a total mu across the released statistics.

    mu1 funds the second-moment (gram) release, mu2 the cross-term
    release(s), mu3 the smallest-eigenvalue release.
    """

    mu1: float
    mu2: float
    mu3: float

    def __post_init__(self) -> None:
        for name in ("mu1", "mu2", "mu3"):
            v = float(getattr(self, name))
            if math.isnan(v) or v < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {v}")
            object.__setattr__(self, name, v)
        if self.mu1 == 0.0 and self.mu2 == 0.0 and self.mu3 == 0.0:
            raise ValueError("at least one stage budget must be positive")

    @classmethod
    def from_ratio(cls, mu_total: float, a: float, b: float, c: float) -> "BudgetSplit":
        mu1, mu2, mu3 = split_budget(mu_total, a, b, c)
        return cls(mu1=mu1, mu2=mu2, mu3=mu3)

    @property
    def mu_total(self) -> float:
        if any(math.isinf(m) for m in (self.mu1, self.mu2, self.mu3)):
            return math.inf
        return compose((self.mu1, self.mu2, self.mu3))


@dataclass(frozen=True)
class LedgerEntry:
    label: str
    mu: float
    sensitivity: float


@dataclass
class PrivacyLedger:
    """Append-only record of every noisy release made during a fit."""

    entries: list[LedgerEntry] = field(default_factory=list)

    def charge(self, label: str, mu: float, sensitivity: float) -> None:
        mu = float(mu)
        if math.isnan(mu) or mu <= 0.0:
            raise ValueError(f"ledger mu must be positive, got {mu} for {label!r}")
        sensitivity = float(sensitivity)
        if math.isnan(sensitivity) or math.isinf(sensitivity) or sensitivity < 0.0:
            raise ValueError(f"sensitivity must be finite and nonnegative, got {sensitivity}")
        self.entries.append(LedgerEntry(label=label, mu=mu, sensitivity=sensitivity))

    def total(self) -> float:
        """Composed mu of all recorded releases; +inf if any entry is infinite."""
        if any(math.isinf(e.mu) for e in self.entries):
            return math.inf
        return compose([e.mu for e in self.entries])

    def assert_within(self, mu_total: float, tol: float = 1e-9) -> None:
        """Raise if the composed spend disagrees with the granted total."""
        spent = self.total()
        if math.isinf(mu_total) or math.isinf(spent):
            if math.isinf(mu_total) and math.isinf(spent):
                return
            raise ValueError(
                f"privacy ledger total {spent} does not match granted budget {mu_total}"
            )
        if abs(spent - mu_total) > tol:
            raise ValueError(
                f"privacy ledger total {spent} does not match granted budget "
                f"{mu_total} within {tol}"
            )
