"""Clipping operators and seeded Gaussian release mechanisms.

Every noisy release is driven by a NoiseDraw, a (seed, stream label) pair
that deterministically derives an independent random stream. Reusing a
label with the same seed reproduces the same noise bit for bit; distinct
labels give streams that are independent by construction.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ClipSpec",
    "NoiseDraw",
    "clip_scalar",
    "clip_values",
    "clip_vector_l2",
    "clip_rows_l2",
    "gaussian_mechanism",
    "gaussian_mechanism_symmetric",
]


@dataclass(frozen=True)
class ClipSpec:
    """A positive clipping threshold."""

    tau: float

    def __post_init__(self) -> None:
        tau = float(self.tau)
        if math.isnan(tau) or math.isinf(tau) or tau <= 0.0:
            raise ValueError(f"tau must be a positive finite real, got {self.tau}")
        object.__setattr__(self, "tau", tau)


@dataclass(frozen=True)
class NoiseDraw:
    """Seed plus stream label identifying one reproducible noise stream.

    The label is hashed with SHA-256 (stable across platforms and runs,
    unlike the builtin hash) and folded into a numpy SeedSequence together
    with the seed; the stream itself is a counter-based Philox generator.
    """

    seed: int
    stream_label: str

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")
        if not isinstance(self.stream_label, str) or not self.stream_label:
            raise ValueError("stream_label must be a nonempty string")

    def child(self, label: str) -> "NoiseDraw":
        """Sub-stream for one named release: label becomes '<parent>/<label>'."""
        if not label:
            raise ValueError("child label must be nonempty")
        return NoiseDraw(seed=self.seed, stream_label=f"{self.stream_label}/{label}")

    def generator(self) -> np.random.Generator:
        digest = hashlib.sha256(self.stream_label.encode("utf-8")).digest()
        words = [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]
        return np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, *words])))


def _as_finite_array(name: str, value, min_dim: int = 0) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim < min_dim:
        raise ValueError(f"{name} must have at least {min_dim} dimension(s), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite everywhere")
    return arr


def clip_scalar(x: float, tau: float) -> float:
    """Clamp x into [-tau, tau]."""
    tau = ClipSpec(tau).tau
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"x must be finite, got {x}")
    return min(max(x, -tau), tau)


def clip_values(values, tau: float) -> np.ndarray:
    """Entrywise clamp of a vector into [-tau, tau]."""
    tau = ClipSpec(tau).tau
    arr = _as_finite_array("values", values, min_dim=1)
    return np.clip(arr, -tau, tau)


def clip_vector_l2(x, tau: float) -> np.ndarray:
    """Scale x onto the L2 ball of radius tau; identity when already inside.

    The zero vector is returned unchanged. Inside the ball the values pass
    through bitwise, so re-clipping is idempotent.
    """
    tau = ClipSpec(tau).tau
    arr = _as_finite_array("x", x, min_dim=1)
    norm = float(np.linalg.norm(arr))
    if norm <= tau:
        return arr.copy()
    return arr * (tau / norm)


def clip_rows_l2(X, tau: float) -> np.ndarray:
    """Row-wise L2 clipping of a matrix; rows with norm <= tau pass through bitwise."""
    tau = ClipSpec(tau).tau
    X = _as_finite_array("X", X, min_dim=2)
    norms = np.linalg.norm(X, axis=1)
    scale = np.ones_like(norms)
    over = norms > tau
    scale[over] = tau / norms[over]
    return X * scale[:, None]


def gaussian_mechanism(value, sensitivity: float, mu: float, noise: NoiseDraw):
    """Release value plus iid N(0, (sensitivity/mu)^2) noise per coordinate.

    Accepts a scalar or a vector; the return type matches. The noise draw
    happens even when the scale is zero so stream positions stay aligned.
    mu = +inf is the noiseless diagnostic limit (scale exactly 0.0); with
    sensitivity 0 the value is returned exactly as well.
    """
    sensitivity = float(sensitivity)
    if math.isnan(sensitivity) or math.isinf(sensitivity) or sensitivity < 0.0:
        raise ValueError(f"sensitivity must be finite and nonnegative, got {sensitivity}")
    mu = float(mu)
    if math.isnan(mu) or mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("value must be finite everywhere")
    scale = sensitivity / mu
    out = arr + noise.generator().normal(0.0, scale, size=arr.shape)
    if arr.ndim == 0:
        return float(out)
    return out


def gaussian_mechanism_symmetric(mat, sensitivity: float, mu: float, noise: NoiseDraw) -> np.ndarray:
    """Symmetric-matrix Gaussian release: noise drawn once per upper-triangle entry.

    The input must be square and symmetric up to a scaled 1e-12 tolerance;
    it is exactly symmetrized before release, and the mirrored noise keeps
    the output exactly symmetric. Diagonal and off-diagonal entries all
    receive variance (sensitivity/mu)^2.
    """
    sensitivity = float(sensitivity)
    if math.isnan(sensitivity) or math.isinf(sensitivity) or sensitivity < 0.0:
        raise ValueError(f"sensitivity must be finite and nonnegative, got {sensitivity}")
    mu = float(mu)
    if math.isnan(mu) or mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    M = _as_finite_array("mat", mat, min_dim=2)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"mat must be square, got shape {M.shape}")
    tol = 1e-12 * max(1.0, float(np.abs(M).max()))
    if float(np.abs(M - M.T).max()) > tol:
        raise ValueError("mat must be symmetric within a scaled 1e-12 tolerance")
    sym = 0.5 * (M + M.T)

    p = M.shape[0]
    iu = np.triu_indices(p)
    scale = sensitivity / mu
    draws = noise.generator().normal(0.0, scale, size=iu[0].size)
    noise_mat = np.zeros((p, p))
    noise_mat[iu] = draws
    noise_mat[iu[1], iu[0]] = draws
    return sym + noise_mat
