"""Pull-back-metric mathematics.

Embedding an N-dimensional loss surface into (N+1)-dimensional space with
ambient metric diag(gamma, 1) induces the metric

    g_ij = gamma_ij + l_i l_j,        l_i = dL/dtheta_i

on parameter space.  Its inverse has a closed rank-one (Sherman-Morrison)
form, and preconditioning the gradient with that inverse collapses to a
cheap O(N) update:

    flat embedding:  delta = -eta * ginv(l) / (1 + xi * <l, ginv(l)>)
    log embedding:   delta = -eta * L * ginv(l) / (L^2 + xi * <l, ginv(l)>)

The dense matrix routines here exist only as verification oracles for
small N; production code uses the simplified updates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionError, DomainError, NumericError
from .numcore import ParamVector, dot

__all__ = [
    "EmbeddingKind",
    "InverseMetric",
    "apply_inverse_metric",
    "induced_update_flat",
    "induced_update_log",
    "induced_update",
    "pullback_metric_dense",
    "sherman_morrison_inverse",
]

DENSE_ORACLE_MAX_DIM = 16


class EmbeddingKind(Enum):
    """Monotonic height function for the embedded loss surface."""

    IDENTITY = "identity"
    LOG_LOSS = "log-loss"   # requires strictly positive losses


@dataclass(frozen=True)
class InverseMetric:
    """Inverse ambient metric on parameters: identity or positive diagonal."""

    diagonal: ParamVector | None = None

    def __post_init__(self):
        if self.diagonal is not None:
            vals = self.diagonal.values
            if not np.all(vals > 0.0):
                raise DomainError("diagonal inverse-metric entries must be > 0")

    @classmethod
    def euclidean(cls) -> "InverseMetric":
        return cls(None)

    @classmethod
    def diagonal_scaled(cls, values) -> "InverseMetric":
        v = values if isinstance(values, ParamVector) else ParamVector(values)
        return cls(v)

    @property
    def is_euclidean(self) -> bool:
        return self.diagonal is None


def apply_inverse_metric(gamma_inv: InverseMetric, g: ParamVector) -> ParamVector:
    """Raise the index of ``g``: identity passes through, diagonal rescales."""
    if gamma_inv.is_euclidean:
        return g
    if len(gamma_inv.diagonal) != len(g):
        raise DimensionError(
            f"metric length {len(gamma_inv.diagonal)} != gradient length {len(g)}"
        )
    return ParamVector(gamma_inv.diagonal.values * g.values)


def _check_coeffs(eta: float, xi: float) -> None:
    if not (eta > 0.0 and np.isfinite(eta)):
        raise DomainError(f"eta must be positive and finite, got {eta}")
    if not (xi >= 0.0 and np.isfinite(xi)):
        raise DomainError(f"xi must be >= 0 and finite, got {xi}")


def induced_update_flat(
    g: ParamVector, gamma_inv: InverseMetric, eta: float, xi: float
) -> ParamVector:
    """Preconditioned step for the identity embedding.

    Returns ``-eta * ginv(g) / (1 + xi * <g, ginv(g)>)``.  The denominator
    is >= 1, so the step never exceeds plain gradient descent and the
    update direction equals steepest descent whenever the metric is
    Euclidean.
    """
    _check_coeffs(eta, xi)
    gup = apply_inverse_metric(gamma_inv, g)
    denom = 1.0 + xi * dot(g, gup)
    return ParamVector((-eta / denom) * gup.values)


def induced_update_log(
    g: ParamVector, loss: float, gamma_inv: InverseMetric, eta: float, xi: float
) -> ParamVector:
    """Preconditioned step for the logarithmic embedding.

    Returns ``-eta * L * ginv(g) / (L^2 + xi * <g, ginv(g)>)``.  Invariant
    under joint rescaling of (loss, gradient): the normalisation of the
    loss cancels.  Requires ``loss > 0``.
    """
    _check_coeffs(eta, xi)
    if not (loss > 0.0 and np.isfinite(loss)):
        raise DomainError(f"log embedding requires loss > 0, got {loss}")
    gup = apply_inverse_metric(gamma_inv, g)
    denom = loss * loss + xi * dot(g, gup)
    return ParamVector((-eta * loss / denom) * gup.values)


def induced_update(
    kind: EmbeddingKind,
    g: ParamVector,
    loss: float,
    gamma_inv: InverseMetric,
    eta: float,
    xi: float,
) -> ParamVector:
    """Dispatch on the embedding kind."""
    if kind is EmbeddingKind.IDENTITY:
        return induced_update_flat(g, gamma_inv, eta, xi)
    return induced_update_log(g, loss, gamma_inv, eta, xi)


def _check_dense_spd(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    n = a.shape[0]
    if n > DENSE_ORACLE_MAX_DIM:
        raise DomainError(
            f"dense oracle limited to N <= {DENSE_ORACLE_MAX_DIM}, got N = {n}"
        )
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{name} must have finite entries")
    scale = np.max(np.abs(a)) or 1.0
    if np.max(np.abs(a - a.T)) > 1e-10 * scale:
        raise DomainError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise DomainError(f"{name} must be positive definite") from None
    return a


def pullback_metric_dense(gamma: np.ndarray, g: ParamVector) -> np.ndarray:
    """Dense induced metric ``gamma + g g^T`` (verification oracle, N <= 16)."""
    gamma = _check_dense_spd(gamma, "gamma")
    if gamma.shape[0] != len(g):
        raise DimensionError(f"gamma is {gamma.shape[0]}x{gamma.shape[0]}, g has length {len(g)}")
    gv = g.values
    return gamma + np.outer(gv, gv)


def sherman_morrison_inverse(gamma_inv: np.ndarray, g: ParamVector) -> np.ndarray:
    """Closed-form inverse of ``gamma + g g^T`` given ``gamma_inv`` (N <= 16).

    ``ginv - (ginv g)(ginv g)^T / (1 + g^T ginv g)``; the denominator is
    always >= 1 for positive-definite ``gamma_inv``.
    """
    gamma_inv = _check_dense_spd(gamma_inv, "gamma_inv")
    if gamma_inv.shape[0] != len(g):
        raise DimensionError(
            f"gamma_inv is {gamma_inv.shape[0]}x{gamma_inv.shape[0]}, g has length {len(g)}"
        )
    gv = g.values
    u = gamma_inv @ gv
    denom = 1.0 + float(gv @ u)
    return gamma_inv - np.outer(u, u) / denom
