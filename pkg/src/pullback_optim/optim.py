"""Stateful optimizer step machines.

Two custom step rules precondition gradients with the inverse of the
metric induced on the loss surface (see :mod:`.geometry`):

* flat embedding   -- effective-lr factor ``r = 1 / (1 + |vhat|)``
* log embedding    -- ``r = L / (L^2 + |vhat|)`` (loss-scale invariant)

where ``vhat`` is a bias-corrected EMA of ``s = xi * <g, ginv g>``.  Both
take a pluggable inverse ambient metric: identity, or the diagonal metric
implied by an RMSprop-style second-moment average.  EMA momentum and
decoupled weight decay are built in.

Baselines (SGD with EMA momentum, RMSprop, Adam, AdamW) follow the
standard published update rules; the SGD baseline uses bias-corrected EMA
momentum so that the flat custom rule reduces to it exactly at xi = 0,
and AdamW aligns with the RMS-metric rule at xi = 0 once the weight-decay
convention (raw lambda here vs. eta-scaled in AdamW) is accounted for.

The module-level functions are the reference implementations and operate
on :class:`~pullback_optim.numcore.ParamVector`.  ``ScalarStepper`` is a
plain-float fast path for very low-dimensional problems; it is verified
bit-identical to the reference ops in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, UsageError, ValidationError
from .geometry import InverseMetric, apply_inverse_metric
from .numcore import ParamVector, dot

__all__ = [
    "HyperParams",
    "OptimizerState",
    "StepTrace",
    "OptimizerKind",
    "GammaMode",
    "step_induced",
    "step_induced_log",
    "step_baseline",
    "rms_implied_inverse_metric",
    "effective_lr_trace",
    "initial_state",
    "ScalarStepper",
    "config_to_json",
    "config_from_json",
]


class OptimizerKind(Enum):
    SGD = "sgd"
    RMSPROP = "rmsprop"
    ADAM = "adam"
    ADAMW = "adamw"
    IM_SGD = "im-sgd"
    IM_LOG_SGD = "im-log-sgd"
    IM_RMS = "im-rms"

    @property
    def is_induced(self) -> bool:
        return self in (OptimizerKind.IM_SGD, OptimizerKind.IM_LOG_SGD, OptimizerKind.IM_RMS)

    @property
    def uses_log_embedding(self) -> bool:
        return self is OptimizerKind.IM_LOG_SGD

    @property
    def uses_second_moment(self) -> bool:
        return self in (
            OptimizerKind.RMSPROP,
            OptimizerKind.ADAM,
            OptimizerKind.ADAMW,
            OptimizerKind.IM_RMS,
        )


class GammaMode(Enum):
    IDENTITY = "identity"
    RMS_IMPLIED = "rms-implied"


@dataclass(frozen=True)
class HyperParams:
    """Validated hyperparameter bundle shared by all optimizers.

    ``mu`` doubles as Adam's first-moment decay, ``beta2``/``epsilon`` as
    the second-moment decay and stabiliser wherever one is used.  ``beta``
    is the EMA decay of the metric term; ``beta = 1`` means no averaging
    (the instantaneous value is used, appropriate for unbatched losses).
    ``lam`` is decoupled weight decay, applied raw (not scaled by eta).
    """

    eta: float
    mu: float = 0.0
    xi: float = 0.0
    beta: float = 1.0
    lam: float = 0.0
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        def _finite(name, val):
            if not math.isfinite(val):
                raise ValidationError(name, f"must be finite, got {val}")

        for name in ("eta", "mu", "xi", "beta", "lam", "beta2", "epsilon"):
            _finite(name, getattr(self, name))
        if not self.eta > 0:
            raise ValidationError("eta", f"must be > 0, got {self.eta}")
        if not 0.0 <= self.mu < 1.0:
            raise ValidationError("mu", f"must be in [0, 1), got {self.mu}")
        if not self.xi >= 0.0:
            raise ValidationError("xi", f"must be >= 0, got {self.xi}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValidationError("beta", f"must be in [0, 1], got {self.beta}")
        if not self.lam >= 0.0:
            raise ValidationError("lambda", f"must be >= 0, got {self.lam}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ValidationError("beta2", f"must be in [0, 1), got {self.beta2}")
        if not self.epsilon > 0.0:
            raise ValidationError("epsilon", f"must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class OptimizerState:
    """Per-run optimizer state: step count plus EMA accumulators.

    ``m`` is the momentum EMA, ``v`` the scalar metric EMA, and ``rms``
    the optional per-parameter second-moment EMA.  A fresh state (t = 0)
    must be all zeros.
    """

    t: int
    m: ParamVector
    v: float
    rms: ParamVector | None = None

    def __post_init__(self):
        if self.t < 0:
            raise ValidationError("t", f"step counter must be >= 0, got {self.t}")
        if self.v < 0.0 or not math.isfinite(self.v):
            raise ValidationError("v", f"metric EMA must be finite and >= 0, got {self.v}")
        if self.rms is not None and not np.all(self.rms.values >= 0.0):
            raise ValidationError("rms", "second-moment entries must be >= 0")
        if self.t == 0:
            if np.any(self.m.values != 0.0) or self.v != 0.0:
                raise ValidationError("t", "state at t = 0 must have zero m and v")
            if self.rms is not None and np.any(self.rms.values != 0.0):
                raise ValidationError("t", "state at t = 0 must have zero rms")


def initial_state(n: int, with_rms: bool = False) -> OptimizerState:
    """Zeroed state for an n-parameter run."""
    return OptimizerState(
        t=0,
        m=ParamVector.zeros(n),
        v=0.0,
        rms=ParamVector.zeros(n) if with_rms else None,
    )


@dataclass(frozen=True)
class StepTrace:
    """Per-step diagnostics of the custom rules."""

    s_t: float
    v_hat: float
    r_t: float
    loss: float


def _check_step_inputs(
    state: OptimizerState,
    theta: ParamVector,
    g: ParamVector,
    gamma_mode: GammaMode,
) -> None:
    n = len(theta)
    if len(g) != n or len(state.m) != n:
        raise UsageError(
            f"length mismatch: theta={n}, g={len(g)}, m={len(state.m)}"
        )
    if gamma_mode is GammaMode.RMS_IMPLIED:
        if state.rms is None:
            raise UsageError("RMS-implied metric requires a state with an rms buffer")
        if len(state.rms) != n:
            raise UsageError(f"length mismatch: theta={n}, rms={len(state.rms)}")


def rms_implied_inverse_metric(
    state: OptimizerState, g: ParamVector, h: HyperParams
) -> tuple[OptimizerState, InverseMetric]:
    """Update the second-moment EMA and return the implied diagonal metric.

    Expects ``state.t`` to already reflect the current step (t >= 1); the
    bias-corrected average ``rhat = rms / (1 - beta2^t)`` yields inverse
    metric entries ``1 / (sqrt(rhat) + epsilon)``.
    """
    if state.rms is None:
        raise UsageError("rms_implied_inverse_metric requires a state with an rms buffer")
    if state.t < 1:
        raise UsageError("state.t must be >= 1 (the current step number)")
    gv = g.values
    rms_new = h.beta2 * state.rms.values + (1.0 - h.beta2) * (gv * gv)
    bc2 = 1.0 - h.beta2 ** state.t
    rhat = rms_new / bc2
    diag = 1.0 / (np.sqrt(rhat) + h.epsilon)
    return (
        replace(state, rms=ParamVector(rms_new)),
        InverseMetric.diagonal_scaled(diag),
    )


def _step_induced_common(
    state: OptimizerState,
    theta: ParamVector,
    g: ParamVector,
    loss: float,
    h: HyperParams,
    gamma_mode: GammaMode,
    log_embedding: bool,
) -> tuple[OptimizerState, ParamVector, StepTrace]:
    _check_step_inputs(state, theta, g, gamma_mode)
    if log_embedding and not (loss > 0.0 and math.isfinite(loss)):
        raise DomainError(f"log embedding requires loss > 0, got {loss}")

    t = state.t + 1
    if gamma_mode is GammaMode.RMS_IMPLIED:
        # Second moment is refreshed from the current gradient before use,
        # matching RMSprop/Adam ordering.
        state_rms, gamma_inv = rms_implied_inverse_metric(replace(state, t=t), g, h)
        rms_new = state_rms.rms
    else:
        gamma_inv = InverseMetric.euclidean()
        rms_new = state.rms

    gtilde = apply_inverse_metric(gamma_inv, g)
    s = h.xi * dot(g, gtilde)
    v_new = h.beta * state.v + (1.0 - h.beta) * s
    if h.beta == 1.0:
        # EMA degenerates (v frozen at 0, bias divisor 0): use the
        # instantaneous metric term.
        v_hat = s
    else:
        v_hat = v_new / (1.0 - h.beta ** t)
    if log_embedding:
        r = loss / (loss * loss + abs(v_hat))
    else:
        r = 1.0 / (1.0 + abs(v_hat))

    m_new = h.mu * state.m.values + (1.0 - h.mu) * g.values
    bc1 = 1.0 - h.mu ** t
    m_hat = apply_inverse_metric(gamma_inv, ParamVector(m_new / bc1))
    a = h.eta * r
    theta_new = theta.values - a * m_hat.values - h.lam * theta.values

    new_state = OptimizerState(t=t, m=ParamVector(m_new), v=v_new, rms=rms_new)
    return new_state, ParamVector(theta_new), StepTrace(s_t=s, v_hat=v_hat, r_t=r, loss=loss)


def step_induced(
    state: OptimizerState,
    theta: ParamVector,
    g: ParamVector,
    loss: float,
    h: HyperParams,
    gamma_mode: GammaMode = GammaMode.IDENTITY,
) -> tuple[OptimizerState, ParamVector, StepTrace]:
    """One step of the flat-embedding custom rule.

    In order: bump t; raise gradient with the inverse metric; form the
    metric term ``s = xi * <g, ginv g>`` and its bias-corrected EMA
    ``vhat``; scale the learning rate by ``r = 1 / (1 + |vhat|)``; update
    bias-corrected EMA momentum; step ``theta -= eta * r * mhat + lam * theta``.
    """
    return _step_induced_common(state, theta, g, loss, h, gamma_mode, log_embedding=False)


def step_induced_log(
    state: OptimizerState,
    theta: ParamVector,
    g: ParamVector,
    loss: float,
    h: HyperParams,
    gamma_mode: GammaMode = GammaMode.IDENTITY,
) -> tuple[OptimizerState, ParamVector, StepTrace]:
    """One step of the log-embedding custom rule.

    Identical to :func:`step_induced` except the effective-lr factor is
    ``r = loss / (loss^2 + |vhat|)``; requires ``loss > 0``.
    """
    return _step_induced_common(state, theta, g, loss, h, gamma_mode, log_embedding=True)


_BASELINE_KINDS = (
    OptimizerKind.SGD,
    OptimizerKind.RMSPROP,
    OptimizerKind.ADAM,
    OptimizerKind.ADAMW,
)


def step_baseline(
    kind: OptimizerKind,
    state: OptimizerState,
    theta: ParamVector,
    g: ParamVector,
    h: HyperParams,
) -> tuple[OptimizerState, ParamVector]:
    """One step of a reference optimizer.

    * SGD: bias-corrected EMA momentum, decoupled raw weight decay
      (``theta -= eta * mhat + lam * theta``), so the flat custom rule at
      xi = 0 reproduces it exactly.
    * RMSprop: second-moment preconditioning only, no bias correction;
      L2-coupled weight decay.
    * Adam: standard bias-corrected moments; L2-coupled weight decay.
    * AdamW: Adam with decoupled decay ``eta * lam * theta``.
    """
    if kind not in _BASELINE_KINDS:
        raise UsageError(f"{kind.value} is not a baseline optimizer")
    _check_step_inputs(state, theta, g, GammaMode.IDENTITY)
    if kind.uses_second_moment:
        if state.rms is None:
            raise UsageError(f"{kind.value} requires a state with an rms buffer")
        if len(state.rms) != len(theta):
            raise UsageError("length mismatch between theta and rms")

    t = state.t + 1
    th = theta.values
    gv = g.values

    if kind is OptimizerKind.SGD:
        m_new = h.mu * state.m.values + (1.0 - h.mu) * gv
        bc1 = 1.0 - h.mu ** t
        theta_new = th - h.eta * (m_new / bc1) - h.lam * th
        return (
            OptimizerState(t=t, m=ParamVector(m_new), v=state.v, rms=state.rms),
            ParamVector(theta_new),
        )

    if kind is OptimizerKind.RMSPROP:
        geff = gv + h.lam * th if h.lam != 0.0 else gv
        rms_new = h.beta2 * state.rms.values + (1.0 - h.beta2) * (geff * geff)
        theta_new = th - h.eta * (geff / (np.sqrt(rms_new) + h.epsilon))
        return (
            OptimizerState(t=t, m=state.m, v=state.v, rms=ParamVector(rms_new)),
            ParamVector(theta_new),
        )

    # Adam / AdamW
    geff = gv + h.lam * th if (kind is OptimizerKind.ADAM and h.lam != 0.0) else gv
    m_new = h.mu * state.m.values + (1.0 - h.mu) * geff
    rms_new = h.beta2 * state.rms.values + (1.0 - h.beta2) * (geff * geff)
    bc1 = 1.0 - h.mu ** t
    bc2 = 1.0 - h.beta2 ** t
    update = (m_new / bc1) / (np.sqrt(rms_new / bc2) + h.epsilon)
    if kind is OptimizerKind.ADAMW:
        theta_new = th - h.eta * update - (h.eta * h.lam) * th
    else:
        theta_new = th - h.eta * update
    return (
        OptimizerState(t=t, m=ParamVector(m_new), v=state.v, rms=ParamVector(rms_new)),
        ParamVector(theta_new),
    )


def effective_lr_trace(traces: Iterable[StepTrace]) -> list[tuple[int, float]]:
    """Extract the (t, r_t) series for diagnostics and CSV export."""
    return [(t, tr.r_t) for t, tr in enumerate(traces, start=1)]


# ---------------------------------------------------------------------------
# Scalar fast path
# ---------------------------------------------------------------------------


class ScalarStepper:
    """Plain-float stepping engine for very low-dimensional runs.

    Numpy call overhead dominates at N = 2, so the benchmark harness runs
    on Python floats.  Every arithmetic expression mirrors the reference
    ops above operation-for-operation; the test suite asserts bit-equal
    trajectories between the two paths.

    ``theta`` is mutated in place by :meth:`step`; momentum and
    second-moment state live inside the stepper.
    """

    __slots__ = ("kind", "h", "n", "t", "m", "rms", "v", "_ginv")

    def __init__(self, kind: OptimizerKind, h: HyperParams, n: int):
        self.kind = kind
        self.h = h
        self.n = n
        self.t = 0
        self.m = [0.0] * n
        self.rms = [0.0] * n if kind.uses_second_moment else None
        self.v = 0.0
        self._ginv = [0.0] * n

    def step(self, theta: list[float], g: list[float], loss: float) -> float:
        """Advance one step, mutating ``theta``; returns the factor r_t.

        Baselines have no metric factor; they report r_t = 1.0.
        """
        kind = self.kind
        if kind.is_induced:
            return self._step_induced(theta, g, loss)
        if kind is OptimizerKind.SGD:
            return self._step_sgd(theta, g)
        if kind is OptimizerKind.RMSPROP:
            return self._step_rmsprop(theta, g)
        return self._step_adam(theta, g)

    def _step_induced(self, th: list[float], g: list[float], loss: float) -> float:
        h = self.h
        log_embedding = self.kind.uses_log_embedding
        if log_embedding and not (loss > 0.0 and math.isfinite(loss)):
            raise DomainError(f"log embedding requires loss > 0, got {loss}")
        self.t += 1
        t = self.t
        n = self.n
        m = self.m
        mu = h.mu
        one_minus_mu = 1.0 - mu
        rms_mode = self.kind is OptimizerKind.IM_RMS

        ginv = self._ginv
        s_acc = 0.0
        if rms_mode:
            rms = self.rms
            beta2 = h.beta2
            one_minus_beta2 = 1.0 - beta2
            bc2 = 1.0 - beta2 ** t
            eps = h.epsilon
            for i in range(n):
                gi = g[i]
                r2 = beta2 * rms[i] + one_minus_beta2 * (gi * gi)
                rms[i] = r2
                gv = 1.0 / (math.sqrt(r2 / bc2) + eps)
                ginv[i] = gv
                s_acc += gi * (gv * gi)
        else:
            for i in range(n):
                gi = g[i]
                s_acc += gi * gi

        s = h.xi * s_acc
        v_new = h.beta * self.v + (1.0 - h.beta) * s
        self.v = v_new
        if h.beta == 1.0:
            v_hat = s
        else:
            v_hat = v_new / (1.0 - h.beta ** t)
        if log_embedding:
            r = loss / (loss * loss + abs(v_hat))
        else:
            r = 1.0 / (1.0 + abs(v_hat))

        bc1 = 1.0 - mu ** t
        a = h.eta * r
        lam = h.lam
        if rms_mode:
            for i in range(n):
                mi = mu * m[i] + one_minus_mu * g[i]
                m[i] = mi
                mh = ginv[i] * (mi / bc1)
                th[i] = th[i] - a * mh - lam * th[i]
        else:
            for i in range(n):
                mi = mu * m[i] + one_minus_mu * g[i]
                m[i] = mi
                mh = mi / bc1
                th[i] = th[i] - a * mh - lam * th[i]
        return r

    def _step_sgd(self, th: list[float], g: list[float]) -> float:
        h = self.h
        self.t += 1
        mu = h.mu
        one_minus_mu = 1.0 - mu
        bc1 = 1.0 - mu ** self.t
        eta = h.eta
        lam = h.lam
        m = self.m
        for i in range(self.n):
            mi = mu * m[i] + one_minus_mu * g[i]
            m[i] = mi
            th[i] = th[i] - eta * (mi / bc1) - lam * th[i]
        return 1.0

    def _step_rmsprop(self, th: list[float], g: list[float]) -> float:
        h = self.h
        self.t += 1
        beta2 = h.beta2
        one_minus_beta2 = 1.0 - beta2
        eta = h.eta
        eps = h.epsilon
        lam = h.lam
        rms = self.rms
        for i in range(self.n):
            gi = g[i] + lam * th[i] if lam != 0.0 else g[i]
            vi = beta2 * rms[i] + one_minus_beta2 * (gi * gi)
            rms[i] = vi
            th[i] = th[i] - eta * (gi / (math.sqrt(vi) + eps))
        return 1.0

    def _step_adam(self, th: list[float], g: list[float]) -> float:
        h = self.h
        decoupled = self.kind is OptimizerKind.ADAMW
        self.t += 1
        t = self.t
        mu = h.mu
        one_minus_mu = 1.0 - mu
        beta2 = h.beta2
        one_minus_beta2 = 1.0 - beta2
        bc1 = 1.0 - mu ** t
        bc2 = 1.0 - beta2 ** t
        eta = h.eta
        eps = h.epsilon
        lam = h.lam
        el = eta * lam
        m = self.m
        rms = self.rms
        for i in range(self.n):
            gi = g[i] if (decoupled or lam == 0.0) else g[i] + lam * th[i]
            mi = mu * m[i] + one_minus_mu * gi
            m[i] = mi
            vi = beta2 * rms[i] + one_minus_beta2 * (gi * gi)
            rms[i] = vi
            q = (mi / bc1) / (math.sqrt(vi / bc2) + eps)
            if decoupled:
                th[i] = th[i] - eta * q - el * th[i]
            else:
                th[i] = th[i] - eta * q
        return 1.0


# ---------------------------------------------------------------------------
# Config serialization
# ---------------------------------------------------------------------------

_CONFIG_KEYS = ("kind", "eta", "mu", "xi", "beta", "lambda", "beta2", "epsilon")


def config_to_json(kind: OptimizerKind, h: HyperParams) -> dict:
    """Serialize an optimizer config to a plain JSON-ready dict."""
    return {
        "kind": kind.value,
        "eta": h.eta,
        "mu": h.mu,
        "xi": h.xi,
        "beta": h.beta,
        "lambda": h.lam,
        "beta2": h.beta2,
        "epsilon": h.epsilon,
    }


def config_from_json(obj: dict) -> tuple[OptimizerKind, HyperParams]:
    """Parse an optimizer config dict; unknown keys are rejected."""
    if not isinstance(obj, dict):
        raise ValidationError("config", f"expected a JSON object, got {type(obj).__name__}")
    unknown = set(obj) - set(_CONFIG_KEYS)
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown optimizer config key")
    if "kind" not in obj:
        raise ValidationError("kind", "missing required key")
    try:
        kind = OptimizerKind(obj["kind"])
    except ValueError:
        valid = ", ".join(k.value for k in OptimizerKind)
        raise ValidationError("kind", f"unknown optimizer {obj['kind']!r}; valid: {valid}") from None
    if "eta" not in obj:
        raise ValidationError("eta", "missing required key")
    defaults = {"mu": 0.0, "xi": 0.0, "beta": 1.0, "lambda": 0.0, "beta2": 0.999, "epsilon": 1e-8}
    merged = {**defaults, **{k: v for k, v in obj.items() if k != "kind"}}
    for key, val in merged.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ValidationError(key, f"must be a number, got {val!r}")
    h = HyperParams(
        eta=float(merged["eta"]),
        mu=float(merged["mu"]),
        xi=float(merged["xi"]),
        beta=float(merged["beta"]),
        lam=float(merged["lambda"]),
        beta2=float(merged["beta2"]),
        epsilon=float(merged["epsilon"]),
    )
    return kind, h
