"""Built-in verification suites.

Each checker exercises one geometric identity or reduction against an
independent oracle (dense linear algebra, finite differences, closed
forms) and returns the worst observed error.  The CLI ``selftest``
command runs them all at moderate trial counts; the acceptance tests run
the same code at the full counts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (
    InverseMetric,
    induced_update_flat,
    induced_update_log,
    pullback_metric_dense,
    sherman_morrison_inverse,
)
from .landscapes import LANDSCAPE_NAMES, make_landscape
from .nn import Batch, MlpSpec, backward, forward, init_params
from .numcore import ParamVector, RngStream
from .optim import (
    GammaMode,
    HyperParams,
    OptimizerKind,
    initial_state,
    step_baseline,
    step_induced,
    step_induced_log,
)

__all__ = [
    "CheckResult",
    "run_all",
    "check_sherman_morrison",
    "check_flat_dense_equivalence",
    "check_direction_preservation",
    "check_clipping_profile",
    "check_log_scale_invariance",
    "check_sgd_reduction",
    "check_adamw_reduction",
    "check_mlp_gradients",
    "check_landscape_gradients",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    elapsed_seconds: float
    detail: str = ""


def _result(name, max_error, tol, t0, detail="") -> CheckResult:
    return CheckResult(
        name=name,
        passed=bool(max_error < tol),
        max_error=float(max_error),
        tolerance=tol,
        elapsed_seconds=time.perf_counter() - t0,
        detail=detail,
    )


def _random_spd_pair(rng: np.random.Generator, n: int, diagonal: bool):
    """Return (gamma, gamma_inv) exactly inverse up to one rounding each."""
    if diagonal:
        d_inv = 10.0 ** rng.uniform(-2.0, 2.0, size=n)
        return np.diag(1.0 / d_inv), np.diag(d_inv)
    a = rng.normal(size=(n, n))
    gamma = a @ a.T + n * np.eye(n)
    gamma_inv = np.linalg.inv(gamma)
    gamma_inv = 0.5 * (gamma_inv + gamma_inv.T)
    return gamma, gamma_inv


def check_sherman_morrison(trials: int = 1000, seed: int = 101, diagonal: bool = True) -> CheckResult:
    """Rank-one inverse times the dense induced metric must be identity."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 17))
        gamma, gamma_inv = _random_spd_pair(rng, n, diagonal)
        g = ParamVector(rng.normal(0.0, 3.0, size=n))
        prod = sherman_morrison_inverse(gamma_inv, g) @ pullback_metric_dense(gamma, g)
        worst = max(worst, float(np.max(np.abs(prod - np.eye(n)))))
    return _result("sherman-morrison-inverse", worst, 1e-10, t0)


def check_flat_dense_equivalence(trials: int = 1000, seed: int = 101) -> CheckResult:
    """Simplified flat update == -eta * (gamma + xi g g^T)^{-1} g."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 17))
        d_inv = 10.0 ** rng.uniform(-2.0, 2.0, size=n)
        g = rng.normal(0.0, 3.0, size=n)
        eta = 10.0 ** rng.uniform(-3.0, 0.0)
        xi = 10.0 ** rng.uniform(-3.0, 3.0)
        update = induced_update_flat(
            ParamVector(g), InverseMetric.diagonal_scaled(d_inv), eta, xi
        )
        dense = np.diag(1.0 / d_inv) + xi * np.outer(g, g)
        expected = -eta * np.linalg.solve(dense, g)
        worst = max(worst, float(np.max(np.abs(update.values - expected))))
    return _result("flat-update-dense-equivalence", worst, 1e-10, t0)


def check_direction_preservation(trials: int = 200, seed: int = 7) -> CheckResult:
    """With the identity metric the flat update is antiparallel to g."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    euclid = InverseMetric.euclidean()
    for _ in range(trials):
        n = int(rng.integers(1, 33))
        g = rng.normal(0.0, 10.0 ** rng.uniform(-3, 3), size=n)
        if np.linalg.norm(g) == 0.0:
            continue
        u = induced_update_flat(ParamVector(g), euclid, 0.3, 0.7).values
        cos = float(np.dot(u, -g) / (np.linalg.norm(u) * np.linalg.norm(g)))
        worst = max(worst, abs(cos - 1.0))
    return _result("direction-preservation", worst, 1e-12, t0)


def check_clipping_profile(eta: float = 0.7, xi: float = 2.5, points: int = 20001) -> CheckResult:
    """Scalar step magnitude peaks at eta/(2 sqrt(xi)) where |l| = 1/sqrt(xi)."""
    t0 = time.perf_counter()
    euclid = InverseMetric.euclidean()
    grid = np.logspace(-4.0, 4.0, points)
    best = 0.0
    arg = 0.0
    for l in grid:
        step = abs(induced_update_flat(ParamVector([l]), euclid, eta, xi)[0])
        if step > best:
            best, arg = step, l
    peak = eta / (2.0 * math.sqrt(xi))
    err = abs(best - peak)
    loc_err = abs(arg - 1.0 / math.sqrt(xi))
    detail = f"peak at |l|={arg:.6g} (expected {1.0 / math.sqrt(xi):.6g}, off by {loc_err:.2e})"
    return _result("clipping-profile-max", err, 1e-6, t0, detail)


def check_log_scale_invariance(trials: int = 200, seed: int = 11) -> CheckResult:
    """Log-embedding updates are invariant under (g, L) -> (c g, c L)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    euclid = InverseMetric.euclidean()
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 17))
        g = rng.normal(0.0, 2.0, size=n)
        loss = float(10.0 ** rng.uniform(-2, 2))
        eta = 10.0 ** rng.uniform(-2.0, 0.0)
        xi = 10.0 ** rng.uniform(-2.0, 2.0)
        ref = induced_update_log(ParamVector(g), loss, euclid, eta, xi).values
        for c in (1e-6, 1.0, 1e6):
            scaled = induced_update_log(ParamVector(c * g), c * loss, euclid, eta, xi).values
            worst = max(worst, float(np.max(np.abs(scaled - ref))))
    return _result("log-scale-invariance", worst, 1e-9, t0)


def _random_quadratic(rng: np.random.Generator, n: int):
    a = rng.normal(size=(n, n))
    q = a @ a.T / n + 0.5 * np.eye(n)
    center = rng.normal(size=n)
    floor = 0.5

    def value(theta: np.ndarray) -> float:
        d = theta - center
        return 0.5 * float(d @ q @ d) + floor

    def grad(theta: np.ndarray) -> np.ndarray:
        return q @ (theta - center)

    return value, grad, rng.normal(size=n) * 2.0


def check_sgd_reduction(steps: int = 100, seed: int = 23) -> CheckResult:
    """Flat rule at xi = 0 with identity metric must track the SGD baseline."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    n = 6
    value, grad, start = _random_quadratic(rng, n)
    h = HyperParams(eta=0.05, mu=0.9, xi=0.0, beta=1.0, lam=1e-3)
    th_a = ParamVector(start)
    th_b = ParamVector(start)
    st_a = initial_state(n)
    st_b = initial_state(n)
    worst = 0.0
    for _ in range(steps):
        g_a = ParamVector(grad(th_a.values))
        st_a, th_a, _ = step_induced(st_a, th_a, g_a, value(th_a.values), h)
        g_b = ParamVector(grad(th_b.values))
        st_b, th_b = step_baseline(OptimizerKind.SGD, st_b, th_b, g_b, h)
        worst = max(worst, float(np.max(np.abs(th_a.values - th_b.values))))
    return _result("xi-zero-reduces-to-sgd", worst, 1e-12, t0)


def check_adamw_reduction(steps: int = 100, seed: int = 29) -> CheckResult:
    """RMS-metric rule at xi = 0 must track AdamW (lambda convention aligned)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    n = 6
    value, grad, start = _random_quadratic(rng, n)
    eta, lam_w = 0.01, 0.02
    # The custom rule applies lambda raw; AdamW scales it by eta.
    h_im = HyperParams(eta=eta, mu=0.9, xi=0.0, beta=1.0, lam=eta * lam_w, beta2=0.999)
    h_aw = HyperParams(eta=eta, mu=0.9, xi=0.0, beta=1.0, lam=lam_w, beta2=0.999)
    th_a = ParamVector(start)
    th_b = ParamVector(start)
    st_a = initial_state(n, with_rms=True)
    st_b = initial_state(n, with_rms=True)
    worst = 0.0
    for _ in range(steps):
        g_a = ParamVector(grad(th_a.values))
        st_a, th_a, _ = step_induced(
            st_a, th_a, g_a, value(th_a.values), h_im, GammaMode.RMS_IMPLIED
        )
        g_b = ParamVector(grad(th_b.values))
        st_b, th_b = step_baseline(OptimizerKind.ADAMW, st_b, th_b, g_b, h_aw)
        worst = max(worst, float(np.max(np.abs(th_a.values - th_b.values))))
    return _result("xi-zero-rms-reduces-to-adamw", worst, 1e-9, t0)


def check_log_trajectory_invariance(steps: int = 200, seed: int = 31) -> CheckResult:
    """Whole log-embedding trajectories are loss-scale invariant."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    n = 8
    value, grad, start = _random_quadratic(rng, n)
    h = HyperParams(eta=0.05, mu=0.9, xi=0.5, beta=0.9, lam=1e-3)
    worst = 0.0
    ref = None
    for c in (1e-6, 1.0, 1e6):
        th = ParamVector(start)
        st = initial_state(n)
        path = []
        for _ in range(steps):
            g = ParamVector(c * grad(th.values))
            st, th, _ = step_induced_log(st, th, g, c * value(th.values), h)
            path.append(th.values.copy())
        path = np.array(path)
        if ref is None:
            ref = path
        else:
            worst = max(worst, float(np.max(np.abs(path - ref))))
    return _result("log-trajectory-scale-invariance", worst, 1e-9, t0)


def check_mlp_gradients(seeds: int = 20, seed0: int = 500) -> CheckResult:
    """Backprop vs central finite differences on nets up to 200 params."""
    t0 = time.perf_counter()
    worst = 0.0
    specs = [
        MlpSpec((3, 8, 5, 2), loss="l2"),
        MlpSpec((2, 6, 4), loss="softmax_ce"),
    ]
    for k in range(seeds):
        spec = specs[k % len(specs)]
        stream = RngStream(seed0 + k)
        rng = stream.make()
        params = init_params(spec, RngStream(seed0 + 1000 + k))
        nb = 8
        x = rng.normal(size=(nb, spec.layer_widths[0]))
        if spec.loss == "l2":
            t = rng.normal(size=(nb, spec.layer_widths[-1]))
        else:
            t = rng.integers(0, spec.layer_widths[-1], size=nb)
        batch = Batch(inputs=x, targets=t)
        _, cache = forward(spec, params, batch)
        g = backward(spec, params, batch, cache).values
        fd = np.empty_like(g)
        base = params.values
        for i in range(len(base)):
            hstep = 1e-6 * max(1.0, abs(base[i]))
            plus = base.copy()
            plus[i] += hstep
            minus = base.copy()
            minus[i] -= hstep
            lp, _ = forward(spec, ParamVector(plus), batch)
            lm, _ = forward(spec, ParamVector(minus), batch)
            fd[i] = (lp - lm) / (2.0 * hstep)
        rel = float(np.max(np.abs(fd - g)) / max(float(np.max(np.abs(g))), 1e-12))
        worst = max(worst, rel)
    return _result("mlp-gradient-check", worst, 1e-5, t0)


def check_landscape_gradients(points: int = 100, seed: int = 77) -> CheckResult:
    """Analytic gradients vs central finite differences on all landscapes."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in LANDSCAPE_NAMES:
        land = make_landscape(name)
        for _ in range(points):
            x, y = rng.uniform(-4.0, 4.0, size=2)
            gx, gy = land.g_xy(x, y)
            hstep = 2e-6
            fdx = (land.f_xy(x + hstep, y) - land.f_xy(x - hstep, y)) / (2 * hstep)
            fdy = (land.f_xy(x, y + hstep) - land.f_xy(x, y - hstep)) / (2 * hstep)
            scale = max(abs(gx), abs(gy), 1.0)
            rel = max(abs(fdx - gx), abs(fdy - gy)) / scale
            worst = max(worst, rel)
    return _result("landscape-gradient-check", worst, 1e-6, t0)


_QUICK_SUITE: tuple[tuple[Callable[[], CheckResult]], ...] = (
    lambda: check_sherman_morrison(trials=200),
    lambda: check_sherman_morrison(trials=100, diagonal=False),
    lambda: check_flat_dense_equivalence(trials=200),
    lambda: check_direction_preservation(),
    lambda: check_clipping_profile(),
    lambda: check_log_scale_invariance(),
    lambda: check_sgd_reduction(),
    lambda: check_adamw_reduction(),
    lambda: check_log_trajectory_invariance(),
    lambda: check_mlp_gradients(seeds=4),
    lambda: check_landscape_gradients(points=25),
)


def run_all() -> list[CheckResult]:
    """Moderate-intensity pass over every property; used by the CLI."""
    return [fn() for fn in _QUICK_SUITE]
