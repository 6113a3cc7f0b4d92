"""Pathological 2-D test functions with exact analytic gradients.

Canonical textbook parameterizations: Rosenbrock (a=1, b=100),
Rastrigin (A=10), Ackley (a=20, b=0.2, c=2*pi), Beale, Himmelblau.  All
have known global minima with value 0 and fixed default start points
away from every minimum.

The scalar kernels (``f_xy`` / ``g_xy``) are the primary implementation;
``eval``/``grad`` wrap them for ParamVector callers.  Ackley's gradient
formula is singular at the origin (cone point); the kernel returns the
zero subgradient there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .errors import DomainError, UsageError
from .numcore import ParamVector

__all__ = ["Landscape", "make_landscape", "offset_loss", "LANDSCAPE_NAMES"]


def _rosenbrock_f(x: float, y: float) -> float:
    return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2


def _rosenbrock_g(x: float, y: float) -> tuple[float, float]:
    d = y - x * x
    return (-2.0 * (1.0 - x) - 400.0 * x * d, 200.0 * d)


_TWO_PI = 2.0 * math.pi


def _rastrigin_f(x: float, y: float) -> float:
    return (
        20.0
        + x * x - 10.0 * math.cos(_TWO_PI * x)
        + y * y - 10.0 * math.cos(_TWO_PI * y)
    )


def _rastrigin_g(x: float, y: float) -> tuple[float, float]:
    return (
        2.0 * x + 10.0 * _TWO_PI * math.sin(_TWO_PI * x),
        2.0 * y + 10.0 * _TWO_PI * math.sin(_TWO_PI * y),
    )


def _himmelblau_f(x: float, y: float) -> float:
    a = x * x + y - 11.0
    b = x + y * y - 7.0
    return a * a + b * b


def _himmelblau_g(x: float, y: float) -> tuple[float, float]:
    a = x * x + y - 11.0
    b = x + y * y - 7.0
    return (4.0 * x * a + 2.0 * b, 2.0 * a + 4.0 * y * b)


def _beale_f(x: float, y: float) -> float:
    t1 = 1.5 - x + x * y
    t2 = 2.25 - x + x * y * y
    t3 = 2.625 - x + x * y * y * y
    return t1 * t1 + t2 * t2 + t3 * t3


def _beale_g(x: float, y: float) -> tuple[float, float]:
    y2 = y * y
    y3 = y2 * y
    t1 = 1.5 - x + x * y
    t2 = 2.25 - x + x * y2
    t3 = 2.625 - x + x * y3
    fx = 2.0 * t1 * (y - 1.0) + 2.0 * t2 * (y2 - 1.0) + 2.0 * t3 * (y3 - 1.0)
    fy = 2.0 * t1 * x + 4.0 * t2 * x * y + 6.0 * t3 * x * y2
    return (fx, fy)


_ACKLEY_A = 20.0
_ACKLEY_B = 0.2
_ACKLEY_C = _TWO_PI


def _ackley_f(x: float, y: float) -> float:
    u = math.sqrt(0.5 * (x * x + y * y))
    w = 0.5 * (math.cos(_ACKLEY_C * x) + math.cos(_ACKLEY_C * y))
    return -_ACKLEY_A * math.exp(-_ACKLEY_B * u) - math.exp(w) + _ACKLEY_A + math.e


def _ackley_g(x: float, y: float) -> tuple[float, float]:
    u = math.sqrt(0.5 * (x * x + y * y))
    w = 0.5 * (math.cos(_ACKLEY_C * x) + math.cos(_ACKLEY_C * y))
    ew = math.exp(w)
    if u == 0.0:
        # Cone point: the radial term has no unique gradient; 0 is the
        # canonical subgradient and the trig term vanishes here anyway.
        c1 = 0.0
    else:
        c1 = _ACKLEY_A * _ACKLEY_B * math.exp(-_ACKLEY_B * u) / (2.0 * u)
    half_c = 0.5 * _ACKLEY_C
    return (
        c1 * x + ew * half_c * math.sin(_ACKLEY_C * x),
        c1 * y + ew * half_c * math.sin(_ACKLEY_C * y),
    )


@dataclass(frozen=True)
class Landscape:
    """A 2-D test function with analytic gradient and known minima."""

    name: str
    dim: int
    f_xy: Callable[[float, float], float]
    g_xy: Callable[[float, float], tuple[float, float]]
    minima: tuple[ParamVector, ...]
    min_value: float
    default_start: ParamVector
    offset: float = 0.0

    def eval(self, theta: Sequence[float]) -> float:
        return self.f_xy(theta[0], theta[1])

    def grad(self, theta: Sequence[float]) -> ParamVector:
        return ParamVector(self.g_xy(theta[0], theta[1]))

    def distance_to_minimum(self, theta: Sequence[float]) -> float:
        """Euclidean distance to the nearest known minimum."""
        x, y = theta[0], theta[1]
        return min(math.hypot(x - m[0], y - m[1]) for m in self.minima)


# Himmelblau's irrational minima, polished to full double precision
# (residual f < 1e-30, |grad| < 2e-14).
_HIMMELBLAU_MINIMA = (
    (3.0, 2.0),
    (-2.805118086952745, 3.131312518250573),
    (-3.779310253377747, -3.2831859912861696),
    (3.5844283403304917, -1.8481265269644036),
)

_REGISTRY: dict[str, dict] = {
    "rosenbrock": dict(
        f=_rosenbrock_f, g=_rosenbrock_g, minima=((1.0, 1.0),), start=(-1.2, 1.0)
    ),
    "rastrigin": dict(
        f=_rastrigin_f, g=_rastrigin_g, minima=((0.0, 0.0),), start=(2.3, 1.6)
    ),
    "himmelblau": dict(
        f=_himmelblau_f, g=_himmelblau_g, minima=_HIMMELBLAU_MINIMA, start=(0.0, 0.0)
    ),
    "beale": dict(
        f=_beale_f, g=_beale_g, minima=((3.0, 0.5),), start=(1.0, 1.0)
    ),
    "ackley": dict(
        f=_ackley_f, g=_ackley_g, minima=((0.0, 0.0),), start=(1.5, -1.3)
    ),
}

LANDSCAPE_NAMES = tuple(sorted(_REGISTRY))


def make_landscape(name: str) -> Landscape:
    """Build one of the five standard test functions by name."""
    try:
        entry = _REGISTRY[name]
    except KeyError:
        raise UsageError(
            f"unknown landscape {name!r}; valid names: {', '.join(LANDSCAPE_NAMES)}"
        ) from None
    return Landscape(
        name=name,
        dim=2,
        f_xy=entry["f"],
        g_xy=entry["g"],
        minima=tuple(ParamVector(m) for m in entry["minima"]),
        min_value=0.0,
        default_start=ParamVector(entry["start"]),
    )


def offset_loss(landscape: Landscape, c: float) -> Landscape:
    """Shift the loss by ``+c`` (gradients unchanged).

    Used to keep the loss strictly positive for the log embedding, whose
    height coordinate is undefined at loss <= 0.
    """
    if not c > 0.0:
        raise DomainError(f"offset must be > 0, got {c}")
    base_f = landscape.f_xy

    def shifted(x: float, y: float, _f=base_f, _c=c) -> float:
        return _f(x, y) + _c

    return replace(
        landscape,
        f_xy=shifted,
        min_value=landscape.min_value + c,
        offset=landscape.offset + c,
    )
