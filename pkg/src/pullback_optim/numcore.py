"""Dense real-vector arithmetic and deterministic pseudo-randomness.

Everything downstream works in 64-bit floats: the low-dimensional
benchmarks demand convergence to 1e-10 of the global minimum, which is
out of reach in single precision.  Reductions are accumulated in a fixed
sequential (left-to-right) order so that results are bit-reproducible
regardless of how many runs execute concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DimensionError, NumericError

__all__ = ["ParamVector", "RngStream", "dot", "axpy"]


class ParamVector:
    """Immutable flat vector of 64-bit reals.

    Length is fixed at construction and every entry must be finite;
    binary operations require equal lengths.  The backing numpy array is
    marked read-only, so views handed out via ``values`` cannot mutate
    the vector.
    """

    __slots__ = ("_data",)

    def __init__(self, values: Sequence[float] | np.ndarray):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise DimensionError(f"expected a 1-D vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericError("vector entries must be finite (no NaN/Inf)")
        arr.flags.writeable = False
        self._data = arr

    @classmethod
    def zeros(cls, n: int) -> "ParamVector":
        if n < 0:
            raise DimensionError(f"length must be >= 0, got {n}")
        return cls(np.zeros(n))

    @property
    def values(self) -> np.ndarray:
        """Read-only numpy view of the entries."""
        return self._data

    def tolist(self) -> list[float]:
        return self._data.tolist()

    def __len__(self) -> int:
        return self._data.shape[0]

    def __getitem__(self, i: int) -> float:
        return float(self._data[i])

    def __iter__(self) -> Iterator[float]:
        return iter(self._data.tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParamVector):
            return NotImplemented
        return len(self) == len(other) and bool(np.all(self._data == other._data))

    def __hash__(self):
        return hash((len(self), self._data.tobytes()))

    def __repr__(self) -> str:
        return f"ParamVector({self._data.tolist()!r})"

    # Convenience arithmetic (elementwise, length-checked).  Heavier
    # algebra belongs to the callers; these cover the optimizer updates.
    def __add__(self, other: "ParamVector") -> "ParamVector":
        _check_lengths(self, other)
        return ParamVector(self._data + other._data)

    def __sub__(self, other: "ParamVector") -> "ParamVector":
        _check_lengths(self, other)
        return ParamVector(self._data - other._data)

    def __mul__(self, scalar: float) -> "ParamVector":
        return ParamVector(self._data * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "ParamVector":
        return ParamVector(-self._data)


def _check_lengths(a: ParamVector, b: ParamVector) -> None:
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {len(a)} vs {len(b)}")


def dot(a: ParamVector, b: ParamVector) -> float:
    """Sequential left-to-right dot product.

    The accumulation order is part of the contract: it makes results
    bit-reproducible for a fixed input, independent of thread count or
    BLAS backend.
    """
    _check_lengths(a, b)
    total = 0.0
    for x, y in zip(a._data.tolist(), b._data.tolist()):
        total += x * y
    return total


def axpy(alpha: float, x: ParamVector, y: ParamVector) -> ParamVector:
    """Return ``y + alpha * x`` elementwise."""
    _check_lengths(x, y)
    return ParamVector(y._data + float(alpha) * x._data)


_KNOWN_ALGORITHMS = ("pcg64",)


@dataclass(frozen=True)
class RngStream:
    """Named deterministic random source.

    The same ``seed`` always yields the same sequence, no matter how many
    runs execute concurrently: each consumer creates its own generator
    via :meth:`make`.
    """

    seed: int
    algorithm: str = "pcg64"

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise NumericError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.algorithm not in _KNOWN_ALGORITHMS:
            raise ValueError(
                f"unknown rng algorithm {self.algorithm!r}; known: {_KNOWN_ALGORITHMS}"
            )

    def make(self) -> np.random.Generator:
        """Fresh generator positioned at the start of the stream."""
        return np.random.Generator(np.random.PCG64(self.seed))

    def split(self, n: int) -> list["RngStream"]:
        """Derive ``n`` independent child streams deterministically."""
        children = np.random.SeedSequence(self.seed).spawn(n)
        return [RngStream(int(c.generate_state(1, np.uint64)[0])) for c in children]
