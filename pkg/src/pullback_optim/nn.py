"""Small MLPs with GELU activations and hand-derived backpropagation.

Covers the desk-scale experiments: L2 regression against a random
four-variable polynomial, and softmax-cross-entropy classification of
Gaussian blobs.  Parameters live in a single flat vector packed layer by
layer as ``[W1, b1, W2, b2, ...]`` with row-major weight matrices of
shape (fan_in, fan_out).

GELU uses the exact erf form ``x * Phi(x)`` rather than the tanh
approximation, so gradient checks have a single ground truth.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import product as _iter_product

import numpy as np
from scipy.special import erf

from .errors import DimensionError, DomainError, UsageError, ValidationError
from .numcore import ParamVector, RngStream

__all__ = [
    "MlpSpec",
    "Batch",
    "PolyTask",
    "ForwardCache",
    "forward",
    "backward",
    "init_params",
    "gen_poly_data",
    "gen_blobs_classification",
    "gelu",
    "gelu_prime",
    "batch_to_csv",
    "batch_from_csv",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

LOSS_L2 = "l2"
LOSS_SOFTMAX_CE = "softmax_ce"


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact GELU: ``x * Phi(x)`` with Phi the standard normal CDF."""
    return x * (0.5 * (1.0 + erf(x / _SQRT2)))


def gelu_prime(x: np.ndarray) -> np.ndarray:
    """d/dx GELU = Phi(x) + x * phi(x)."""
    phi_cdf = 0.5 * (1.0 + erf(x / _SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return phi_cdf + x * pdf


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths (input -> hidden... -> output) plus loss kind.

    Hidden layers use GELU; the output layer is linear (regression) or
    produces logits (classification).
    """

    layer_widths: tuple[int, ...]
    loss: str = LOSS_L2

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 3:
            raise ValidationError("layer_widths", "need at least one hidden layer")
        if any(w < 1 for w in widths):
            raise ValidationError("layer_widths", f"widths must be >= 1, got {widths}")
        if self.loss not in (LOSS_L2, LOSS_SOFTMAX_CE):
            raise ValidationError("loss", f"must be {LOSS_L2!r} or {LOSS_SOFTMAX_CE!r}")

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def n_params(self) -> int:
        ws = self.layer_widths
        return sum(ws[i] * ws[i + 1] + ws[i + 1] for i in range(len(ws) - 1))


@dataclass
class Batch:
    """A batch of inputs with regression targets or integer class labels."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise DimensionError(f"inputs must be (batch, dim) with batch >= 1, got {self.inputs.shape}")
        if not np.all(np.isfinite(self.inputs)):
            raise DomainError("batch inputs must be finite")
        t = np.asarray(self.targets)
        if np.issubdtype(t.dtype, np.integer):
            self.targets = t.astype(np.int64)
            if self.targets.ndim != 1:
                raise DimensionError("class labels must be a 1-D integer array")
        else:
            self.targets = t.astype(np.float64)
            if self.targets.ndim != 2:
                raise DimensionError(f"targets must be (batch, dim), got {self.targets.shape}")
            if not np.all(np.isfinite(self.targets)):
                raise DomainError("batch targets must be finite")
        if self.targets.shape[0] != self.inputs.shape[0]:
            raise DimensionError("inputs and targets disagree on batch size")

    @property
    def size(self) -> int:
        return self.inputs.shape[0]

    @property
    def is_classification(self) -> bool:
        return self.targets.ndim == 1


def _unpack(spec: MlpSpec, values: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    layers = []
    offset = 0
    ws = spec.layer_widths
    for i in range(spec.n_layers):
        fan_in, fan_out = ws[i], ws[i + 1]
        w = values[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        b = values[offset : offset + fan_out]
        offset += fan_out
        layers.append((w, b))
    return layers


def init_params(spec: MlpSpec, stream: RngStream) -> ParamVector:
    """Glorot-uniform weights, zero biases, deterministic per seed."""
    rng = stream.make()
    chunks = []
    ws = spec.layer_widths
    for i in range(spec.n_layers):
        fan_in, fan_out = ws[i], ws[i + 1]
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return ParamVector(np.concatenate(chunks))


@dataclass
class ForwardCache:
    """Activations saved by :func:`forward` for the matching backward pass."""

    params: ParamVector
    batch: Batch
    activations: list[np.ndarray] = field(repr=False, default_factory=list)
    pre_activations: list[np.ndarray] = field(repr=False, default_factory=list)
    outputs: np.ndarray | None = field(repr=False, default=None)


def _check_shapes(spec: MlpSpec, params: ParamVector, batch: Batch) -> None:
    if len(params) != spec.n_params:
        raise DimensionError(f"params has length {len(params)}, spec needs {spec.n_params}")
    if batch.inputs.shape[1] != spec.layer_widths[0]:
        raise DimensionError(
            f"batch input dim {batch.inputs.shape[1]} != spec input width {spec.layer_widths[0]}"
        )
    if spec.loss == LOSS_SOFTMAX_CE:
        if not batch.is_classification:
            raise DimensionError("softmax_ce needs integer class labels")
        if np.any(batch.targets < 0) or np.any(batch.targets >= spec.layer_widths[-1]):
            raise DomainError("class labels out of range for output width")
    else:
        if batch.is_classification:
            raise DimensionError("l2 loss needs real-valued targets")
        if batch.targets.shape[1] != spec.layer_widths[-1]:
            raise DimensionError(
                f"target dim {batch.targets.shape[1]} != spec output width {spec.layer_widths[-1]}"
            )


def forward(spec: MlpSpec, params: ParamVector, batch: Batch) -> tuple[float, ForwardCache]:
    """Mean batch loss plus the cache needed by :func:`backward`.

    L2 loss is the batch mean of the squared residual norm; cross entropy
    is the batch mean of ``-log softmax(logits)[label]``.
    """
    _check_shapes(spec, params, batch)
    layers = _unpack(spec, params.values)
    cache = ForwardCache(params=params, batch=batch)

    a = batch.inputs
    cache.activations.append(a)
    for w, b in layers[:-1]:
        z = a @ w + b
        cache.pre_activations.append(z)
        a = gelu(z)
        cache.activations.append(a)
    w_out, b_out = layers[-1]
    out = a @ w_out + b_out
    cache.outputs = out

    n = batch.size
    if spec.loss == LOSS_L2:
        resid = out - batch.targets
        loss = float(np.sum(resid * resid) / n)
    else:
        shifted = out - np.max(out, axis=1, keepdims=True)
        lse = np.log(np.sum(np.exp(shifted), axis=1))
        picked = shifted[np.arange(n), batch.targets]
        loss = float(np.sum(lse - picked) / n)
    return loss, cache


def backward(spec: MlpSpec, params: ParamVector, batch: Batch, cache: ForwardCache) -> ParamVector:
    """Exact gradient of the mean batch loss w.r.t. every parameter."""
    if cache.params is not params or cache.batch is not batch:
        raise UsageError("cache does not belong to these params/batch (stale cache)")
    layers = _unpack(spec, params.values)
    n = batch.size

    if spec.loss == LOSS_L2:
        dz = 2.0 * (cache.outputs - batch.targets) / n
    else:
        shifted = cache.outputs - np.max(cache.outputs, axis=1, keepdims=True)
        expz = np.exp(shifted)
        probs = expz / np.sum(expz, axis=1, keepdims=True)
        probs[np.arange(n), batch.targets] -= 1.0
        dz = probs / n

    grads: list[np.ndarray | None] = [None] * spec.n_layers
    for li in range(spec.n_layers - 1, -1, -1):
        w, _b = layers[li]
        a_prev = cache.activations[li]
        dw = a_prev.T @ dz
        db = np.sum(dz, axis=0)
        grads[li] = np.concatenate([dw.ravel(), db])
        if li > 0:
            da = dz @ w.T
            dz = da * gelu_prime(cache.pre_activations[li - 1])
    return ParamVector(np.concatenate(grads))


# ---------------------------------------------------------------------------
# Synthetic tasks
# ---------------------------------------------------------------------------


class PolyTask:
    """Random dense polynomial in four variables on [-1, 1]^4.

    All monomials of total degree <= ``degree`` get an N(0, 1)
    coefficient from the seeded stream, so the same seed always defines
    the same polynomial.
    """

    NUM_VARS = 4

    def __init__(self, degree: int, seed: int):
        if degree < 0:
            raise ValidationError("degree", f"must be >= 0, got {degree}")
        self.degree = int(degree)
        self.seed = int(seed)
        self.num_vars = self.NUM_VARS
        exps = [
            e
            for e in _iter_product(range(self.degree + 1), repeat=self.NUM_VARS)
            if sum(e) <= self.degree
        ]
        exps.sort()
        self.exponents = np.array(exps, dtype=np.int64)
        rng = RngStream(seed).make()
        self.coefficients = rng.normal(0.0, 1.0, size=len(exps))

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Polynomial values for inputs of shape (n, 4)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.num_vars:
            raise DimensionError(f"expected shape (n, {self.num_vars}), got {x.shape}")
        monomials = np.prod(
            x[:, None, :] ** self.exponents[None, :, :], axis=2
        )
        return monomials @ self.coefficients


_STD_FLOOR = 1e-12


def gen_poly_data(task: PolyTask, n: int, stream: RngStream) -> tuple[Batch, Batch]:
    """Sample n points, split 80/20, standardize targets by train stats.

    Degenerate constant targets are guarded by flooring the standard
    deviation at 1e-12 instead of erroring.
    """
    if n < 2:
        raise ValidationError("n", f"need at least 2 samples, got {n}")
    rng = stream.make()
    x = rng.uniform(-1.0, 1.0, size=(n, task.num_vars))
    y = task.evaluate(x)
    n_train = max(1, int(n * 0.8))
    mean = float(np.mean(y[:n_train]))
    std = max(float(np.std(y[:n_train])), _STD_FLOOR)
    y_std = ((y - mean) / std)[:, None]
    train = Batch(inputs=x[:n_train], targets=y_std[:n_train])
    val = Batch(inputs=x[n_train:], targets=y_std[n_train:])
    return train, val


def gen_blobs_classification(
    k: int, n: int, stream: RngStream, center_box: float = 5.0, cluster_std: float = 0.6
) -> tuple[Batch, Batch]:
    """Seeded 2-D Gaussian clusters with cluster-index labels, split 80/20."""
    if k < 2:
        raise ValidationError("k", f"need at least 2 classes, got {k}")
    if n < 2:
        raise ValidationError("n", f"need at least 2 samples, got {n}")
    rng = stream.make()
    centers = rng.uniform(-center_box, center_box, size=(k, 2))
    labels = rng.integers(0, k, size=n)
    points = centers[labels] + rng.normal(0.0, cluster_std, size=(n, 2))
    n_train = max(1, int(n * 0.8))
    train = Batch(inputs=points[:n_train], targets=labels[:n_train])
    val = Batch(inputs=points[n_train:], targets=labels[n_train:])
    return train, val


# ---------------------------------------------------------------------------
# CSV import/export
# ---------------------------------------------------------------------------


def batch_to_csv(batch: Batch, path: str) -> None:
    """One header row, then one sample per line: inputs then targets."""
    din = batch.inputs.shape[1]
    if batch.is_classification:
        header = [f"x{i}" for i in range(din)] + ["label"]
    else:
        header = [f"x{i}" for i in range(din)] + [
            f"y{i}" for i in range(batch.targets.shape[1])
        ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(batch.size):
            row = [repr(v) for v in batch.inputs[i].tolist()]
            if batch.is_classification:
                row.append(str(int(batch.targets[i])))
            else:
                row.extend(repr(v) for v in batch.targets[i].tolist())
            writer.writerow(row)


def batch_from_csv(path: str, n_inputs: int, classification: bool = False) -> Batch:
    """Inverse of :func:`batch_to_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) <= n_inputs:
            raise DimensionError(
                f"csv has {len(header)} columns, need more than n_inputs={n_inputs}"
            )
        inputs, targets = [], []
        for row in reader:
            inputs.append([float(v) for v in row[:n_inputs]])
            if classification:
                targets.append(int(row[n_inputs]))
            else:
                targets.append([float(v) for v in row[n_inputs:]])
    t = np.array(targets, dtype=np.int64 if classification else np.float64)
    return Batch(inputs=np.array(inputs), targets=t)
