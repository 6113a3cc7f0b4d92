"""Run loop, convergence detection, hyperparameter sweeps, result records.

Low-dimensional protocol: iterate an optimizer on a test landscape until
the loss is within ``tol`` (default 1e-10) of the known global minimum or
the iteration budget runs out.  Runs that hit non-finite or absurd
(> 1e12) losses are marked diverged, not crashed.  The log-embedding
optimizer runs on a positively offset copy of the landscape since the
test functions bottom out at exactly zero.

Desk-scale protocol: epoch loop over shuffled mini-batches of a synthetic
regression/classification task, tracking the best validation loss.

Sweeps enumerate configs deterministically and execute them as
independent work items in a bounded process pool; results are collected
in enumeration order, so output is identical at any parallelism level.
Wall-clock fields are measurement-only and excluded from determinism
comparisons.  One JIT-analog warm-up evaluation is excluded from every
run's wall time.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import DomainError, ValidationError
from .landscapes import LANDSCAPE_NAMES, make_landscape, offset_loss
from .nn import (
    Batch,
    MlpSpec,
    PolyTask,
    backward,
    forward,
    gen_blobs_classification,
    gen_poly_data,
    init_params,
)
from .numcore import ParamVector, RngStream, dot
from .optim import (
    GammaMode,
    HyperParams,
    OptimizerKind,
    ScalarStepper,
    initial_state,
    step_baseline,
    step_induced,
    step_induced_log,
)

__all__ = [
    "RunConfig",
    "RunRecord",
    "SweepSpec",
    "run_lowdim",
    "run_nn",
    "run_config",
    "sweep",
    "summarize",
    "SummaryRow",
    "export_records_ndjson",
    "load_records_ndjson",
    "export_trace_csv",
    "export_summary_csv",
    "default_lowdim_sweep",
    "default_regression_sweep",
    "max_workers_cap",
    "TASK_NAMES",
]

TASK_NAMES = ("poly-regression", "blobs-classification")

CONVERGENCE_TOL = 1e-10
DIVERGENCE_LOSS_CAP = 1e12
DEFAULT_LOG_OFFSET = 1e-12
LOWDIM_MAX_ITERS = 100_000

# Documented default grids for the low-dimensional protocol: eta and xi
# log-spaced over the stated ranges, momentum linear, no metric EMA
# (beta = 1, losses are exact) and no weight decay.
LOWDIM_ETA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
LOWDIM_XI_GRID = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)
LOWDIM_MU_GRID = (0.0, 0.9, 0.99)
LOWDIM_OPTIMIZERS = ("sgd", "rmsprop", "adam", "im-sgd", "im-log-sgd", "im-rms")

# Desk-scale defaults.
NN_ETA_GRID = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)
NN_XI_FACTORS = (0.1, 1.0, 10.0)  # multiples of 1/n_params
NN_OPTIMIZERS = ("sgd", "rmsprop", "adam", "adamw", "im-sgd", "im-log-sgd", "im-rms")
REGRESSION_WIDTHS = (64, 64)
CLASSIFICATION_WIDTHS = (32, 32)


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run.

    ``target`` is a landscape name or task id.  Hyperparameters are kept
    flat so the whole config round-trips through JSON.  ``trace_every``
    controls per-step trace recording (0 disables; sweeps default to 0 to
    keep memory bounded).
    """

    target: str
    optimizer: str
    eta: float
    mu: float = 0.0
    xi: float = 0.0
    beta: float = 1.0
    lam: float = 0.0
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_iters: int = LOWDIM_MAX_ITERS
    tol: float = CONVERGENCE_TOL
    seed: int = 0
    batch_size: int = 256
    epochs: int = 200
    n_samples: int = 2560
    poly_degree: int = 6
    num_classes: int = 3
    hidden_widths: tuple[int, ...] = ()
    log_offset: float = DEFAULT_LOG_OFFSET
    trace_every: int = 1

    def __post_init__(self):
        if self.target not in LANDSCAPE_NAMES and self.target not in TASK_NAMES:
            valid = ", ".join((*LANDSCAPE_NAMES, *TASK_NAMES))
            raise ValidationError("target", f"unknown target {self.target!r}; valid: {valid}")
        try:
            OptimizerKind(self.optimizer)
        except ValueError:
            valid = ", ".join(k.value for k in OptimizerKind)
            raise ValidationError(
                "optimizer", f"unknown optimizer {self.optimizer!r}; valid: {valid}"
            ) from None
        self.hyperparams()  # validates eta/mu/xi/beta/lambda/beta2/epsilon
        if self.max_iters < 1:
            raise ValidationError("max_iters", f"must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ValidationError("tol", f"must be > 0, got {self.tol}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed", f"must fit in 64 unsigned bits, got {self.seed}")
        if self.batch_size < 1:
            raise ValidationError("batch_size", f"must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValidationError("epochs", f"must be >= 0, got {self.epochs}")
        if self.n_samples < 2:
            raise ValidationError("n_samples", f"must be >= 2, got {self.n_samples}")
        if not self.log_offset > 0:
            raise ValidationError("log_offset", f"must be > 0, got {self.log_offset}")
        if self.trace_every < 0:
            raise ValidationError("trace_every", f"must be >= 0, got {self.trace_every}")
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))

    def kind(self) -> OptimizerKind:
        return OptimizerKind(self.optimizer)

    def hyperparams(self) -> HyperParams:
        return HyperParams(
            eta=self.eta,
            mu=self.mu,
            xi=self.xi,
            beta=self.beta,
            lam=self.lam,
            beta2=self.beta2,
            epsilon=self.epsilon,
        )

    @property
    def is_lowdim(self) -> bool:
        return self.target in LANDSCAPE_NAMES


@dataclass
class RunRecord:
    """Full outcome of one run: config echo, trajectory summary, traces."""

    run_id: str
    config: dict
    converged: bool = False
    diverged: bool = False
    error: str | None = None
    iters: int = 0
    iters_to_converge: int | None = None
    final_loss: float | None = None
    final_theta: list[float] | None = None
    final_distance_to_minimum: float | None = None
    loss_offset: float = 0.0
    initial_val_loss: float | None = None
    best_val_loss: float | None = None
    best_epoch: int | None = None
    val_loss_series: list[float] = field(default_factory=list)
    best_val_series: list[float] = field(default_factory=list)
    trace: list[list[float]] = field(default_factory=list)
    wall_time_seconds: float = 0.0


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["hidden_widths"] = list(cfg.hidden_widths)
    return d


def run_lowdim(cfg: RunConfig, run_id: str = "run") -> RunRecord:
    """Iterate an optimizer on a test landscape until convergence/budget.

    Convergence means ``loss - min_value <= tol`` evaluated before each
    step, so starting at the global minimum converges at iteration 0.
    """
    if not cfg.is_lowdim:
        raise ValidationError("target", f"{cfg.target!r} is not a landscape")
    kind = cfg.kind()
    h = cfg.hyperparams()
    land = make_landscape(cfg.target)
    if kind.uses_log_embedding:
        land = offset_loss(land, cfg.log_offset)

    record = RunRecord(run_id=run_id, config=_config_dict(cfg), loss_offset=land.offset)
    f_xy = land.f_xy
    g_xy = land.g_xy
    min_value = land.min_value
    tol = cfg.tol
    theta = list(land.default_start)
    stepper = ScalarStepper(kind, h, 2)
    trace_every = cfg.trace_every

    # Warm-up evaluation excluded from the wall clock.
    f_xy(theta[0], theta[1])
    g_xy(theta[0], theta[1])

    t0 = time.perf_counter()
    steps = 0
    loss = f_xy(theta[0], theta[1])
    while True:
        if not math.isfinite(loss) or loss > DIVERGENCE_LOSS_CAP:
            record.diverged = True
            break
        if loss - min_value <= tol:
            record.converged = True
            record.iters_to_converge = steps
            break
        if steps >= cfg.max_iters:
            break
        gx, gy = g_xy(theta[0], theta[1])
        r = stepper.step(theta, [gx, gy], loss)
        steps += 1
        if trace_every and steps % trace_every == 0:
            record.trace.append([float(steps), loss, r, math.sqrt(gx * gx + gy * gy)])
        loss = f_xy(theta[0], theta[1])
    record.wall_time_seconds = time.perf_counter() - t0

    record.iters = steps
    record.final_loss = loss
    record.final_theta = list(theta)
    if math.isfinite(theta[0]) and math.isfinite(theta[1]):
        record.final_distance_to_minimum = land.distance_to_minimum(theta)
    return record


def _build_task(cfg: RunConfig) -> tuple[MlpSpec, Batch, Batch, RngStream, RngStream]:
    data_stream, init_stream, shuffle_stream = RngStream(cfg.seed).split(3)
    if cfg.target == "poly-regression":
        hidden = cfg.hidden_widths or REGRESSION_WIDTHS
        spec = MlpSpec((PolyTask.NUM_VARS, *hidden, 1), loss="l2")
        task = PolyTask(cfg.poly_degree, seed=data_stream.seed)
        train, val = gen_poly_data(task, cfg.n_samples, data_stream)
    else:
        hidden = cfg.hidden_widths or CLASSIFICATION_WIDTHS
        spec = MlpSpec((2, *hidden, cfg.num_classes), loss="softmax_ce")
        train, val = gen_blobs_classification(cfg.num_classes, cfg.n_samples, data_stream)
    return spec, train, val, init_stream, shuffle_stream


def run_nn(cfg: RunConfig, run_id: str = "run") -> RunRecord:
    """Epoch loop with per-epoch shuffled batches on a synthetic task."""
    if cfg.is_lowdim:
        raise ValidationError("target", f"{cfg.target!r} is not an nn task")
    kind = cfg.kind()
    h = cfg.hyperparams()
    spec, train, val, init_stream, shuffle_stream = _build_task(cfg)

    record = RunRecord(run_id=run_id, config=_config_dict(cfg))
    params = init_params(spec, init_stream)
    state = initial_state(spec.n_params, with_rms=kind.uses_second_moment)
    shuffle_rng = shuffle_stream.make()
    gamma_mode = GammaMode.RMS_IMPLIED if kind is OptimizerKind.IM_RMS else GammaMode.IDENTITY
    trace_every = cfg.trace_every

    # Warm-up forward/backward excluded from the wall clock.
    warm_loss, warm_cache = forward(spec, params, train)
    backward(spec, params, train, warm_cache)

    t0 = time.perf_counter()
    val_loss, _ = forward(spec, params, val)
    record.initial_val_loss = val_loss
    record.val_loss_series.append(val_loss)
    best = val_loss
    best_epoch = 0
    record.best_val_series.append(best)

    n_train = train.size
    steps = 0
    stop = False
    for epoch in range(1, cfg.epochs + 1):
        perm = shuffle_rng.permutation(n_train)
        for lo in range(0, n_train, cfg.batch_size):
            idx = perm[lo : lo + cfg.batch_size]
            batch = Batch(inputs=train.inputs[idx], targets=train.targets[idx])
            loss, cache = forward(spec, params, batch)
            if not math.isfinite(loss) or loss > DIVERGENCE_LOSS_CAP:
                record.diverged = True
                stop = True
                break
            g = backward(spec, params, batch, cache)
            try:
                if kind.is_induced:
                    if kind.uses_log_embedding:
                        state, params, tr = step_induced_log(state, params, g, loss, h)
                    else:
                        state, params, tr = step_induced(state, params, g, loss, h, gamma_mode)
                    r = tr.r_t
                else:
                    state, params = step_baseline(kind, state, params, g, h)
                    r = 1.0
            except (DomainError, ValueError) as exc:
                record.diverged = True
                record.error = str(exc)
                stop = True
                break
            steps += 1
            record.final_loss = loss
            if trace_every and steps % trace_every == 0:
                gnorm = math.sqrt(dot(g, g))
                record.trace.append([float(steps), loss, r, gnorm])
        if stop:
            break
        val_loss, _ = forward(spec, params, val)
        record.val_loss_series.append(val_loss)
        if val_loss < best:
            best = val_loss
            best_epoch = epoch
        record.best_val_series.append(best)

    record.wall_time_seconds = time.perf_counter() - t0
    record.iters = steps
    record.best_val_loss = best
    record.best_epoch = best_epoch
    return record


def run_config(cfg: RunConfig, run_id: str = "run") -> RunRecord:
    """Dispatch on the target type."""
    return run_lowdim(cfg, run_id) if cfg.is_lowdim else run_nn(cfg, run_id)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


_MOMENTUM_KINDS = {
    OptimizerKind.SGD,
    OptimizerKind.ADAM,
    OptimizerKind.ADAMW,
    OptimizerKind.IM_SGD,
    OptimizerKind.IM_LOG_SGD,
    OptimizerKind.IM_RMS,
}


@dataclass(frozen=True)
class SweepSpec:
    """Grid or random search over shared hyperparameter ranges.

    The same value axes apply to every optimizer (shared ranges);
    axes irrelevant to a kind (xi/beta for baselines, mu for plain
    RMSprop) collapse to the base config's value so equivalent runs are
    not duplicated.
    """

    targets: tuple[str, ...]
    optimizers: tuple[str, ...]
    base: RunConfig
    eta: tuple[float, ...]
    xi: tuple[float, ...] = (0.0,)
    mu: tuple[float, ...] = (0.0,)
    beta: tuple[float, ...] = (1.0,)
    lam: tuple[float, ...] = (0.0,)
    mode: str = "grid"
    samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if not self.targets:
            raise ValidationError("targets", "must not be empty")
        if not self.optimizers:
            raise ValidationError("optimizers", "must not be empty")
        if self.mode not in ("grid", "random"):
            raise ValidationError("mode", f"must be 'grid' or 'random', got {self.mode!r}")
        if self.mode == "grid" and not self.eta:
            raise ValidationError("eta", "grid mode needs at least one eta value")
        if self.mode == "random" and self.samples < 1:
            raise ValidationError("samples", "random mode needs samples >= 1")

    def _axes(self, kind: OptimizerKind) -> tuple:
        xi_axis = self.xi if kind.is_induced else (self.base.xi,)
        mu_axis = self.mu if kind in _MOMENTUM_KINDS else (self.base.mu,)
        beta_axis = self.beta if kind.is_induced else (self.base.beta,)
        return xi_axis, mu_axis, beta_axis, self.lam

    def enumerate_configs(self) -> list[RunConfig]:
        """Deterministic enumeration, identical at any parallelism level."""
        configs = []
        for target in self.targets:
            for opt in self.optimizers:
                kind = OptimizerKind(opt)
                if self.mode == "grid":
                    xi_axis, mu_axis, beta_axis, lam_axis = self._axes(kind)
                    for eta in self.eta:
                        for xi in xi_axis:
                            for mu in mu_axis:
                                for beta in beta_axis:
                                    for lam in lam_axis:
                                        configs.append(
                                            replace(
                                                self.base,
                                                target=target,
                                                optimizer=opt,
                                                eta=eta,
                                                xi=xi,
                                                mu=mu,
                                                beta=beta,
                                                lam=lam,
                                            )
                                        )
                else:
                    configs.extend(self._random_configs(target, kind))
        return configs

    def _random_configs(self, target: str, kind: OptimizerKind) -> list[RunConfig]:
        # One child stream per (target, optimizer) pair, in enumeration
        # order, so draws do not depend on execution order.
        pair_index = self.targets.index(target) * len(self.optimizers) + [
            OptimizerKind(o) for o in self.optimizers
        ].index(kind)
        streams = RngStream(self.seed).split(len(self.targets) * len(self.optimizers))
        rng = streams[pair_index].make()
        xi_axis, mu_axis, beta_axis, lam_axis = self._axes(kind)

        def _log_draw(vals: tuple[float, ...]) -> float:
            lo, hi = min(vals), max(vals)
            if lo == hi:
                return lo
            return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))

        def _lin_draw(vals: tuple[float, ...]) -> float:
            lo, hi = min(vals), max(vals)
            return lo if lo == hi else float(rng.uniform(lo, hi))

        out = []
        for _ in range(self.samples):
            out.append(
                replace(
                    self.base,
                    target=target,
                    optimizer=kind.value,
                    eta=_log_draw(self.eta),
                    xi=_log_draw(xi_axis) if len(xi_axis) > 1 else xi_axis[0],
                    mu=_lin_draw(mu_axis) if len(mu_axis) > 1 else mu_axis[0],
                    beta=_lin_draw(beta_axis) if len(beta_axis) > 1 else beta_axis[0],
                    lam=_lin_draw(lam_axis) if len(lam_axis) > 1 else lam_axis[0],
                )
            )
        return out


def _run_id_for(index: int, cfg: RunConfig) -> str:
    return f"{index:05d}-{cfg.target}-{cfg.optimizer}"


def _sweep_worker(args: tuple[int, RunConfig]) -> tuple[int, RunRecord]:
    index, cfg = args
    run_id = _run_id_for(index, cfg)
    try:
        return index, run_config(cfg, run_id)
    except Exception as exc:  # failures are recorded, never abort the sweep
        rec = RunRecord(run_id=run_id, config=_config_dict(cfg), error=f"{type(exc).__name__}: {exc}")
        return index, rec


def max_workers_cap(requested: int) -> int:
    """Apply the PULLBACK_OPTIM_THREADS cap to a requested worker count."""
    cap = os.environ.get("PULLBACK_OPTIM_THREADS")
    n = max(1, int(requested))
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def sweep(spec: SweepSpec, parallelism: int = 1) -> list[RunRecord]:
    """Run every config in the sweep; results in enumeration order."""
    configs = spec.enumerate_configs()
    jobs = list(enumerate(configs))
    workers = max_workers_cap(parallelism)
    if workers <= 1 or len(jobs) <= 1:
        return [_sweep_worker(j)[1] for j in jobs]
    results: list[RunRecord | None] = [None] * len(jobs)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for index, rec in pool.map(_sweep_worker, jobs, chunksize=max(1, len(jobs) // (workers * 4))):
            results[index] = rec
    return results  # ordered aggregation: output order never depends on scheduling


def default_lowdim_sweep(
    targets: tuple[str, ...] = LANDSCAPE_NAMES,
    optimizers: tuple[str, ...] = LOWDIM_OPTIMIZERS,
    max_iters: int = LOWDIM_MAX_ITERS,
    seed: int = 0,
) -> SweepSpec:
    """The documented default grid protocol for the five test landscapes."""
    base = RunConfig(
        target=targets[0],
        optimizer=optimizers[0],
        eta=LOWDIM_ETA_GRID[0],
        beta=1.0,
        max_iters=max_iters,
        seed=seed,
        trace_every=0,
    )
    return SweepSpec(
        targets=tuple(targets),
        optimizers=tuple(optimizers),
        base=base,
        eta=LOWDIM_ETA_GRID,
        xi=LOWDIM_XI_GRID,
        mu=LOWDIM_MU_GRID,
        beta=(1.0,),
        lam=(0.0,),
    )


def default_regression_sweep(
    epochs: int = 200,
    seed: int = 0,
    optimizers: tuple[str, ...] = NN_OPTIMIZERS,
) -> SweepSpec:
    """Grid protocol for the polynomial regression task."""
    hidden = REGRESSION_WIDTHS
    spec = MlpSpec((PolyTask.NUM_VARS, *hidden, 1))
    inv_n = 1.0 / spec.n_params
    base = RunConfig(
        target="poly-regression",
        optimizer=optimizers[0],
        eta=NN_ETA_GRID[0],
        beta=0.9,
        epochs=epochs,
        seed=seed,
        trace_every=0,
    )
    return SweepSpec(
        targets=("poly-regression",),
        optimizers=tuple(optimizers),
        base=base,
        eta=NN_ETA_GRID,
        xi=tuple(f * inv_n for f in NN_XI_FACTORS),
        mu=(0.9,),
        beta=(0.9,),
        lam=(0.0, 1e-3),
    )


# ---------------------------------------------------------------------------
# Summaries and exports
# ---------------------------------------------------------------------------


@dataclass
class SummaryRow:
    """Per-optimizer statistics of the top-k runs (best first)."""

    optimizer: str
    n_runs: int
    metric_mean: float
    metric_std: float
    epoch_mean: float
    epoch_std: float
    best_metric: float
    best_epoch: float
    best_wall_time_seconds: float


def _rank_key(rec: RunRecord):
    cfg = rec.config
    if cfg["target"] in LANDSCAPE_NAMES:
        # Best performing = converged fastest; otherwise got closest.
        dist = rec.final_distance_to_minimum
        dist = math.inf if dist is None or not math.isfinite(dist) else dist
        if rec.converged:
            return (0, rec.iters_to_converge, dist)
        return (1, math.inf, dist)
    best = rec.best_val_loss
    best = math.inf if best is None or not math.isfinite(best) else best
    return (0, best, 0.0)


def _metric_epoch(rec: RunRecord) -> tuple[float, float]:
    if rec.config["target"] in LANDSCAPE_NAMES:
        dist = rec.final_distance_to_minimum
        metric = math.inf if dist is None else dist
        epoch = rec.iters_to_converge if rec.converged else rec.iters
        return metric, float(epoch)
    metric = math.inf if rec.best_val_loss is None else rec.best_val_loss
    return metric, float(rec.best_epoch if rec.best_epoch is not None else 0)


def summarize(records: list[RunRecord], top_k: int = 50) -> list[SummaryRow]:
    """Per-optimizer mean/std of the top-k best runs plus the single best.

    ``top_k`` larger than the record count uses all records; standard
    deviations are population (ddof=0), so a single run reports std 0.
    """
    if not records:
        raise ValidationError("records", "must not be empty")
    by_opt: dict[str, list[RunRecord]] = {}
    for rec in records:
        if rec.error is not None:
            continue
        by_opt.setdefault(rec.config["optimizer"], []).append(rec)
    rows = []
    for opt in sorted(by_opt):
        ranked = sorted(by_opt[opt], key=_rank_key)
        top = ranked[: min(top_k, len(ranked))]
        pairs = [_metric_epoch(r) for r in top]
        metrics = np.array([p[0] for p in pairs])
        epochs = np.array([p[1] for p in pairs])
        best = top[0]
        bm, be = _metric_epoch(best)
        rows.append(
            SummaryRow(
                optimizer=opt,
                n_runs=len(top),
                metric_mean=float(np.mean(metrics)),
                metric_std=float(np.std(metrics)),
                epoch_mean=float(np.mean(epochs)),
                epoch_std=float(np.std(epochs)),
                best_metric=bm,
                best_epoch=be,
                best_wall_time_seconds=best.wall_time_seconds,
            )
        )
    return rows


def _record_dict(rec: RunRecord, include_wall_time: bool) -> dict:
    d = asdict(rec)
    if not include_wall_time:
        del d["wall_time_seconds"]
    return d


def export_records_ndjson(
    records: list[RunRecord], path: str, include_wall_time: bool = True
) -> None:
    """One JSON object per run, newline-delimited."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(_record_dict(rec, include_wall_time)))
            fh.write("\n")


def load_records_ndjson(path: str) -> list[RunRecord]:
    """Inverse of :func:`export_records_ndjson` (wall time defaults to 0)."""
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            d.setdefault("wall_time_seconds", 0.0)
            records.append(RunRecord(**d))
    return records


def export_trace_csv(records: list[RunRecord], path: str) -> None:
    """Wide CSV of per-step traces: run_id, step, loss, r_t, grad_norm."""
    with open(path, "w") as fh:
        fh.write("run_id,step,loss,r_t,grad_norm\n")
        for rec in records:
            for step, loss, r, gnorm in rec.trace:
                fh.write(f"{rec.run_id},{int(step)},{loss!r},{r!r},{gnorm!r}\n")


def export_summary_csv(rows: list[SummaryRow], path: str) -> None:
    """Summary table: per-optimizer metric/epoch stats and the best run."""
    header = (
        "optimizer,n_runs,metric_mean,metric_std,epoch_mean,epoch_std,"
        "best_metric,best_epoch,best_wall_time_seconds\n"
    )
    with open(path, "w") as fh:
        fh.write(header)
        for r in rows:
            fh.write(
                f"{r.optimizer},{r.n_runs},{r.metric_mean!r},{r.metric_std!r},"
                f"{r.epoch_mean!r},{r.epoch_std!r},{r.best_metric!r},{r.best_epoch!r},"
                f"{r.best_wall_time_seconds!r}\n"
            )
