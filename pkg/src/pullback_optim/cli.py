"""Command-line entry point.

Subcommands: ``bench-lowdim`` (single landscape run, record JSON on
stdout), ``train-nn`` (single task run), ``sweep`` (grid/random search
with exports), ``summarize`` (stats over exported records), ``selftest``
(built-in oracle suites).

Configs come from a single JSON document mirroring RunConfig/SweepSpec;
command-line flags override config fields.  Validation happens before
any computation starts; validation failures exit 1 with a message naming
the offending field, runtime failures exit 2.  The PULLBACK_OPTIM_THREADS
environment variable caps sweep workers.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .errors import ValidationError
from .harness import (
    RunConfig,
    SweepSpec,
    default_lowdim_sweep,
    default_regression_sweep,
    export_records_ndjson,
    export_summary_csv,
    export_trace_csv,
    load_records_ndjson,
    run_lowdim,
    run_nn,
    summarize,
    sweep,
)
from .landscapes import LANDSCAPE_NAMES
from .nn import MlpSpec, PolyTask
from .harness import REGRESSION_WIDTHS, CLASSIFICATION_WIDTHS, TASK_NAMES
from .optim import OptimizerKind
from . import selftest as _selftest

_RUN_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}
_SWEEP_SIMPLE_KEYS = {
    "targets",
    "optimizers",
    "eta",
    "xi",
    "mu",
    "beta",
    "lambda",
    "mode",
    "samples",
    "seed",
    "base",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; route through the validation path
    # instead so flag errors exit 1 like other validation failures.
    def error(self, message):
        raise ValidationError("argv", message)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--optimizer", type=str, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--beta2", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--log-offset", dest="log_offset", type=float, default=None)
    p.add_argument("--trace-every", dest="trace_every", type=int, default=None)
    p.add_argument("--config", type=str, default=None)
    p.add_argument("--out", type=str, default=None)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pullback-optim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench-lowdim", help="single optimizer run on a test landscape")
    p.add_argument("--landscape", type=str, default=None)
    _add_run_flags(p)

    p = sub.add_parser("train-nn", help="single optimizer run on a synthetic nn task")
    p.add_argument("--task", type=str, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--n-samples", dest="n_samples", type=int, default=None)
    p.add_argument("--poly-degree", dest="poly_degree", type=int, default=None)
    p.add_argument("--num-classes", dest="num_classes", type=int, default=None)
    _add_run_flags(p)

    p = sub.add_parser("sweep", help="grid/random hyperparameter sweep with exports")
    p.add_argument("--config", type=str, default=None)
    p.add_argument("--preset", choices=("lowdim", "regression"), default=None)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--top-k", dest="top_k", type=int, default=50)
    p.add_argument("--no-wall-time", dest="wall_time", action="store_false")

    p = sub.add_parser("summarize", help="summary table from exported records")
    p.add_argument("--records", type=str, required=True)
    p.add_argument("--top-k", dest="top_k", type=int, default=50)
    p.add_argument("--out", type=str, default=None)

    sub.add_parser("selftest", help="run the built-in oracle suites")
    return parser


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ValidationError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError("config", f"invalid JSON in {path}: {exc}") from None
    if not isinstance(obj, dict):
        raise ValidationError("config", "top-level JSON value must be an object")
    return obj


def _run_config_from(doc: dict, overrides: dict, defaults: dict) -> RunConfig:
    """Merge config document, CLI overrides, and required defaults."""
    merged = dict(defaults)
    for key, val in doc.items():
        name = "lam" if key == "lambda" else key
        if name not in _RUN_CONFIG_FIELDS:
            raise ValidationError(key, "unknown config key")
        merged[name] = val
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val
    if merged.get("eta") is None:
        raise ValidationError("eta", "required (set --eta or put it in the config file)")
    if "hidden_widths" in merged and merged["hidden_widths"] is not None:
        merged["hidden_widths"] = tuple(merged["hidden_widths"])
    return RunConfig(**merged)


def _natural_xi(cfg: RunConfig) -> float:
    """Natural starting scale for xi: one over the parameter count."""
    if cfg.is_lowdim:
        return 0.5
    if cfg.target == "poly-regression":
        hidden = cfg.hidden_widths or REGRESSION_WIDTHS
        return 1.0 / MlpSpec((PolyTask.NUM_VARS, *hidden, 1)).n_params
    hidden = cfg.hidden_widths or CLASSIFICATION_WIDTHS
    return 1.0 / MlpSpec((2, *hidden, cfg.num_classes), loss="softmax_ce").n_params


def _emit_record(record, out_dir: str | None, include_wall_time: bool = True) -> None:
    line = json.dumps(
        {
            k: v
            for k, v in dataclasses.asdict(record).items()
            if include_wall_time or k != "wall_time_seconds"
        }
    )
    print(line)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        export_records_ndjson([record], os.path.join(out_dir, "records.ndjson"), include_wall_time)
        export_trace_csv([record], os.path.join(out_dir, "trace.csv"))


def _cmd_bench_lowdim(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    overrides = {
        k: getattr(args, k)
        for k in (
            "optimizer", "eta", "mu", "xi", "beta", "lam", "beta2", "epsilon",
            "seed", "max_iters", "tol", "log_offset", "trace_every",
        )
    }
    overrides["target"] = args.landscape
    defaults = {"target": None, "optimizer": "im-sgd", "eta": None}
    merged_target = overrides["target"] or doc.get("target")
    if merged_target is None:
        raise ValidationError("landscape", "required (set --landscape or config target)")
    cfg = _run_config_from(doc, overrides, defaults)
    if cfg.kind().is_induced and args.xi is None and "xi" not in doc:
        cfg = dataclasses.replace(cfg, xi=_natural_xi(cfg))
    record = run_lowdim(cfg, run_id=f"{cfg.target}-{cfg.optimizer}")
    _emit_record(record, args.out)
    return 0


def _cmd_train_nn(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    overrides = {
        k: getattr(args, k)
        for k in (
            "optimizer", "eta", "mu", "xi", "beta", "lam", "beta2", "epsilon",
            "seed", "max_iters", "tol", "log_offset", "trace_every",
            "epochs", "batch_size", "n_samples", "poly_degree", "num_classes",
        )
    }
    overrides["target"] = args.task
    defaults = {"target": "poly-regression", "optimizer": "adam", "eta": None, "beta": 0.9}
    cfg = _run_config_from(doc, overrides, defaults)
    if cfg.kind().is_induced and args.xi is None and "xi" not in doc:
        cfg = dataclasses.replace(cfg, xi=_natural_xi(cfg))
    record = run_nn(cfg, run_id=f"{cfg.target}-{cfg.optimizer}")
    _emit_record(record, args.out)
    return 0


def _sweep_spec_from(doc: dict) -> SweepSpec:
    unknown = set(doc) - _SWEEP_SIMPLE_KEYS
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown sweep config key")
    for key in ("targets", "optimizers", "eta"):
        if key not in doc:
            raise ValidationError(key, "required in sweep config")
    base_doc = doc.get("base", {})
    if not isinstance(base_doc, dict):
        raise ValidationError("base", "must be an object of RunConfig fields")
    defaults = {
        "target": doc["targets"][0],
        "optimizer": doc["optimizers"][0],
        "eta": float(doc["eta"][0]),
        "trace_every": 0,
    }
    base = _run_config_from(base_doc, {}, defaults)
    return SweepSpec(
        targets=tuple(doc["targets"]),
        optimizers=tuple(doc["optimizers"]),
        base=base,
        eta=tuple(float(v) for v in doc["eta"]),
        xi=tuple(float(v) for v in doc.get("xi", (base.xi,))),
        mu=tuple(float(v) for v in doc.get("mu", (base.mu,))),
        beta=tuple(float(v) for v in doc.get("beta", (base.beta,))),
        lam=tuple(float(v) for v in doc.get("lambda", (base.lam,))),
        mode=doc.get("mode", "grid"),
        samples=int(doc.get("samples", 0)),
        seed=int(doc.get("seed", 0)),
    )


def _cmd_sweep(args) -> int:
    if args.preset == "lowdim":
        spec = default_lowdim_sweep()
    elif args.preset == "regression":
        spec = default_regression_sweep()
    elif args.config:
        spec = _sweep_spec_from(_load_json(args.config))
    else:
        raise ValidationError("config", "sweep needs --config or --preset")
    records = sweep(spec, parallelism=args.parallelism)
    os.makedirs(args.out, exist_ok=True)
    export_records_ndjson(
        records, os.path.join(args.out, "records.ndjson"), include_wall_time=args.wall_time
    )
    export_trace_csv(records, os.path.join(args.out, "trace.csv"))
    export_summary_csv(summarize(records, args.top_k), os.path.join(args.out, "summary.csv"))
    n_ok = sum(1 for r in records if r.error is None)
    print(f"{len(records)} runs ({n_ok} clean) -> {args.out}")
    return 0


def _cmd_summarize(args) -> int:
    records = load_records_ndjson(args.records)
    rows = summarize(records, args.top_k)
    header = "optimizer,n_runs,metric_mean,metric_std,epoch_mean,epoch_std,best_metric,best_epoch,best_wall_time_seconds"
    print(header)
    for r in rows:
        print(
            f"{r.optimizer},{r.n_runs},{r.metric_mean!r},{r.metric_std!r},"
            f"{r.epoch_mean!r},{r.epoch_std!r},{r.best_metric!r},{r.best_epoch!r},"
            f"{r.best_wall_time_seconds!r}"
        )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        export_summary_csv(rows, os.path.join(args.out, "summary.csv"))
    return 0


def _cmd_selftest(_args) -> int:
    results = _selftest.run_all()
    ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        ok = ok and res.passed
        extra = f" [{res.detail}]" if res.detail else ""
        print(
            f"{status} {res.name}: max_error={res.max_error:.3e} "
            f"tol={res.tolerance:.0e} ({res.elapsed_seconds:.2f}s){extra}"
        )
    if not ok:
        print("selftest FAILED")
        return 2
    print("selftest passed")
    return 0


_COMMANDS = {
    "bench-lowdim": _cmd_bench_lowdim,
    "train-nn": _cmd_train_nn,
    "sweep": _cmd_sweep,
    "summarize": _cmd_summarize,
    "selftest": _cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return 0 if exc.code in (0, None) else 1
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
