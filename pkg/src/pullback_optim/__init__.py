"""Induced-metric (pull-back) optimizers, baselines, and benchmark harness.

Preconditioning gradient descent with the inverse of the metric a loss
surface inherits from its embedding gives a smoothed form of gradient
clipping: the effective learning rate shrinks automatically where the
landscape is steep.  This package implements the flat- and log-embedding
variants of that idea (with identity or RMSprop-implied ambient metrics),
reference baselines, analytic test landscapes, a small MLP, and a
reproducible benchmarking harness around them.
"""

from .errors import (
    DimensionError,
    DomainError,
    NumericError,
    UsageError,
    ValidationError,
)
from .geometry import (
    EmbeddingKind,
    InverseMetric,
    apply_inverse_metric,
    induced_update,
    induced_update_flat,
    induced_update_log,
    pullback_metric_dense,
    sherman_morrison_inverse,
)
from .harness import (
    RunConfig,
    RunRecord,
    SummaryRow,
    SweepSpec,
    default_lowdim_sweep,
    default_regression_sweep,
    export_records_ndjson,
    export_summary_csv,
    export_trace_csv,
    load_records_ndjson,
    run_config,
    run_lowdim,
    run_nn,
    summarize,
    sweep,
)
from .landscapes import LANDSCAPE_NAMES, Landscape, make_landscape, offset_loss
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
from .numcore import ParamVector, RngStream, axpy, dot
from .optim import (
    GammaMode,
    HyperParams,
    OptimizerKind,
    OptimizerState,
    ScalarStepper,
    StepTrace,
    config_from_json,
    config_to_json,
    effective_lr_trace,
    initial_state,
    rms_implied_inverse_metric,
    step_baseline,
    step_induced,
    step_induced_log,
)

__version__ = "0.1.0"
