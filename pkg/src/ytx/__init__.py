"""Fitted invertible target-variable transformations for regression.

Transforms are fitted on training targets only, applied before model
training, and inverted on predictions so losses are computed on the
original scale.
"""

from . import ctx, dist  # noqa: F401  (registers transform kinds)
from .core import (
    ColumnRoles,
    Dataset,
    FittedTransform,
    forward,
    inverse,
    inverse_range,
    load_csv,
    identity_transform,
    KNOWN_KINDS,
)
from .ctx import (
    DeflationIndex,
    fit_deflate,
    fit_expectation_normalize,
    fit_frame_normalize,
    fit_regression_normalize,
    fit_subject_center,
    fit_trial_minmax,
)
from .diagnostics import DiagnosticReport, Thresholds, diagnose, recommend
from .dist import (
    fit_box_cox,
    fit_log_offset,
    fit_quantile,
    fit_sqrt,
    fit_yeo_johnson,
    normal_cdf,
    normal_ppf,
    skewness,
)
from .errors import ConfigError, DataError, TransformDomainError, YtxError
from .evaluation import (
    BenchmarkReport,
    FoldPlan,
    LinearModel,
    fit_lasso,
    fit_ridge,
    make_fold_plan,
    predict,
    rse,
    run_benchmark,
    smape,
)

__version__ = "0.1.0"
