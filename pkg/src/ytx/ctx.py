"""Subjective and contextual target transforms.

Subject centering, per-trial min-max scaling, frame-of-reference division,
price-index deflation, and the two context-model normalizations
(standardize by conditional moments, divide by a linear prediction).
All forwards/inverses take a per-row auxiliary argument: group keys for
subject/trial/deflate, frame sizes for frame, and the context matrix for
the regression-based kinds.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import FittedTransform, register_kind, target_range
from .errors import DataError, TransformDomainError


def _as_keys(keys):
    return np.array([str(k) for k in keys], dtype=object)


# --------------------------------------------------------------------------
# Subject centering

def fit_subject_center(y, subject):
    y = np.asarray(y, dtype=float)
    keys = _as_keys(subject)
    if y.shape[0] == 0:
        raise DataError("empty dataset")
    if keys.shape[0] != y.shape[0]:
        raise DataError("subject vector length mismatch")
    means = {}
    for key in np.unique(keys):
        means[key] = float(np.mean(y[keys == key]))
    return FittedTransform(
        "subject-center",
        {"means": means, "global_mean": float(np.mean(y))},
        target_range(y))


def _subject_means_for(params, keys):
    means = params["means"]
    fallback = params["global_mean"]
    return np.array([means.get(str(k), fallback) for k in keys])


register_kind(
    "subject-center",
    lambda p, y, aux: y - _subject_means_for(p, aux),
    lambda p, z, aux: z + _subject_means_for(p, aux))


# --------------------------------------------------------------------------
# Per-trial min-max

def fit_trial_minmax(y, trial):
    y = np.asarray(y, dtype=float)
    keys = _as_keys(trial)
    if keys.shape[0] != y.shape[0]:
        raise DataError("trial vector length mismatch")
    ranges = {}
    for key in np.unique(keys):
        values = y[keys == key]
        lo, hi = float(np.min(values)), float(np.max(values))
        if hi <= lo:
            raise DataError(f"constant trial {key!r}")
        ranges[key] = [lo, hi]
    return FittedTransform("trial-minmax", {"ranges": ranges},
                           target_range(y))


def _trial_bounds(params, keys):
    ranges = params["ranges"]
    lo = np.empty(len(keys))
    hi = np.empty(len(keys))
    for i, key in enumerate(keys):
        key = str(key)
        if key not in ranges:
            raise DataError(f"unseen trial {key!r}")
        lo[i], hi[i] = ranges[key]
    return lo, hi


def _trial_forward(params, y, aux):
    lo, hi = _trial_bounds(params, aux)
    return (y - lo) / (hi - lo)


def _trial_inverse(params, z, aux):
    lo, hi = _trial_bounds(params, aux)
    return z * (hi - lo) + lo


register_kind("trial-minmax", _trial_forward, _trial_inverse)


# --------------------------------------------------------------------------
# Frame normalization

def fit_frame_normalize(y, frame):
    y = np.asarray(y, dtype=float)
    frame = np.asarray(frame, dtype=float)
    if frame.shape[0] != y.shape[0]:
        raise DataError("frame vector length mismatch")
    _check_frame(frame)
    return FittedTransform("frame", {}, target_range(y))


def _check_frame(frame):
    bad = np.flatnonzero(np.asarray(frame, dtype=float) <= 0.0)
    if bad.size:
        raise TransformDomainError(
            f"frame: non-positive frame value at index {bad[0]}",
            index=int(bad[0]))


def _frame_forward(params, y, aux):
    aux = np.asarray(aux, dtype=float)
    _check_frame(aux)
    return y / aux


def _frame_inverse(params, z, aux):
    aux = np.asarray(aux, dtype=float)
    _check_frame(aux)
    return z * aux


register_kind("frame", _frame_forward, _frame_inverse)


# --------------------------------------------------------------------------
# Deflation by a price index

@dataclass(frozen=True)
class DeflationIndex:
    """Per-period price index and the base period to deflate to."""

    series: dict
    base_time: str

    def __post_init__(self):
        series = {str(k): float(v) for k, v in self.series.items()}
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "base_time", str(self.base_time))
        if self.base_time not in series:
            raise DataError(f"base time {self.base_time!r} not in index")
        if any(v <= 0.0 for v in series.values()):
            raise DataError("price index values must be positive")

    @classmethod
    def from_csv(cls, path, base_time=None):
        """Load a two-column (time_key, index_value) CSV, header optional."""
        with open(path, newline="") as handle:
            rows = [r for r in csv.reader(handle) if r]
        series = {}
        for row in rows:
            if len(row) < 2:
                raise DataError(f"{path}: malformed index row {row!r}")
            try:
                value = float(row[1])
            except ValueError:
                continue  # header row
            series[row[0].strip()] = value
        if not series:
            raise DataError(f"{path}: no usable index rows")
        if base_time is None:
            base_time = sorted(series, key=_time_sort_key)[0]
        return cls(series=series, base_time=base_time)


def _time_sort_key(key):
    try:
        return (0, float(key), "")
    except ValueError:
        return (1, 0.0, key)


def fit_deflate(y, time, index):
    y = np.asarray(y, dtype=float)
    keys = _as_keys(time)
    if keys.shape[0] != y.shape[0]:
        raise DataError("time vector length mismatch")
    for key in keys:
        if key not in index.series:
            raise DataError(f"unknown time key {key!r}")
    return FittedTransform(
        "deflate",
        {"series": dict(index.series), "base_time": index.base_time},
        target_range(y))


def _deflate_factors(params, keys):
    series = params["series"]
    base = series[params["base_time"]]
    factors = np.empty(len(keys))
    for i, key in enumerate(keys):
        key = str(key)
        if key not in series:
            raise DataError(f"unknown time key {key!r}")
        factors[i] = base / series[key]
    return factors


register_kind(
    "deflate",
    lambda p, y, aux: y * _deflate_factors(p, aux),
    lambda p, z, aux: z / _deflate_factors(p, aux))


# --------------------------------------------------------------------------
# Context-model normalizations

def _design(context):
    context = np.atleast_2d(np.asarray(context, dtype=float))
    if context.ndim != 2:
        raise DataError("context must be a 2-D matrix")
    return np.column_stack([np.ones(context.shape[0]), context])


def _ols(X, y):
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DataError("collinear context")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return beta


def fit_expectation_normalize(y, context):
    """Standardize by conditional mean and conditional spread.

    Both moments are linear least-squares fits on the context columns; the
    spread model is fit on absolute residuals and floored to keep the pair
    bijective.
    """
    y = np.asarray(y, dtype=float)
    X = _design(context)
    n, k1 = X.shape
    if n <= k1:
        raise DataError("too few rows for the context model")
    beta_mean = _ols(X, y)
    resid = y - X @ beta_mean
    # Regressing |residual| estimates the conditional mean absolute
    # deviation; sqrt(pi/2) converts that to a sigma under normality.
    beta_sigma = _ols(X, np.abs(resid)) * math.sqrt(math.pi / 2.0)
    floor = max(0.1 * float(np.std(resid)), 1e-12)
    return FittedTransform(
        "expectation-norm",
        {"beta_mean": [float(b) for b in beta_mean],
         "beta_sigma": [float(b) for b in beta_sigma],
         "sigma_floor": floor},
        target_range(y))


def _en_moments(params, context):
    X = _design(context)
    mu = X @ np.asarray(params["beta_mean"])
    sigma = X @ np.asarray(params["beta_sigma"])
    sigma = np.maximum(sigma, params["sigma_floor"])
    return mu, sigma


def _en_forward(params, y, aux):
    mu, sigma = _en_moments(params, aux)
    return (y - mu) / sigma


def _en_inverse(params, z, aux):
    mu, sigma = _en_moments(params, aux)
    return z * sigma + mu


register_kind("expectation-norm", _en_forward, _en_inverse)


def fit_regression_normalize(y, context):
    """Divide by the prediction of a linear model on the context columns."""
    y = np.asarray(y, dtype=float)
    X = _design(context)
    if X.shape[0] <= X.shape[1]:
        raise DataError("too few rows for the context model")
    beta = _ols(X, y)
    floor = 1e-6 * max(float(np.max(np.abs(y))), 1.0)
    denom = X @ beta
    bad = np.flatnonzero(np.abs(denom) < floor)
    if bad.size:
        raise DataError(
            f"zero denominator: predicted value ~0 at training row {bad[0]}")
    return FittedTransform(
        "regression-norm",
        {"beta": [float(b) for b in beta], "denom_floor": floor},
        target_range(y))


def _rn_denominator(params, context):
    denom = _design(context) @ np.asarray(params["beta"])
    floor = params["denom_floor"]
    small = np.abs(denom) < floor
    if np.any(small):
        warnings.warn("regression-norm: clamping near-zero denominators",
                      RuntimeWarning, stacklevel=3)
        denom = np.where(small, np.where(denom < 0, -floor, floor), denom)
    return denom


register_kind(
    "regression-norm",
    lambda p, y, aux: y / _rn_denominator(p, aux),
    lambda p, z, aux: z * _rn_denominator(p, aux))
