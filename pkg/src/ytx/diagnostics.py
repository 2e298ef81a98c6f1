"""Detectors that flag target-variable pathologies and suggest transforms.

Five detectors: subject dependence (one-way ANOVA), frame dependence
(Pearson correlation), trend dependence (Spearman correlation against time
order), contextual dependence (R-squared), and distribution problems
(skewness, gaps, Breusch-Pagan heteroscedasticity).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats

from .errors import DataError


@dataclass(frozen=True)
class Thresholds:
    """Flagging thresholds; the defaults reproduce the reference annotations."""

    subjective_p: float = 0.05
    frame_r: float = 0.3
    trend_rho: float = 0.3
    context_r2: float = 0.25
    skew_gamma: float = 0.5
    gap_score: float = 0.1
    hetero_p: float = 0.05

    def replace(self, **overrides):
        values = asdict(self)
        unknown = set(overrides) - set(values)
        if unknown:
            raise DataError(f"unknown thresholds: {sorted(unknown)}")
        values.update(overrides)
        return Thresholds(**values)


@dataclass(frozen=True)
class Verdict:
    flagged: bool
    statistic: float
    p_value: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"flagged": self.flagged, "statistic": self.statistic}
        if self.p_value is not None:
            out["p_value"] = self.p_value
        out.update(self.details)
        return out


@dataclass(frozen=True)
class DiagnosticReport:
    subjective: Verdict | None
    frame: Verdict | None
    trend: Verdict | None
    context: Verdict | None
    distribution: Verdict
    recommendations: tuple = ()

    def to_dict(self):
        out = {}
        for name in ("subjective", "frame", "trend", "context"):
            verdict = getattr(self, name)
            if verdict is not None:
                out[name] = verdict.to_dict()
        out["distribution"] = self.distribution.to_dict()
        out["recommendations"] = [
            {"kind": kind, "reason": reason}
            for kind, reason in self.recommendations]
        return out


def detect_subjective(y, subject, thresholds=Thresholds()):
    """One-way ANOVA across subject groups."""
    y = np.asarray(y, dtype=float)
    keys = np.array([str(k) for k in subject], dtype=object)
    groups = [y[keys == key] for key in np.unique(keys)]
    if len(groups) < 2:
        raise DataError("need at least 2 subjects")
    if any(len(g) < 2 for g in groups):
        raise DataError("every subject needs at least 2 samples")
    grand = y.mean()
    ssb = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    ssw = sum(float(np.sum((g - g.mean()) ** 2)) for g in groups)
    df_b = len(groups) - 1
    df_w = y.shape[0] - len(groups)
    scale = max(float(np.sum((y - grand) ** 2)), 1.0)
    if ssb <= 1e-12 * scale:
        f_stat, p = 0.0, 1.0
    elif ssw <= 1e-12 * scale:
        f_stat, p = float("inf"), 0.0
    else:
        f_stat = (ssb / df_b) / (ssw / df_w)
        p = float(stats.f.sf(f_stat, df_b, df_w))
    return Verdict(flagged=p < thresholds.subjective_p,
                   statistic=float(f_stat), p_value=p)


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt(np.sum(a * a) * np.sum(b * b))
    if denom <= 0.0:
        return None
    return float(np.sum(a * b) / denom)


def detect_frame(y, frame, thresholds=Thresholds()):
    """Pearson correlation between the target and the frame size."""
    y = np.asarray(y, dtype=float)
    frame = np.asarray(frame, dtype=float)
    r = _pearson(y, frame)
    if r is None:
        return Verdict(flagged=False, statistic=0.0)
    return Verdict(flagged=abs(r) > thresholds.frame_r, statistic=abs(r),
                   details={"r": r})


def _time_order_ranks(time):
    """Ranks of the time keys; ties broken by stable input order."""
    keys = list(time)
    try:
        values = np.array([float(k) for k in keys])
    except (TypeError, ValueError):
        values = np.array([str(k) for k in keys], dtype=object)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(keys))
    ranks[order] = np.arange(len(keys))
    return ranks


def _average_ranks(values):
    return stats.rankdata(values, method="average")


def detect_trend(y, time, thresholds=Thresholds()):
    """Spearman correlation between the target and the time order."""
    y = np.asarray(y, dtype=float)
    rho = _pearson(_average_ranks(y), _time_order_ranks(time))
    if rho is None:
        return Verdict(flagged=False, statistic=0.0)
    return Verdict(flagged=abs(rho) > thresholds.trend_rho,
                   statistic=abs(rho), details={"rho": rho})


def _ols_r2(y, X):
    design = np.column_stack([np.ones(X.shape[0]), X])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        return None
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    total = float(np.sum((y - y.mean()) ** 2))
    if total <= 0.0:
        return None
    return 1.0 - float(np.sum(resid ** 2)) / total


def detect_context(y, context, thresholds=Thresholds()):
    """R-squared of the target on the context columns."""
    y = np.asarray(y, dtype=float)
    context = np.atleast_2d(np.asarray(context, dtype=float))
    if context.shape[1] < 1:
        raise DataError("need at least one context column")
    r2 = _ols_r2(y, context)
    if r2 is None:
        warnings.warn("context detector: singular design, reporting 0",
                      RuntimeWarning, stacklevel=2)
        return Verdict(flagged=False, statistic=0.0)
    return Verdict(flagged=r2 > thresholds.context_r2, statistic=r2)


def gap_score(y):
    """Largest gap between consecutive sorted unique targets, over the range."""
    values = np.unique(np.asarray(y, dtype=float))
    span = values[-1] - values[0]
    if values.shape[0] < 2 or span <= 0.0:
        return 0.0
    return float(np.max(np.diff(values)) / span)


def breusch_pagan(y, X):
    """Breusch-Pagan LM test of squared OLS residuals on the features.

    Returns (lm_statistic, p_value); (0.0, 1.0) when the auxiliary
    regression is degenerate.
    """
    y = np.asarray(y, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    design = np.column_stack([np.ones(X.shape[0]), X])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    r2 = _ols_r2(resid ** 2, X)
    if r2 is None:
        return 0.0, 1.0
    lm = y.shape[0] * max(r2, 0.0)
    return float(lm), float(stats.chi2.sf(lm, X.shape[1]))


def detect_distribution(y, features, thresholds=Thresholds()):
    """Skewness, gap and heteroscedasticity checks on the target."""
    from .dist import skewness

    y = np.asarray(y, dtype=float)
    if y.shape[0] < 20:
        raise DataError("distribution detector needs at least 20 samples")
    if np.max(y) == np.min(y):
        raise DataError("constant target")
    gamma = skewness(y)
    gap = gap_score(y)
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[1] > 0:
        _, het_p = breusch_pagan(y, features)
    else:
        het_p = 1.0
    skewed = abs(gamma) > thresholds.skew_gamma
    gapped = gap > thresholds.gap_score
    hetero = het_p < thresholds.hetero_p
    return Verdict(
        flagged=skewed or gapped or hetero,
        statistic=gamma,
        p_value=het_p,
        details={"skewness": gamma, "gap_score": gap,
                 "skew_flag": skewed, "gap_flag": gapped,
                 "hetero_flag": hetero})


_RECOMMENDATION_MAP = (
    ("subjective", None, ("subject-center", "trial-minmax"),
     "subject-dependent target"),
    ("frame", None, ("frame",), "frame-dependent target"),
    ("trend", None, ("deflate",), "trend-dependent target"),
    ("context", None, ("expectation-norm", "regression-norm"),
     "context-dependent target"),
    ("distribution", "skew_flag",
     ("log-offset", "yeo-johnson", "quantile-normal"), "skewed target"),
    ("distribution", "gap_flag",
     ("quantile-normal", "quantile-uniform"), "gapped target"),
    ("distribution", "hetero_flag",
     ("log-offset", "sqrt", "box-cox"), "heteroscedastic target"),
)


def recommend(report):
    """Ordered, de-duplicated transform recommendations for a report."""
    seen = set()
    out = []
    for verdict_name, sub_flag, kinds, reason in _RECOMMENDATION_MAP:
        verdict = getattr(report, verdict_name)
        if verdict is None:
            continue
        flagged = (verdict.details.get(sub_flag, False) if sub_flag
                   else verdict.flagged)
        if not flagged:
            continue
        for kind in kinds:
            if kind not in seen:
                seen.add(kind)
                out.append((kind, reason))
    return tuple(out)


def diagnose(dataset, thresholds=Thresholds()):
    """Run every detector the dataset's roles permit and attach advice."""
    y = dataset.target
    subjective = frame = trend = context = None
    if "subject" in dataset.aux:
        subjective = detect_subjective(y, dataset.aux["subject"], thresholds)
    if "frame" in dataset.aux:
        frame = detect_frame(y, dataset.aux["frame"], thresholds)
    if "time" in dataset.aux:
        trend = detect_trend(y, dataset.aux["time"], thresholds)
    if "context" in dataset.aux:
        context = detect_context(y, dataset.aux["context"], thresholds)
    distribution = detect_distribution(y, dataset.features, thresholds)
    report = DiagnosticReport(
        subjective=subjective, frame=frame, trend=trend, context=context,
        distribution=distribution)
    return DiagnosticReport(
        subjective=subjective, frame=frame, trend=trend, context=context,
        distribution=distribution, recommendations=recommend(report))
