"""
Rolling-window one-step-ahead forecasting with re-estimation at every
origin, mean absolute forecast error (MAFE) and Diebold-Mariano comparisons.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import stats

from .estimator import Method, fit_by_method
from .exceptions import DataError, NumericalError
from .rank import select_rank
from .vecm import as_series, build_design, lag_regressors

logger = logging.getLogger(__name__)

MIN_DM_LENGTH = 10


@dataclass(frozen=True)
class ForecastReport:
    """
    One-step forecasts of rows ``targets`` of the series for each method.
    ``dm_pvalues[m]`` compares method m with ``reference`` series by series.
    """
    labels: Tuple[str, ...]
    window: int
    p: int
    rank: int
    intercept: bool
    methods: Tuple[str, ...]
    targets: np.ndarray
    actuals: np.ndarray
    forecasts: Dict[str, np.ndarray]
    fallbacks: Dict[str, int]
    reference: Optional[str] = None
    dm_stats: Dict[str, np.ndarray] = field(default_factory=dict)
    dm_pvalues: Dict[str, np.ndarray] = field(default_factory=dict)

    def errors(self, method):
        return self.forecasts[method] - self.actuals

    def mafe(self, method):
        """Per-series mean absolute forecast error."""
        return np.abs(self.errors(method)).mean(axis=0)

    def total_mafe(self, method):
        """MAFE averaged across series."""
        return float(self.mafe(method).mean())


def one_step_forecast(fit, history):
    """y_{t+1} = y_t + Gamma' x_t + Pi y_t, x_t the lagged differences (and constant)."""
    history = np.asarray(history, dtype=float)
    y_t = history[-1]
    x_t = lag_regressors(history, fit.p, fit.intercept)
    return y_t + x_t @ fit.gamma + fit.pi @ y_t


def _resolve_rank(series, p, r, config, intercept):
    if r == 'auto' or r is None:
        estimate = select_rank(build_design(series, p, intercept), config)
        logger.info('Rank selected on the full sample: %d', estimate.r_hat)
        return estimate.r_hat
    r = int(r)
    if not 0 <= r <= series.q:
        raise DataError('Rank must be in [0, {}], got {}'.format(series.q, r))
    return r


def _check_window(series, window, p):
    window = int(window)
    if window >= series.T:
        raise DataError('Window {} must be smaller than T = {}'.format(window, series.T))
    if window < p + 2:
        raise DataError('Window {} is too short for lag order {}'.format(window, p))
    return window


def _rolling(series, window, p, rank, method, config, intercept, reselect_rank):
    values = series.values
    forecasts = []
    fallbacks = 0
    for end in range(window, series.T):
        train = values[end - window:end]
        try:
            design = build_design(train, p, intercept)
            r = select_rank(design, config).r_hat if reselect_rank else rank
            fit = fit_by_method(design, r, method, config)
            prediction = one_step_forecast(fit, train)
            if not np.all(np.isfinite(prediction)):
                raise NumericalError('non-finite forecast')
        except (DataError, NumericalError, np.linalg.LinAlgError) as exc:
            logger.warning('%s window ending at row %d failed (%s); carrying forward',
                           method.value, end, exc)
            prediction = train[-1].copy()
            fallbacks += 1
        forecasts.append(prediction)
    return np.asarray(forecasts), fallbacks


def diebold_mariano(e1, e2):
    """
    Diebold-Mariano test of equal accuracy under absolute-error loss, with a
    Newey-West (Bartlett, lag floor(n^1/3)) long-run variance.
    Returns (statistic, two-sided normal p-value).
    """
    e1 = np.asarray(e1, dtype=float).reshape(-1)
    e2 = np.asarray(e2, dtype=float).reshape(-1)
    if e1.shape != e2.shape:
        raise DataError('Forecast error series must have equal length')
    n = e1.size
    if n < MIN_DM_LENGTH:
        raise DataError('Diebold-Mariano needs at least {} errors, got {}'.format(
            MIN_DM_LENGTH, n))
    d = np.abs(e1) - np.abs(e2)
    centered = d - d.mean()
    if not np.any(centered) and d.mean() == 0:
        return 0.0, 1.0
    lags = int(math.floor(n ** (1.0 / 3.0)))
    lrv = centered @ centered / n
    for lag in range(1, lags + 1):
        weight = 1.0 - lag / (lags + 1.0)
        lrv += 2.0 * weight * (centered[lag:] @ centered[:-lag]) / n
    if lrv <= 0:
        return 0.0, 1.0
    statistic = float(d.mean() / math.sqrt(lrv / n))
    return statistic, float(2.0 * stats.norm.sf(abs(statistic)))


def compare_forecasts(series, window, p=1, r='auto',
                      methods=(Method.SPARSE_LASSO, Method.JOHANSEN), config=None,
                      intercept=True, reselect_rank=False):
    """
    Rolling forecasts of several methods on identical windows, with per-series
    Diebold-Mariano p-values of each method against Johansen (or the last
    method when Johansen is not among them).
    """
    series = as_series(series)
    window = _check_window(series, window, p)
    methods = [Method.parse(m) for m in methods]
    if not methods:
        raise DataError('At least one forecasting method is required')
    rank = _resolve_rank(series, p, r, config, intercept)

    forecasts, fallbacks = {}, {}
    for method in methods:
        forecasts[method.value], fallbacks[method.value] = _rolling(
            series, window, p, rank, method, config, intercept, reselect_rank)
        logger.info('%s: %d forecasts, %d carried forward', method.value,
                    len(forecasts[method.value]), fallbacks[method.value])

    targets = np.arange(window, series.T)
    actuals = series.values[window:]
    report = ForecastReport(
        labels=tuple(series.column_labels()), window=window, p=int(p), rank=rank,
        intercept=bool(intercept), methods=tuple(m.value for m in methods), targets=targets,
        actuals=actuals, forecasts=forecasts, fallbacks=fallbacks)
    if len(methods) < 2:
        return report

    reference = (Method.JOHANSEN if Method.JOHANSEN in methods else methods[-1]).value
    dm_stats, dm_pvalues = {}, {}
    if targets.size < MIN_DM_LENGTH:
        logger.warning('Only %d forecasts; Diebold-Mariano p-values are not reported',
                       targets.size)
    else:
        base = report.errors(reference)
        for method in report.methods:
            if method == reference:
                continue
            errors = report.errors(method)
            pairs = [diebold_mariano(errors[:, i], base[:, i]) for i in range(series.q)]
            dm_stats[method] = np.array([s for s, _ in pairs])
            dm_pvalues[method] = np.array([pv for _, pv in pairs])
    return replace(report, reference=reference, dm_stats=dm_stats, dm_pvalues=dm_pvalues)


def rolling_forecast(series, window, p=1, r='auto', method=Method.SPARSE_LASSO, config=None,
                     intercept=True, reselect_rank=False):
    """Rolling one-step forecasts of a single method."""
    return compare_forecasts(series, window, p, r, (method,), config, intercept, reselect_rank)
