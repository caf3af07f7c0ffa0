"""
Data model of the vector error correction model: the raw series, the
(Y, X, Z) matrix embedding at lag order p and the penalty configuration.

Observations are stored one per row, oldest first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import DataError


def _frozen_array(values):
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """T x q observations of a multivariate series."""
    values: np.ndarray
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise DataError('Series must be a 2-D array (time x series)')
        if values.shape[0] == 0 or values.shape[1] == 0:
            raise DataError('Series is empty')
        if not np.all(np.isfinite(values)):
            raise DataError('Series contains non-finite values')
        object.__setattr__(self, 'values', _frozen_array(values))
        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != values.shape[1]:
                raise DataError(
                    'Got {} labels for {} series'.format(len(labels), values.shape[1]))
            object.__setattr__(self, 'labels', labels)

    @property
    def T(self):
        return self.values.shape[0]

    @property
    def q(self):
        return self.values.shape[1]

    def column_labels(self):
        """Labels, falling back to y1..yq."""
        if self.labels is not None:
            return list(self.labels)
        return ['y{}'.format(i + 1) for i in range(self.q)]

    def window(self, start, stop):
        """Rows [start, stop) as a new series with the same labels."""
        return TimeSeriesMatrix(self.values[start:stop], self.labels)


@dataclass(frozen=True)
class VecmDesign:
    """
    Matrix embedding Y = X Gamma + Z Pi' + E of a VECM at lag order p.

    Row t of Y is dy_{p+t}, row t of Z is y_{p+t-1} and row t of X stacks
    dy_{p+t-1}, ..., dy_{t+1}, followed by a constant column when
    ``intercept`` is set.
    """
    Y: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    p: int
    intercept: bool = False
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        for name in ('Y', 'X', 'Z'):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        n = self.Y.shape[0]
        if self.X.shape[0] != n or self.Z.shape[0] != n:
            raise DataError('Y, X and Z must share the same number of rows')

    @property
    def n(self):
        return self.Y.shape[0]

    @property
    def q(self):
        return self.Y.shape[1]

    @property
    def k(self):
        """Number of columns of X."""
        return self.X.shape[1]

    def gamma_penalty_mask(self, penalize_intercept=True):
        """1 for ridge-penalized rows of Gamma, 0 for an exempt intercept row."""
        mask = np.ones(self.k)
        if self.intercept and not penalize_intercept:
            mask[-1] = 0.0
        return mask


class BetaPenalty(str, Enum):
    LASSO = 'lasso'
    ADAPTIVE_LASSO = 'adaptive_lasso'
    RIDGE = 'ridge'


Lambda1 = Union[None, float, Sequence[float]]


@dataclass(frozen=True)
class PenaltyConfig:
    """
    Tuning parameters and solver tolerances of the penalized likelihood.

    A lambda left as ``None`` is selected from data: lambda1 and lambda2 by
    time-series cross-validation, lambda3 by BIC. lambda1 may be a single
    value or one value per cointegrating vector.
    """
    lambda1: Lambda1 = None
    lambda2: Optional[float] = None
    lambda3: Optional[float] = None
    beta_penalty: BetaPenalty = BetaPenalty.LASSO
    tol_outer: float = 1e-3
    tol_inner: float = 1e-6
    max_outer_iter: int = 100
    max_inner_iter: int = 10_000
    penalize_intercept: bool = True
    # used in the ridge warm-start pass for any lambda that is still unknown
    warm_start_penalty: float = 1e-3
    grid_size: int = 20

    def __post_init__(self):
        object.__setattr__(self, 'beta_penalty', BetaPenalty(self.beta_penalty))
        lam1 = self.lambda1
        if lam1 is not None:
            lam1 = tuple(float(v) for v in np.atleast_1d(lam1))
            if not lam1 or any(not math.isfinite(v) or v < 0 for v in lam1):
                raise DataError('lambda1 values must be finite and >= 0')
            object.__setattr__(self, 'lambda1', lam1)
        for name in ('lambda2', 'lambda3'):
            value = getattr(self, name)
            if value is not None:
                value = float(value)
                if not math.isfinite(value) or value < 0:
                    raise DataError('{} must be finite and >= 0'.format(name))
                object.__setattr__(self, name, value)
        if self.tol_outer <= 0 or self.tol_inner <= 0:
            raise DataError('Tolerances must be > 0')
        if self.max_outer_iter < 1 or self.max_inner_iter < 1:
            raise DataError('Iteration limits must be >= 1')
        if self.warm_start_penalty < 0:
            raise DataError('warm_start_penalty must be >= 0')
        if self.grid_size < 1:
            raise DataError('grid_size must be >= 1')

    @property
    def is_tuned(self):
        """True when every lambda is fixed."""
        return None not in (self.lambda1, self.lambda2, self.lambda3)

    def lambda1_for(self, r):
        """lambda1 broadcast to r cointegrating vectors, or None."""
        if self.lambda1 is None:
            return None
        if len(self.lambda1) == 1:
            return np.full(r, self.lambda1[0])
        if len(self.lambda1) != r:
            raise DataError(
                'lambda1 has {} values but rank is {}'.format(len(self.lambda1), r))
        return np.array(self.lambda1)

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return {
            'lambda1': list(self.lambda1) if self.lambda1 is not None else None,
            'lambda2': self.lambda2,
            'lambda3': self.lambda3,
            'beta_penalty': self.beta_penalty.value,
            'tol_outer': self.tol_outer,
            'tol_inner': self.tol_inner,
            'max_outer_iter': self.max_outer_iter,
            'max_inner_iter': self.max_inner_iter,
            'penalize_intercept': self.penalize_intercept,
            'warm_start_penalty': self.warm_start_penalty,
            'grid_size': self.grid_size,
        }


def as_series(series):
    if isinstance(series, TimeSeriesMatrix):
        return series
    return TimeSeriesMatrix(series)


def difference(series, order=1):
    """Iterated first differences; the result has T - order rows."""
    series = as_series(series)
    order = int(order)
    if order < 1:
        raise DataError('Difference order must be >= 1')
    if series.T <= order:
        raise DataError(
            'Need more than {} observations to difference {} times, got {}'.format(
                order, order, series.T))
    return TimeSeriesMatrix(np.diff(series.values, n=order, axis=0), series.labels)


def build_design(series, p, intercept=False):
    """Embed a series as the (Y, X, Z) matrices of a VECM with lag order p."""
    series = as_series(series)
    p = int(p)
    if p < 1:
        raise DataError('Lag order p must be >= 1')
    T, q = series.T, series.q
    if T < p + 2:
        raise DataError(
            'Lag order p={} needs at least {} observations, got {}'.format(p, p + 2, T))
    levels = series.values
    dy = np.diff(levels, axis=0)
    n = T - p
    Y = dy[p - 1:]
    Z = levels[p - 1:T - 1]
    blocks = [dy[p - 1 - lag:p - 1 - lag + n] for lag in range(1, p)]
    if intercept:
        blocks.append(np.ones((n, 1)))
    X = np.hstack(blocks) if blocks else np.zeros((n, 0))
    return VecmDesign(Y=Y, X=X, Z=Z, p=p, intercept=bool(intercept), labels=series.labels)


def lag_regressors(levels, p, intercept=False):
    """
    The X row used to forecast the observation after the last row of
    ``levels``: dy_t, ..., dy_{t-p+2} and the constant.
    """
    levels = np.asarray(levels, dtype=float)
    parts = []
    if p > 1:
        dy = np.diff(levels[-p:], axis=0)[::-1]
        parts.append(dy.reshape(-1))
    if intercept:
        parts.append(np.ones(1))
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts)
