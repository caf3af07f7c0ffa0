"""
Tuning-parameter selection: time-series cross-validation for the lasso
(lambda1) and ridge (lambda2) penalties, BIC for the graphical lasso (lambda3).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import DataError, NumericalError
from .solvers import graphical_lasso, lasso_lambda_max, lasso_multivariate, ridge_multivariate

logger = logging.getLogger(__name__)

# share of the sample in the first calibration window
CALIBRATION_SHARE = 0.8

# decades spanned by the default lambda1 and lambda3 grids
GRID_DECADES = 3

# off-diagonal precision entries above this magnitude count as edges
EDGE_TOL = 1e-10


class GridRole(str, Enum):
    BETA = 'beta_penalty'
    GAMMA = 'gamma_penalty'
    OMEGA = 'omega_penalty'


@dataclass(frozen=True)
class LambdaGrid:
    """Candidate penalties, strictly positive and sorted from largest to smallest."""
    values: tuple
    role: GridRole

    def __post_init__(self):
        values = sorted({float(v) for v in np.atleast_1d(self.values)}, reverse=True)
        if not values:
            raise DataError('Lambda grid is empty')
        if any(not math.isfinite(v) or v <= 0 for v in values):
            raise DataError('Lambda grid values must be finite and > 0')
        object.__setattr__(self, 'values', tuple(values))
        object.__setattr__(self, 'role', GridRole(self.role))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def default_grid(role, size=20, upper=None):
    """
    Log-spaced default grids: lambda1 from ``upper`` (the kill threshold)
    down three decades, lambda2 from 1e2 to 1e-3, lambda3 from ``upper``
    (largest absolute off-diagonal covariance) down three decades.
    """
    role = GridRole(role)
    if role is GridRole.GAMMA:
        return LambdaGrid(tuple(np.geomspace(1e2, 1e-3, size)), role)
    if upper is None or not upper > 0:
        raise DataError('A positive upper bound is needed for the {} grid'.format(role.value))
    return LambdaGrid(tuple(np.geomspace(upper, upper * 10.0 ** -GRID_DECADES, size)), role)


def calibration_size(n):
    """Rows in the first calibration sample (80% rule)."""
    return int(math.floor(CALIBRATION_SHARE * n))


def cv_select_lambda(z, fit_fn, grid):
    """
    Expanding-window one-step cross-validation.

    ``fit_fn(lam, t)`` fits on rows [0, t) of the data and returns the
    forecast of row t. Errors are scaled by the full-sample standard deviation
    of each series of ``z``; the grid value with the smallest mean squared
    scaled error wins, ties going to the larger lambda.
    Returns (lambda, msfe curve in grid order).
    """
    z = np.asarray(getattr(z, 'values', z), dtype=float)
    if z.ndim == 1:
        z = z.reshape(-1, 1)
    if not isinstance(grid, LambdaGrid):
        grid = LambdaGrid(tuple(grid), GridRole.BETA)
    n = z.shape[0]
    start = calibration_size(n)
    if start < 1 or start >= n:
        raise DataError('Cross-validation needs at least 2 observations, got {}'.format(n))
    if len(grid) == 1:
        return grid.values[0], np.array([math.nan])

    sigma = z.std(axis=0, ddof=1)
    keep = sigma > 0
    if not keep.all():
        logger.warning('Cross-validation ignores %d constant series', int((~keep).sum()))

    curve = np.empty(len(grid))
    for g, lam in enumerate(grid.values):
        errors = []
        try:
            for t in range(start, n):
                errors.append(z[t] - np.asarray(fit_fn(lam, t), dtype=float).reshape(-1))
        except NumericalError as exc:
            logger.warning('Dropping lambda %.4g from the grid: %s', lam, exc)
            curve[g] = math.inf
            continue
        if keep.any():
            scaled = np.asarray(errors)[:, keep] / sigma[keep]
            curve[g] = float(np.mean(scaled ** 2))
        else:
            curve[g] = 0.0
    if not np.isfinite(curve).any():
        raise NumericalError('Every grid value failed during cross-validation')
    best = int(np.argmin(curve))
    return grid.values[best], curve


def ridge_forecaster(X, z, penalty_mask=None):
    """One-step forecaster for the Gamma step; lambda is on the 1/n scale."""
    X = np.asarray(X, dtype=float)
    z = np.asarray(z, dtype=float)

    def fit_fn(lam, t):
        coef = ridge_multivariate(X[:t], z[:t], t * lam, penalty_mask)
        return X[t] @ coef

    return fit_fn


def lasso_forecaster(Z, u, weights=None, tol=1e-6, max_iter=10_000):
    """One-step lasso forecaster; solutions warm-start the next grid value at the same t."""
    Z = np.asarray(Z, dtype=float)
    u = np.asarray(u, dtype=float).reshape(Z.shape[0], -1)
    previous = {}

    def fit_fn(lam, t):
        fit = lasso_multivariate(Z[:t], u[:t], lam, weights=weights, tol=tol,
                                 max_iter=max_iter, init=previous.get(t))
        previous[t] = fit.coef
        return Z[t] @ fit.coef

    return fit_fn


def bic_select_lambda3(residuals, grid):
    """
    lambda3 minimizing n [tr(S Omega) - log|Omega|] + log(n) * #edges, with
    S = R'R/n; grid points where the graphical lasso fails are dropped.
    """
    R = np.asarray(residuals, dtype=float)
    n = R.shape[0]
    if n < 2:
        raise DataError('BIC needs at least 2 residual rows')
    if not isinstance(grid, LambdaGrid):
        grid = LambdaGrid(tuple(grid), GridRole.OMEGA)
    S = R.T @ R / n
    best_lam, best_bic = None, math.inf
    for lam in grid.values:
        try:
            omega = graphical_lasso(S, lam)
        except NumericalError as exc:
            logger.warning('Dropping lambda3 %.4g from the BIC grid: %s', lam, exc)
            continue
        _, logdet = np.linalg.slogdet(omega)
        edges = int(np.sum(np.abs(np.triu(omega, k=1)) > EDGE_TOL))
        bic = n * (float(np.sum(S * omega)) - logdet) + math.log(n) * edges
        if bic < best_bic:
            best_lam, best_bic = lam, bic
    if best_lam is None:
        raise NumericalError('Graphical lasso failed on every lambda3 in the grid')
    return best_lam


def tune_lambda2(X, z, grid_size=20, penalty_mask=None):
    """lambda2 by cross-validation of z = Y - Z Pi' on the short-run regressors."""
    X = np.asarray(X, dtype=float)
    if X.shape[1] == 0:
        return 0.0, np.zeros(0)
    grid = default_grid(GridRole.GAMMA, grid_size)
    return cv_select_lambda(z, ridge_forecaster(X, z, penalty_mask), grid)


def tune_lambda1(Z, U, weights=None, grid_size=20, tol=1e-6, max_iter=10_000):
    """One lambda1 per cointegrating vector, each selected by its own cross-validation."""
    U = np.asarray(U, dtype=float)
    selected = np.zeros(U.shape[1])
    for j in range(U.shape[1]):
        w_j = weights.column(j) if weights is not None else None
        upper = float(lasso_lambda_max(Z, U[:, [j]], w_j)[0])
        if upper <= 0:
            logger.warning('Lasso response %d carries no signal; lambda1 set to 0', j)
            continue
        grid = default_grid(GridRole.BETA, grid_size, upper)
        selected[j], _ = cv_select_lambda(
            U[:, [j]], lasso_forecaster(Z, U[:, [j]], w_j, tol, max_iter), grid)
    return selected


def tune_lambda3(residuals, grid_size=20):
    R = np.asarray(residuals, dtype=float)
    S = R.T @ R / R.shape[0]
    off = np.abs(S - np.diag(np.diag(S)))
    upper = off.max(initial=0.0)
    if upper <= 0:
        upper = 1e-3 * max(float(np.diag(S).max(initial=0.0)), 1e-12)
    return bic_select_lambda3(R, default_grid(GridRole.OMEGA, grid_size, upper))
