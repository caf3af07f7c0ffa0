"""
Penalized regression and covariance solvers used as building blocks by the
estimator: ridge and (adaptive) lasso multivariate regression, graphical
lasso, and the matrix helpers they need.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.covariance import graphical_lasso as _sk_graphical_lasso
from sklearn.exceptions import ConvergenceWarning

from .exceptions import DataError, NumericalError

logger = logging.getLogger(__name__)

DEFAULT_RANK_TOL = 1e-10


def _as_matrix(value, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DataError('{} must be a matrix'.format(name))
    if not np.all(np.isfinite(arr)):
        raise DataError('{} contains non-finite values'.format(name))
    return arr


def _per_column(value, m, name):
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size == 1:
        arr = np.full(m, float(arr[0]))
    if arr.size != m:
        raise DataError('{} needs 1 or {} values, got {}'.format(name, m, arr.size))
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DataError('{} must be finite and >= 0'.format(name))
    return arr


@dataclass(frozen=True)
class LassoWeights:
    """Adaptive lasso weights; +inf pins a coefficient to zero."""
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float, copy=True)
        if w.ndim == 1:
            w = w.reshape(-1, 1)
        if np.any(np.isnan(w)) or np.any(w < 0):
            raise DataError('Lasso weights must be >= 0')
        w.setflags(write=False)
        object.__setattr__(self, 'w', w)

    @classmethod
    def from_pilot(cls, beta):
        """Inverse absolute pilot coefficients; zeros become +inf."""
        beta = np.abs(np.asarray(beta, dtype=float))
        with np.errstate(divide='ignore'):
            w = np.where(beta > 0, 1.0 / beta, np.inf)
        return cls(w)

    def column(self, j):
        return LassoWeights(self.w[:, [j]])


@dataclass(frozen=True)
class LassoFit:
    coef: np.ndarray
    converged: bool
    iterations: int


def pseudo_inverse(M, rank_tol=DEFAULT_RANK_TOL):
    """Moore-Penrose inverse; singular values below rank_tol * s_max are dropped."""
    M = _as_matrix(M, 'M')
    return scipy.linalg.pinv(M, atol=0.0, rtol=rank_tol)


def numerical_rank(M, rank_tol=DEFAULT_RANK_TOL):
    M = _as_matrix(M, 'M')
    if M.size == 0:
        return 0
    s = scipy.linalg.svdvals(M)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def _spd_eigh(M, tol):
    M = _as_matrix(M, 'M')
    if M.shape[0] != M.shape[1]:
        raise DataError('Matrix must be square')
    if not np.allclose(M, M.T, rtol=1e-8, atol=1e-10):
        raise DataError('Matrix must be symmetric')
    vals, vecs = scipy.linalg.eigh((M + M.T) / 2.0)
    if vals[-1] <= 0 or vals[0] <= tol * vals[-1]:
        raise NumericalError(
            'Matrix is not positive definite (smallest eigenvalue {:.3e})'.format(vals[0]))
    return vals, vecs


def matrix_sqrt_spd(M, tol=1e-12):
    """Symmetric square root R with R R = M, via eigendecomposition."""
    vals, vecs = _spd_eigh(M, tol)
    return (vecs * np.sqrt(vals)) @ vecs.T


def matrix_inv_sqrt_spd(M, tol=1e-12):
    vals, vecs = _spd_eigh(M, tol)
    return (vecs / np.sqrt(vals)) @ vecs.T


def ridge_multivariate(X, Y, lambda2, penalty_mask=None):
    """
    (X'X + lambda2 D)^-1 X'Y with D = diag(penalty_mask) (identity by default),
    i.e. the minimizer of ||Y - XB||_F^2 + lambda2 ||D^1/2 B||_F^2.
    """
    X = _as_matrix(X, 'X')
    Y = _as_matrix(Y, 'Y')
    if X.shape[0] != Y.shape[0]:
        raise DataError('X and Y must have the same number of rows')
    lambda2 = float(lambda2)
    if lambda2 < 0:
        raise DataError('lambda2 must be >= 0')
    k = X.shape[1]
    if k == 0:
        return np.zeros((0, Y.shape[1]))
    mask = np.ones(k) if penalty_mask is None else np.asarray(penalty_mask, dtype=float)
    system = X.T @ X + lambda2 * np.diag(mask)
    if lambda2 == 0 and numerical_rank(X) < k:
        raise NumericalError(
            'Ridge system is singular at lambda2 = 0 (X is rank deficient)')
    try:
        return scipy.linalg.solve(system, X.T @ Y, assume_a='pos')
    except np.linalg.LinAlgError as exc:
        raise NumericalError('Ridge system is singular: {}'.format(exc)) from exc


def lasso_lambda_max(X, Y, weights=None):
    """Smallest lambda per column at which every penalized coefficient is zero."""
    X = _as_matrix(X, 'X')
    Y = _as_matrix(Y, 'Y')
    n = X.shape[0]
    grad = np.abs(2.0 * X.T @ Y / n)
    if weights is None:
        return grad.max(axis=0) if grad.size else np.zeros(Y.shape[1])
    w = weights.w
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where((w > 0) & np.isfinite(w), grad / w, 0.0)
    return ratio.max(axis=0) if ratio.size else np.zeros(Y.shape[1])


def _soft_threshold(value, threshold):
    return np.sign(value) * max(abs(value) - threshold, 0.0)


def lasso_multivariate(X, Y, lambda1, weights=None, tol=1e-6, max_iter=10_000, init=None):
    """
    Column-wise lasso by cyclic coordinate descent with covariance updates.

    Column j minimizes (1/n)||Y_j - X b||^2 + lambda1_j * sum_i w_ij |b_i|.
    Coefficients with infinite weight stay exactly zero. A column with
    lambda1_j = 0 gets the minimum-norm least-squares solution.
    """
    X = _as_matrix(X, 'X')
    Y = _as_matrix(Y, 'Y')
    n, k = X.shape
    if Y.shape[0] != n:
        raise DataError('X and Y must have the same number of rows')
    m = Y.shape[1]
    lam = _per_column(lambda1, m, 'lambda1')
    if weights is None:
        W = np.ones((k, m))
    else:
        W = np.asarray(weights.w, dtype=float)
        if W.shape != (k, m):
            raise DataError('Weights have shape {}, expected {}'.format(W.shape, (k, m)))
    if k == 0:
        return LassoFit(np.zeros((0, m)), True, 0)

    gram = X.T @ X / n
    cross = X.T @ Y / n
    diag = np.diag(gram).copy()
    B = np.zeros((k, m)) if init is None else np.array(init, dtype=float).reshape(k, m)
    converged = True
    sweeps_used = 0

    for j in range(m):
        active = np.isfinite(W[:, j])
        b = B[:, j].copy()
        b[~active] = 0.0
        if lam[j] == 0:
            b[:] = 0.0
            if active.any():
                b[active] = pseudo_inverse(X[:, active]) @ Y[:, j]
            B[:, j] = b
            continue
        thresholds = lam[j] * np.where(active, W[:, j], 0.0) / 2.0
        coords = np.flatnonzero(active & (diag > 0))
        b[active & (diag <= 0)] = 0.0
        column_converged = False
        for sweep in range(1, max_iter + 1):
            max_change = 0.0
            for i in coords:
                rho = cross[i, j] - gram[i] @ b + diag[i] * b[i]
                updated = _soft_threshold(rho, thresholds[i]) / diag[i]
                change = abs(updated - b[i])
                if change > max_change:
                    max_change = change
                b[i] = updated
            sweeps_used = max(sweeps_used, sweep)
            if max_change < tol:
                column_converged = True
                break
        if not column_converged:
            converged = False
            logger.warning(
                'Lasso column %d did not converge in %d sweeps', j, max_iter)
        B[:, j] = b
    return LassoFit(B, converged, sweeps_used)


def graphical_lasso(S, lambda3, tol=1e-7, max_iter=1000):
    """
    Precision matrix minimizing tr(S Omega) - log|Omega| plus lambda3 times
    the absolute off-diagonal entries of Omega; the diagonal is unpenalized.
    """
    S = _as_matrix(S, 'S')
    if S.shape[0] != S.shape[1]:
        raise DataError('S must be square')
    if not np.allclose(S, S.T, rtol=1e-8, atol=1e-10):
        raise DataError('S must be symmetric')
    S = (S + S.T) / 2.0
    lambda3 = float(lambda3)
    if lambda3 < 0:
        raise DataError('lambda3 must be >= 0')

    if lambda3 == 0:
        vals = scipy.linalg.eigvalsh(S)
        if vals[-1] <= 0 or vals[0] <= 1e-12 * vals[-1]:
            raise NumericalError(
                'Covariance is singular; graphical lasso needs lambda3 > 0 here')
        omega = scipy.linalg.inv(S)
    else:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always', ConvergenceWarning)
            try:
                _, omega = _sk_graphical_lasso(
                    S, alpha=lambda3, tol=tol, enet_tol=tol * 1e-2, max_iter=max_iter)
            except FloatingPointError as exc:
                raise NumericalError('Graphical lasso failed: {}'.format(exc)) from exc
        if any(issubclass(w.category, ConvergenceWarning) for w in caught):
            logger.warning(
                'Graphical lasso did not converge (lambda3=%.3g, %d iterations)',
                lambda3, max_iter)
    omega = (omega + omega.T) / 2.0
    if scipy.linalg.eigvalsh(omega)[0] <= 0:
        raise NumericalError('Graphical lasso returned a non positive definite matrix')
    return omega
