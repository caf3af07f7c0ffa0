"""Cointegration rank selection with the iterative Rank Selection Criterion (RSC)."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from .estimator import solve_gamma, warm_start_fit
from .exceptions import DataError
from .solvers import numerical_rank, pseudo_inverse
from .vecm import PenaltyConfig

logger = logging.getLogger(__name__)

SAMPLE_SIZES = ('n', 'T')


@dataclass(frozen=True)
class RankEstimate:
    r_hat: int
    eigenvalues: np.ndarray
    mu: float
    s2: float
    l: int
    iterations: int
    trajectory: Tuple[int, ...]
    cycled: bool = False
    sample_size: str = 'n'
    df_short_run: float = 0.0


def _projection(Y_tilde, Z):
    """P Y_tilde with P = Z (Z'Z)^- Z'."""
    return Z @ (pseudo_inverse(Z.T @ Z) @ (Z.T @ Y_tilde))


def rsc_threshold(Y_tilde, Z, n_obs=None, df_short_run=0.0):
    """
    Returns (mu, s2, l): l = rank(Z), s2 = ||Y_tilde - P Y_tilde||^2 / ((N - l - df) q)
    and mu = 2 s2 (q + l). N defaults to the row count; ``df_short_run`` is the
    number of degrees of freedom already spent on the short-run fit behind
    Y_tilde (0 leaves the textbook N q - l q denominator).
    """
    Y_tilde = np.asarray(Y_tilde, dtype=float)
    Z = np.asarray(Z, dtype=float)
    n, q = Y_tilde.shape
    N = n if n_obs is None else int(n_obs)
    df_short_run = float(df_short_run)
    if df_short_run < 0:
        raise DataError('df_short_run must be >= 0')
    l = numerical_rank(Z) if Z.size else 0
    denominator = (N - l - df_short_run) * q
    if denominator <= 0:
        raise DataError(
            'RSC needs more observations than the fitted regressors ({} <= {} + {:.3g})'.format(
                N, l, df_short_run))
    resid = Y_tilde - _projection(Y_tilde, Z)
    s2 = float(np.sum(resid ** 2)) / denominator
    return 2.0 * s2 * (q + l), s2, l


def ridge_degrees_of_freedom(X, lambda2, omega=None, n_obs=None, penalty_mask=None):
    """
    Effective degrees of freedom tr(X (X'X + c D)^- X') of the Gamma step,
    averaged over the eigenvalues w of Omega (c = n lambda2 / w per column).
    """
    X = np.asarray(X, dtype=float)
    k = X.shape[1]
    if k == 0:
        return 0.0
    if lambda2 == 0:
        return float(numerical_rank(X))
    n = X.shape[0] if n_obs is None else n_obs
    mask = np.ones(k) if penalty_mask is None else np.asarray(penalty_mask, dtype=float)
    weights = np.ones(1) if omega is None else scipy.linalg.eigvalsh(omega)
    gram = X.T @ X
    traces = [
        np.trace(pseudo_inverse(gram + n * lambda2 / w * np.diag(mask)) @ gram)
        for w in weights
    ]
    return float(np.mean(traces))


def _short_run_fit(design, r, config):
    """Gamma at rank r and the degrees of freedom it uses."""
    mask = design.gamma_penalty_mask(config.penalize_intercept)
    if r == 0:
        lam2 = config.lambda2 if config.lambda2 is not None else config.warm_start_penalty
        q = design.q
        gamma = solve_gamma(design, np.zeros((q, q)), np.eye(q), lam2, config.penalize_intercept)
        return gamma, ridge_degrees_of_freedom(design.X, lam2, None, design.n, mask)
    fit = warm_start_fit(design, r, config)
    df = ridge_degrees_of_freedom(design.X, fit.config.lambda2, fit.omega, design.n, mask)
    return fit.gamma, df


def select_rank(design, config=None, sample_size='n'):
    """
    Start at r = q; at each step estimate Gamma at the current rank with the
    warm-start pass, count eigenvalues of Y~' P Y~ at or above mu and move to
    that rank, until the rank repeats. A two-cycle ends with the smaller rank.

    S^2 is the residual variance of Y on both X and Z, so the degrees of
    freedom of the ridge Gamma fit come off its denominator along with rank(Z).
    """
    config = config or PenaltyConfig()
    if sample_size not in SAMPLE_SIZES:
        raise DataError('sample_size must be one of {}'.format(', '.join(SAMPLE_SIZES)))
    n_obs = design.n if sample_size == 'n' else design.n + design.p
    q = design.q
    r = q
    trajectory = [r]
    cycled = False
    cache = {}

    while True:
        gamma, df = _short_run_fit(design, r, config)
        Y_tilde = design.Y - design.X @ gamma
        mu, s2, l = rsc_threshold(Y_tilde, design.Z, n_obs, df)
        PY = _projection(Y_tilde, design.Z)
        eigenvalues = np.clip(scipy.linalg.eigvalsh(Y_tilde.T @ PY), 0.0, None)[::-1]
        r_new = int(np.sum(eigenvalues >= mu))
        cache[r] = (eigenvalues, mu, s2, l, df)
        logger.debug('RSC at r=%d: mu=%.4g, next rank %d', r, mu, r_new)
        if r_new == r:
            break
        if len(trajectory) >= 2 and r_new == trajectory[-2]:
            cycled = True
            r = min(r, r_new)
            trajectory.append(r_new)
            logger.warning('RSC cycles between ranks %d and %d; keeping %d',
                           trajectory[-2], trajectory[-1], r)
            break
        if r_new in trajectory:
            cycled = True
            r = min(trajectory[trajectory.index(r_new):])
            trajectory.append(r_new)
            logger.warning('RSC revisits rank %d; keeping %d', r_new, r)
            break
        r = r_new
        trajectory.append(r)

    eigenvalues, mu, s2, l, df = cache[r]
    logger.info('Selected cointegration rank %d after %d iterations', r, len(cache))
    return RankEstimate(
        r_hat=r, eigenvalues=eigenvalues, mu=mu, s2=s2, l=l, iterations=len(cache),
        trajectory=tuple(trajectory), cycled=cycled, sample_size=sample_size,
        df_short_run=df)
