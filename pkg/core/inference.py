"""
Zero-sum restriction test on the cointegrating vectors: Wald statistic on
the column sums of beta, calibrated by a residual bootstrap under the null
cointegration space spanned by the interest-rate spreads.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from . import dispatch
from .estimator import ZERO_TOL, Method, fit_by_method, fit_with_fixed_beta
from .exceptions import DataError, NumericalError
from .vecm import PenaltyConfig, as_series, build_design, lag_regressors

logger = logging.getLogger(__name__)

# ridge added to a singular covariance of bootstrap replicates
COVARIANCE_RIDGE = 1e-8

RECOMMENDED_MIN_B = 199


@dataclass(frozen=True)
class BootstrapResult:
    """``beta`` is the identified estimate at rank q - 1 that ``theta_hat`` is computed from."""
    q_stat: float
    q_boot: np.ndarray
    p_value: float
    B: int
    eta: float
    theta_hat: np.ndarray
    beta: np.ndarray
    reject: bool
    method: str
    seed: int
    regularized: bool = False
    retries: int = 0
    config: Optional[PenaltyConfig] = None

    @property
    def beta_support(self):
        return np.abs(self.beta) > ZERO_TOL


def eht_null_beta(q):
    """q x (q-1) spreads matrix: a first row of ones above -I."""
    q = int(q)
    if q < 2:
        raise DataError('The spreads matrix needs at least 2 series, got {}'.format(q))
    return np.vstack([np.ones((1, q - 1)), -np.eye(q - 1)])


def zero_sum_theta(beta):
    """Column sums of beta."""
    beta = np.asarray(beta, dtype=float)
    if beta.ndim == 1:
        beta = beta.reshape(-1, 1)
    return beta.sum(axis=0)


def simulate_null_sample(start, pi, gamma, residuals, p, intercept, rng):
    """
    Recursive bootstrap sample: the first p rows are ``start``, then
    dy_t = Pi y_{t-1} + sum_i Gamma_i dy_{t-i} (+ c) + e*_t with e*_t drawn
    uniformly, with replacement, from the rows of ``residuals``.
    """
    start = np.asarray(start, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    n, q = residuals.shape
    y = np.zeros((n + p, q))
    y[:p] = start[:p]
    draws = rng.integers(0, n, size=n)
    for step, t in enumerate(range(p, n + p)):
        x = lag_regressors(y[:t], p, intercept)
        y[t] = y[t - 1] + pi @ y[t - 1] + x @ gamma + residuals[draws[step]]
    return y


def bootstrap_replicate(payload):
    """
    Fit one bootstrap sample and return its theta. Failed fits are retried
    on fresh draws from the same stream, up to ``max_retries`` times.
    """
    rng = np.random.default_rng([int(payload['seed']), int(payload['index'])])
    config = payload.get('config')
    config = PenaltyConfig(**config) if config else None
    pi = np.asarray(payload['pi'])
    gamma = np.asarray(payload['gamma']).reshape(-1, pi.shape[0])
    p, intercept = int(payload['p']), bool(payload['intercept'])
    max_retries = int(payload.get('max_retries', 10))
    for attempt in range(max_retries + 1):
        sample = simulate_null_sample(payload['start'], pi, gamma, payload['residuals'],
                                      p, intercept, rng)
        if not np.all(np.isfinite(sample)):
            continue
        try:
            fit = fit_by_method(build_design(sample, p, intercept), int(payload['rank']),
                                payload['method'], config)
        except (DataError, NumericalError, np.linalg.LinAlgError) as exc:
            logger.info('Bootstrap replicate %s attempt %d failed: %s',
                        payload['index'], attempt, exc)
            continue
        return {
            'index': payload['index'],
            'theta': zero_sum_theta(fit.identified()[1]).tolist(),
            'retries': attempt,
        }
    raise NumericalError('Bootstrap replicate {} failed {} times'.format(
        payload['index'], max_retries + 1))


def _wald(thetas, cov_inv):
    return np.einsum('bi,ij,bj->b', thetas, cov_inv, thetas)


def bootstrap_zero_sum_test(series, p, method=Method.JOHANSEN, B=999, eta=0.05, seed=0,
                            config=None, intercept=False, max_retries=10):
    """
    Test H0: every cointegrating vector sums to zero, at rank q - 1.

    The null model is fitted with beta fixed to the spreads matrix; B samples
    are generated from it by resampling its centered residuals and refitted
    with ``method``. Q and every Q*_b use the covariance of the B bootstrap
    thetas; p = share of Q*_b above Q and H0 is rejected when p <= eta.
    """
    from .tasks import bootstrap_replicate as replicate_task

    method = Method.parse(method)
    B = int(B)
    if B < 2:
        raise DataError('B must be at least 2, got {}'.format(B))
    if B < RECOMMENDED_MIN_B:
        logger.warning('B = %d is below the recommended %d replicates', B, RECOMMENDED_MIN_B)
    if not 0 < eta < 1:
        raise DataError('eta must lie in (0, 1), got {}'.format(eta))
    series = as_series(series)
    q = series.q
    null_beta = eht_null_beta(q)
    design = build_design(series, p, intercept)

    original = fit_by_method(design, q - 1, method, config)
    beta_hat = original.identified()[1]
    theta_hat = zero_sum_theta(beta_hat)
    tuned = original.config if method.is_sparse else None

    null_fit = fit_with_fixed_beta(design, null_beta, tuned)
    resid = null_fit.residuals(design)
    centered = resid - resid.mean(axis=0)

    common = {
        'seed': int(seed),
        'start': series.values[:p].tolist(),
        'pi': null_fit.pi.tolist(),
        'gamma': null_fit.gamma.tolist(),
        'residuals': centered.tolist(),
        'p': int(p),
        'intercept': bool(intercept),
        'rank': q - 1,
        'method': method.value,
        'config': tuned.as_dict() if tuned is not None else None,
        'max_retries': int(max_retries),
    }
    results = dispatch.map_tasks(replicate_task, [dict(common, index=b) for b in range(B)])
    thetas = np.array([item['theta'] for item in results], dtype=float).reshape(B, q - 1)
    retries = int(sum(item['retries'] for item in results))

    cov = np.atleast_2d(np.cov(thetas, rowvar=False, ddof=1))
    regularized = False
    vals = scipy.linalg.eigvalsh(cov)
    if vals[-1] <= 0 or vals[0] <= 1e-12 * vals[-1]:
        logger.warning('Bootstrap covariance is singular; adding %.0e to its diagonal',
                       COVARIANCE_RIDGE)
        cov = cov + COVARIANCE_RIDGE * np.eye(cov.shape[0])
        regularized = True
    cov_inv = scipy.linalg.inv(cov)
    q_boot = _wald(thetas, cov_inv)
    q_stat = float(_wald(theta_hat.reshape(1, -1), cov_inv)[0])
    p_value = float(np.mean(q_boot > q_stat))
    reject = p_value <= eta
    logger.info('Zero-sum test (%s, B=%d): Q=%.4f, p=%.3f, %s', method.value, B, q_stat,
                p_value, 'reject' if reject else 'do not reject')
    return BootstrapResult(
        q_stat=q_stat, q_boot=q_boot, p_value=p_value, B=B, eta=float(eta),
        theta_hat=theta_hat, beta=beta_hat, reject=reject, method=method.value,
        seed=int(seed), regularized=regularized, retries=retries, config=tuned)
