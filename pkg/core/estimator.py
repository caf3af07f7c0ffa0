"""
Penalized maximum likelihood estimation of a cointegrated VECM.

The objective minimized over (alpha, beta, Gamma, Omega) is

    (1/n) tr(R Omega R') - log|Omega| + sum_j lambda1_j sum_i w_ij |beta_ij|
        + lambda2 ||D^1/2 Gamma||_F^2 + lambda3 sum_{k != k'} |Omega_kk'|

with R = Y - X Gamma - Z beta alpha'. ``fit_sparse_vecm`` alternates exact
block updates for Gamma (ridge), alpha (weighted Procrustes), beta (lasso)
and Omega (graphical lasso). ``johansen_ml`` is the unpenalized closed form.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from . import tuning
from .exceptions import DataError, NumericalError
from .solvers import (
    LassoFit,
    LassoWeights,
    graphical_lasso,
    lasso_multivariate,
    matrix_inv_sqrt_spd,
    matrix_sqrt_spd,
    pseudo_inverse,
    ridge_multivariate,
)
from .vecm import BetaPenalty, PenaltyConfig

logger = logging.getLogger(__name__)

# coefficients at or below this magnitude count as zero when reporting
ZERO_TOL = 1e-12

# smallest fraction of the tuned lambda1 tried for an annihilated beta column
DEGENERATE_FLOOR = 1.0 / 32.0


class Method(str, Enum):
    JOHANSEN = 'johansen'
    SPARSE_LASSO = 'sparse_lasso'
    SPARSE_ADAPTIVE_LASSO = 'sparse_adaptive_lasso'

    @classmethod
    def parse(cls, value):
        """Accepts enum members and command-line spellings such as 'sparse-lasso'."""
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace('-', '_'))
        except ValueError:
            choices = ', '.join(m.value for m in cls)
            raise DataError('Unknown method {!r} (choose from {})'.format(value, choices))

    @property
    def is_sparse(self):
        return self is not Method.JOHANSEN


@dataclass(frozen=True)
class CointegrationFit:
    """
    Estimated VECM. ``alpha`` and ``beta`` are stored with alpha' Omega alpha = I
    (unless ``beta_fixed``); use ``identified()`` for the leading-one form.
    """
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    omega: np.ndarray
    rank: int
    objective: float
    iterations: int
    converged: bool
    method: str
    p: int
    intercept: bool
    config: Optional[PenaltyConfig] = None
    objective_trace: Tuple[float, ...] = ()
    block_trace: Tuple[Tuple[int, str, float], ...] = field(default=(), repr=False)
    degenerate: bool = False
    inner_converged: bool = True
    beta_fixed: bool = False
    eigenvalues: Optional[np.ndarray] = None

    @property
    def pi(self):
        return self.alpha @ self.beta.T

    @property
    def q(self):
        return self.beta.shape[0]

    def identified(self):
        return identify_leading_one(self.alpha, self.beta)

    def residuals(self, design):
        return design.Y - design.X @ self.gamma - design.Z @ self.pi.T

    def with_changes(self, **changes):
        return replace(self, **changes)


def _check_rank(r, q):
    if not isinstance(r, (int, np.integer)) or not 1 <= r <= q:
        raise DataError('Rank must be an integer in [1, {}], got {!r}'.format(q, r))
    return int(r)


def identify_leading_one(alpha, beta):
    """
    Rescale each beta column so its first nonzero entry is 1; alpha absorbs
    the inverse scale so alpha beta' is unchanged. All-zero columns are left as is.
    """
    alpha = np.array(alpha, dtype=float, copy=True)
    beta = np.array(beta, dtype=float, copy=True)
    for j in range(beta.shape[1]):
        nonzero = np.flatnonzero(np.abs(beta[:, j]) > ZERO_TOL)
        if nonzero.size == 0:
            continue
        scale = beta[nonzero[0], j]
        beta[:, j] /= scale
        alpha[:, j] *= scale
    return alpha, beta


def subspace_angle(b1, b2):
    """Largest principal angle (radians) between the column spaces of b1 and b2."""
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    if b1.ndim == 1:
        b1 = b1.reshape(-1, 1)
    if b2.ndim == 1:
        b2 = b2.reshape(-1, 1)
    if b1.shape[0] != b2.shape[0]:
        raise DataError('Subspaces live in different dimensions')
    if not np.any(b1) or not np.any(b2):
        raise DataError('Subspace angle is undefined for a zero matrix')
    angles = scipy.linalg.subspace_angles(b1, b2)
    return float(min(max(angles.max(), 0.0), math.pi / 2))


def _beta_change(previous, current):
    prev_cols = previous[:, np.any(np.abs(previous) > ZERO_TOL, axis=0)]
    cur_cols = current[:, np.any(np.abs(current) > ZERO_TOL, axis=0)]
    if prev_cols.shape[1] == 0 or cur_cols.shape[1] == 0:
        return 0.0 if prev_cols.shape[1] == cur_cols.shape[1] else math.pi / 2
    return subspace_angle(prev_cols, cur_cols)


def penalized_objective(design, alpha, beta, gamma, omega, lambda1=0.0, lambda2=0.0,
                        lambda3=0.0, weights=None, penalize_intercept=True,
                        beta_penalty=BetaPenalty.LASSO):
    """Value of the penalized negative log-likelihood (1/n convention)."""
    n = design.n
    resid = design.Y - design.X @ gamma - design.Z @ (alpha @ beta.T).T
    sign, logdet = np.linalg.slogdet(omega)
    if sign <= 0:
        return math.inf
    value = float(np.trace(resid @ omega @ resid.T)) / n - logdet

    lam1 = np.broadcast_to(np.asarray(lambda1, dtype=float), (beta.shape[1],))
    if BetaPenalty(beta_penalty) is BetaPenalty.RIDGE:
        value += float(np.sum(lam1 * np.sum(beta ** 2, axis=0)))
    else:
        w = np.ones_like(beta) if weights is None else np.asarray(weights.w)
        absb = np.abs(beta)
        nonzero = absb > 0
        weighted = np.zeros_like(absb)
        # zero coefficients contribute nothing, even under an infinite weight
        weighted[nonzero] = w[nonzero] * absb[nonzero]
        value += float(np.sum(lam1 * weighted.sum(axis=0)))

    if gamma.size:
        mask = design.gamma_penalty_mask(penalize_intercept)
        value += float(lambda2) * float(np.sum(mask[:, None] * gamma ** 2))
    off = omega - np.diag(np.diag(omega))
    value += float(lambda3) * float(np.abs(off).sum())
    return value


def solve_gamma(design, pi, omega, lambda2, penalize_intercept=True):
    """
    Gamma minimizing (1/n) tr((W - X Gamma) Omega (W - X Gamma)') + lambda2 ||D^1/2 Gamma||^2
    with W = Y - Z Pi'.

    The normal equations X'X Gamma Omega + n lambda2 D Gamma = X'W Omega are
    the Kronecker system (Omega x X'X + n lambda2 I x D) vec Gamma = vec(X'W Omega).
    In the eigenbasis Omega = V diag(w) V' it splits into q ridge problems.
    """
    k, q = design.k, design.q
    if k == 0:
        return np.zeros((0, q))
    W = design.Y - design.Z @ np.asarray(pi, dtype=float).T
    lambda2 = float(lambda2)
    mask = design.gamma_penalty_mask(penalize_intercept)
    if lambda2 == 0:
        return ridge_multivariate(design.X, W, 0.0)
    vals, vecs = scipy.linalg.eigh(omega)
    if vals[0] <= 0:
        raise NumericalError('Omega must be positive definite in the Gamma step')
    rotated = W @ vecs
    columns = [
        ridge_multivariate(design.X, rotated[:, [j]], design.n * lambda2 / vals[j], mask)
        for j in range(q)
    ]
    return np.hstack(columns) @ vecs.T


def _procrustes(cross):
    """Orthonormal Q maximizing tr(cross Q); cross is r x q, Q is q x r."""
    U, s, Vt = np.linalg.svd(cross, full_matrices=False)
    degenerate = s.size == 0 or s[0] <= ZERO_TOL * max(1.0, np.abs(cross).max(initial=0.0))
    return Vt.T @ U.T, degenerate


def solve_alpha(design, gamma, omega, beta):
    """
    alpha = Omega^-1/2 V U' from the thin SVD U D V' of beta' Z' (Y - X Gamma) Omega^1/2;
    the result satisfies alpha' Omega alpha = I.
    """
    omega_half = matrix_sqrt_spd(omega)
    y_tilde = design.Y - design.X @ gamma
    cross = beta.T @ design.Z.T @ y_tilde @ omega_half
    rotation, degenerate = _procrustes(cross)
    if degenerate:
        logger.warning('Alpha step: zero cross-product, returning an arbitrary normalized alpha')
    return matrix_inv_sqrt_spd(omega) @ rotation


def _normalize_pair(alpha, beta, omega):
    """(alpha M^-1/2, beta M^1/2) with M = alpha' Omega alpha; alpha beta' is unchanged."""
    M = alpha.T @ omega @ alpha
    M = (M + M.T) / 2.0
    try:
        return alpha @ matrix_inv_sqrt_spd(M), beta @ matrix_sqrt_spd(M)
    except NumericalError:
        return alpha, beta


def _is_normalized(alpha, omega, tol=1e-10):
    M = alpha.T @ omega @ alpha
    return np.allclose(M, np.eye(M.shape[0]), rtol=0.0, atol=tol)


def _beta_response(design, gamma, omega, alpha):
    return (design.Y - design.X @ gamma) @ omega @ alpha


def _solve_beta_coupled(design, gamma, omega, alpha, lambda1, penalty=BetaPenalty.LASSO,
                        weights=None, tol=1e-6, max_iter=10_000, init=None):
    """
    Beta step for an alpha off the alpha' Omega alpha = I constraint.

    The columns of beta no longer separate, so the fit runs on the vectorized
    problem: vec((Y - X Gamma) Omega^1/2) regressed on (Omega^1/2 alpha) x Z.
    """
    q, r = design.q, alpha.shape[1]
    omega_half = matrix_sqrt_spd(omega)
    response = ((design.Y - design.X @ gamma) @ omega_half).reshape(-1, 1, order='F')
    regressors = np.kron(omega_half @ alpha, design.Z)
    lam = np.broadcast_to(np.asarray(lambda1, dtype=float), (r,))
    if BetaPenalty(penalty) is BetaPenalty.RIDGE:
        mask = np.repeat(lam, q)
        coef = ridge_multivariate(regressors, response, design.n, mask)
        return LassoFit(coef.reshape(q, r, order='F'), True, 0)
    w = np.ones((q, r)) if weights is None else np.asarray(weights.w, dtype=float)
    finite = np.isfinite(w)
    # the vectorized loss is scaled by 1/(n q), so the penalty is divided by q as well
    scaled = np.where(finite, w, 0.0) * lam[None, :] / q
    scaled[~finite] = np.inf
    start = None if init is None else np.asarray(init, dtype=float).reshape(-1, 1, order='F')
    fit = lasso_multivariate(regressors, response, 1.0,
                             LassoWeights(scaled.reshape(-1, 1, order='F')),
                             tol=tol, max_iter=max_iter, init=start)
    return LassoFit(fit.coef.reshape(q, r, order='F'), fit.converged, fit.iterations)


def _solve_beta_fit(design, gamma, omega, alpha, lambda1, penalty=BetaPenalty.LASSO,
                    weights=None, tol=1e-6, max_iter=10_000, init=None):
    U = _beta_response(design, gamma, omega, alpha)
    penalty = BetaPenalty(penalty)
    r = alpha.shape[1]
    lam = np.broadcast_to(np.asarray(lambda1, dtype=float), (r,))
    if penalty is BetaPenalty.RIDGE:
        coef = np.hstack([
            ridge_multivariate(design.Z, U[:, [j]], design.n * lam[j]) for j in range(r)
        ])
        return LassoFit(coef, True, 0)
    return lasso_multivariate(design.Z, U, lam, weights=weights, tol=tol,
                              max_iter=max_iter, init=init)


def solve_beta(design, gamma, omega, alpha, lambda1, penalty=BetaPenalty.LASSO,
               weights=None, tol=1e-6, max_iter=10_000):
    """
    Column-wise penalized regression of (Y - X Gamma) Omega alpha on Z.

    Requires alpha' Omega alpha = I, under which the weighted reduced-rank
    objective equals this regression plus a term free of beta.
    """
    return _solve_beta_fit(design, gamma, omega, alpha, lambda1, penalty, weights,
                           tol, max_iter).coef


def solve_omega(design, gamma, pi, lambda3):
    resid = design.Y - design.X @ gamma - design.Z @ np.asarray(pi, dtype=float).T
    S = resid.T @ resid / design.n
    return graphical_lasso(S, lambda3)


def _stacked_identity(design):
    q = design.q
    blocks = [np.eye(q) for _ in range(design.p - 1)]
    if design.intercept:
        blocks.append(np.zeros((1, q)))
    return np.vstack(blocks) if blocks else np.zeros((0, q))


def _rescue_columns(design, gamma, omega, alpha, beta, lam, config, weights):
    """Halve lambda1 for annihilated columns down to the floor; returns (beta, lam, degenerate)."""
    lam = np.array(lam, dtype=float)
    degenerate = False
    for j in range(beta.shape[1]):
        if np.any(np.abs(beta[:, j]) > ZERO_TOL):
            continue
        if lam[j] == 0:
            degenerate = True
            continue
        floor = lam[j] * DEGENERATE_FLOOR
        trial = lam[j]
        column = beta[:, [j]]
        w_j = weights.column(j) if weights is not None else None
        while trial > floor and not np.any(np.abs(column) > ZERO_TOL):
            trial /= 2.0
            column = _solve_beta_fit(
                design, gamma, omega, alpha[:, [j]], trial, config.beta_penalty, w_j,
                config.tol_inner, config.max_inner_iter).coef
        if np.any(np.abs(column) > ZERO_TOL):
            logger.info('Beta column %d revived with lambda1 %.4g (was %.4g)', j, trial, lam[j])
            beta[:, [j]] = column
            lam[j] = trial
        else:
            degenerate = True
            logger.warning('Beta column %d is zero even at lambda1 %.4g', j, trial)
    return beta, lam, degenerate


@dataclass
class _State:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    omega: np.ndarray


def _update_alpha(design, state, objective):
    """
    Procrustes alpha step from the pair rescaled to alpha' Omega alpha = I and
    from the pair as it stands. The rescaling keeps alpha beta' but moves the
    penalty on beta, so the better candidate is taken and only if the
    objective does not rise; otherwise alpha and beta are left alone.
    """
    current = objective(state.alpha, state.beta, state.gamma, state.omega)
    pairs = [_normalize_pair(state.alpha, state.beta, state.omega)]
    if not np.array_equal(pairs[0][1], state.beta):
        pairs.append((state.alpha, state.beta))
    best = None
    for _, beta in pairs:
        alpha = solve_alpha(design, state.gamma, state.omega, beta)
        value = objective(alpha, beta, state.gamma, state.omega)
        if best is None or value < best[0]:
            best = (value, alpha, beta)
    if best[0] <= current:
        state.alpha, state.beta = best[1], best[2]
    else:
        logger.debug('Alpha step skipped: objective would rise by %.3e', best[0] - current)


def _alternate(design, state, lam1, lam2, lam3, config, weights=None, penalty=None,
               record=None):
    """
    Run the Gamma -> alpha -> beta -> Omega loop from ``state`` until the
    beta column space moves less than tol_outer. Every block leaves the
    penalized objective where it was or lower: the alpha and Omega updates
    are dropped when they would raise it, and beta is fitted on the coupled
    problem whenever alpha is off the alpha' Omega alpha = I constraint. A
    final Gamma/alpha/beta pass under the last Omega restores the constraint.
    """
    penalty = config.beta_penalty if penalty is None else BetaPenalty(penalty)
    if penalty is BetaPenalty.ADAPTIVE_LASSO:
        penalty = BetaPenalty.LASSO
    lam1 = np.array(lam1, dtype=float)
    converged = False
    inner_ok = True
    trace = []
    iteration = 0

    def objective(alpha, beta, gamma, omega):
        return penalized_objective(design, alpha, beta, gamma, omega, lam1, lam2, lam3,
                                   weights, config.penalize_intercept, penalty)

    def mark(block):
        if record is not None:
            record.append((iteration, block, objective(
                state.alpha, state.beta, state.gamma, state.omega)))

    prev_beta = state.beta
    for iteration in range(1, config.max_outer_iter + 1):
        state.gamma = solve_gamma(design, state.alpha @ state.beta.T, state.omega, lam2,
                                  config.penalize_intercept)
        mark('gamma')
        _update_alpha(design, state, objective)
        mark('alpha')
        beta_solver = _solve_beta_fit if _is_normalized(state.alpha, state.omega) \
            else _solve_beta_coupled
        fit = beta_solver(design, state.gamma, state.omega, state.alpha, lam1, penalty,
                          weights, config.tol_inner, config.max_inner_iter, init=state.beta)
        inner_ok = inner_ok and fit.converged
        state.beta = fit.coef
        mark('beta')
        omega = solve_omega(design, state.gamma, state.alpha @ state.beta.T, lam3)
        if objective(state.alpha, state.beta, state.gamma, omega) <= objective(
                state.alpha, state.beta, state.gamma, state.omega):
            state.omega = omega
        mark('omega')
        trace.append(objective(state.alpha, state.beta, state.gamma, state.omega))
        angle = _beta_change(prev_beta, state.beta)
        logger.debug('Outer iteration %d: objective %.6f, beta moved %.3e rad',
                     iteration, trace[-1], angle)
        prev_beta = state.beta
        if angle < config.tol_outer:
            converged = True
            break

    state.gamma = solve_gamma(design, state.alpha @ state.beta.T, state.omega, lam2,
                              config.penalize_intercept)
    state.alpha, state.beta = _normalize_pair(state.alpha, state.beta, state.omega)
    state.alpha = solve_alpha(design, state.gamma, state.omega, state.beta)
    fit = _solve_beta_fit(design, state.gamma, state.omega, state.alpha, lam1, penalty,
                          weights, config.tol_inner, config.max_inner_iter, init=state.beta)
    inner_ok = inner_ok and fit.converged
    state.beta = fit.coef
    if not converged:
        logger.warning('Outer loop stopped after %d iterations without converging',
                       config.max_outer_iter)
    return iteration, converged, inner_ok, trace


def _resolved_warm_lambdas(config, r):
    lam1 = config.lambda1_for(r)
    if lam1 is None:
        lam1 = np.full(r, config.warm_start_penalty)
    lam2 = config.lambda2 if config.lambda2 is not None else config.warm_start_penalty
    lam3 = config.lambda3 if config.lambda3 is not None else config.warm_start_penalty
    return lam1, lam2, lam3


def warm_start_fit(design, r, config=None):
    """
    Starting values: the alternating loop with a ridge penalty on beta,
    started from beta = ones, Omega = I and Gamma = stacked identities.
    Lambdas not fixed in ``config`` use ``warm_start_penalty``.
    """
    config = config or PenaltyConfig()
    r = _check_rank(r, design.q)
    lam1, lam2, lam3 = _resolved_warm_lambdas(config, r)
    q = design.q
    state = _State(alpha=np.zeros((q, r)), beta=np.ones((q, r)),
                   gamma=_stacked_identity(design), omega=np.eye(q))

    state.alpha = solve_alpha(design, state.gamma, state.omega, state.beta)
    state.beta = _solve_beta_fit(design, state.gamma, state.omega, state.alpha, lam1,
                                 BetaPenalty.RIDGE).coef
    state.omega = solve_omega(design, state.gamma, state.alpha @ state.beta.T, lam3)

    iterations, converged, _, trace = _alternate(
        design, state, lam1, lam2, lam3, config, penalty=BetaPenalty.RIDGE)
    omega = solve_omega(design, state.gamma, state.alpha @ state.beta.T, lam3)
    alpha, beta = _normalize_pair(state.alpha, state.beta, omega)
    objective = penalized_objective(design, alpha, beta, state.gamma, omega, lam1, lam2, lam3,
                                    penalize_intercept=config.penalize_intercept,
                                    beta_penalty=BetaPenalty.RIDGE)
    logger.debug('Warm start (r=%d) finished after %d iterations', r, iterations)
    return CointegrationFit(
        alpha=alpha, beta=beta, gamma=state.gamma, omega=omega, rank=r,
        objective=objective, iterations=iterations, converged=converged,
        method='warm_start', p=design.p, intercept=design.intercept,
        config=config.replace(lambda1=tuple(lam1), lambda2=lam2, lambda3=lam3,
                              beta_penalty=BetaPenalty.RIDGE),
        objective_trace=tuple(trace))


def _tune(design, start, config, weights):
    """Fill in lambdas left as None, using the starting fit's partial residuals."""
    r = start.rank
    lam2 = config.lambda2
    if lam2 is None:
        lam2, _ = tuning.tune_lambda2(
            design.X, design.Y - design.Z @ start.pi.T, config.grid_size,
            design.gamma_penalty_mask(config.penalize_intercept))
        logger.info('Selected lambda2 = %.4g by cross-validation', lam2)
    lam1 = config.lambda1_for(r)
    if lam1 is None:
        U = _beta_response(design, start.gamma, start.omega, start.alpha)
        lam1 = tuning.tune_lambda1(design.Z, U, weights, config.grid_size,
                                   config.tol_inner, config.max_inner_iter)
        logger.info('Selected lambda1 = %s by cross-validation',
                    np.array2string(lam1, precision=4))
    lam3 = config.lambda3
    if lam3 is None:
        lam3 = tuning.tune_lambda3(start.residuals(design), config.grid_size)
        logger.info('Selected lambda3 = %.4g by BIC', lam3)
    return np.asarray(lam1, dtype=float), float(lam2), float(lam3)


def _fit_penalized(design, r, config, weights=None, start=None, method=Method.SPARSE_LASSO):
    start = start or warm_start_fit(design, r, config)
    lam1, lam2, lam3 = _tune(design, start, config, weights)
    state = _State(alpha=start.alpha.copy(), beta=start.beta.copy(),
                   gamma=start.gamma.copy(), omega=start.omega.copy())
    record = []
    iterations, converged, inner_ok, trace = _alternate(
        design, state, lam1, lam2, lam3, config, weights, BetaPenalty.LASSO, record)

    beta, lam1, degenerate = _rescue_columns(
        design, state.gamma, state.omega, state.alpha, state.beta, lam1,
        config.replace(beta_penalty=BetaPenalty.LASSO), weights)
    if degenerate:
        logger.warning('Fit at rank %d has an all-zero cointegrating vector', r)

    penalty = config.beta_penalty
    objective = penalized_objective(design, state.alpha, beta, state.gamma, state.omega,
                                    lam1, lam2, lam3, weights, config.penalize_intercept)
    logger.info('%s fit (r=%d): %d outer iterations, converged=%s, objective %.6f',
                method.value, r, iterations, converged, objective)
    return CointegrationFit(
        alpha=state.alpha, beta=beta, gamma=state.gamma, omega=state.omega, rank=r,
        objective=objective, iterations=iterations, converged=converged,
        method=method.value, p=design.p, intercept=design.intercept,
        config=config.replace(lambda1=tuple(lam1), lambda2=lam2, lambda3=lam3,
                              beta_penalty=penalty),
        objective_trace=tuple(trace), block_trace=tuple(record),
        degenerate=degenerate, inner_converged=inner_ok)


def fit_sparse_vecm(design, r, config=None, pilot=None):
    """
    Sparse penalized ML fit at rank r. Lambdas left as None in ``config`` are
    tuned once from the warm start: lambda1 and lambda2 by time-series
    cross-validation, lambda3 by BIC.

    The adaptive lasso weights come from a plain lasso fit; pass ``pilot`` to
    reuse one already computed on the same design, rank and config.
    """
    config = config or PenaltyConfig()
    r = _check_rank(r, design.q)
    if config.beta_penalty is BetaPenalty.RIDGE:
        return warm_start_fit(design, r, config)
    if config.beta_penalty is BetaPenalty.LASSO:
        return _fit_penalized(design, r, config)

    if pilot is None:
        pilot = _fit_penalized(design, r, config.replace(beta_penalty=BetaPenalty.LASSO))
    elif pilot.method != Method.SPARSE_LASSO.value or pilot.rank != r:
        raise DataError('The adaptive lasso pilot must be a sparse_lasso fit at rank {}'.format(r))
    weights = LassoWeights.from_pilot(pilot.beta)
    # lambda2 and lambda3 carry over from the pilot; lambda1 is re-tuned under the weights
    final_config = config.replace(lambda2=pilot.config.lambda2, lambda3=pilot.config.lambda3)
    fit = _fit_penalized(design, r, final_config, weights=weights, start=pilot,
                         method=Method.SPARSE_ADAPTIVE_LASSO)
    return fit.with_changes(iterations=pilot.iterations + fit.iterations)


def johansen_ml(design, r):
    """
    Unpenalized reduced-rank ML estimate through the generalized eigenproblem
    |lambda S11 - S10 S00^-1 S01| = 0 on the residuals of Y and Z given X.
    """
    r = _check_rank(r, design.q)
    Y, X, Z = design.Y, design.X, design.Z
    n, q, k = design.n, design.q, design.k
    if n <= k + q:
        raise NumericalError(
            'Johansen estimation needs more than {} observations, got {}; '
            'use a sparse method instead'.format(k + q, n))
    if k:
        X_pinv = pseudo_inverse(X)
        R0 = Y - X @ (X_pinv @ Y)
        R1 = Z - X @ (X_pinv @ Z)
    else:
        R0, R1 = Y, Z
    S11 = R1.T @ R1 / n
    S01 = R0.T @ R1 / n
    # S10 S00^-1 S01 through an orthonormal basis of R0, without inverting S00
    Q0, _ = np.linalg.qr(R0)
    projected = Q0.T @ R1
    A = projected.T @ projected / n
    try:
        eigvals, eigvecs = scipy.linalg.eigh((A + A.T) / 2.0, (S11 + S11.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            'Lagged levels moment matrix is singular ({}); use a sparse method instead'.format(exc)
        ) from exc
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    beta = eigvecs[:, order[:r]]
    alpha = S01 @ beta
    pi = alpha @ beta.T
    gamma = X_pinv @ (Y - Z @ pi.T) if k else np.zeros((0, q))
    resid = Y - X @ gamma - Z @ pi.T
    try:
        omega = graphical_lasso(resid.T @ resid / n, 0.0)
    except NumericalError as exc:
        raise NumericalError(
            'Residual covariance is singular; use a sparse method instead') from exc
    alpha, beta = _normalize_pair(alpha, beta, omega)
    objective = penalized_objective(design, alpha, beta, gamma, omega)
    return CointegrationFit(
        alpha=alpha, beta=beta, gamma=gamma, omega=omega, rank=r, objective=objective,
        iterations=0, converged=True, method=Method.JOHANSEN.value, p=design.p,
        intercept=design.intercept, eigenvalues=np.clip(eigvals, 0.0, None))


def _fit_rank_zero(design, config, method):
    """No cointegration: Pi = 0 and only Gamma and Omega are estimated."""
    q = design.q
    zero = np.zeros((q, 0))
    pi = np.zeros((q, q))
    if method is Method.JOHANSEN or config is None:
        gamma = solve_gamma(design, pi, np.eye(q), 0.0)
        omega = solve_omega(design, gamma, pi, 0.0)
        resolved = None
    else:
        lam2 = config.lambda2
        if lam2 is None:
            lam2, _ = tuning.tune_lambda2(
                design.X, design.Y, config.grid_size,
                design.gamma_penalty_mask(config.penalize_intercept))
        omega = np.eye(q)
        gamma = solve_gamma(design, pi, omega, lam2, config.penalize_intercept)
        lam3 = config.lambda3
        if lam3 is None:
            lam3 = tuning.tune_lambda3(design.Y - design.X @ gamma, config.grid_size)
        omega = solve_omega(design, gamma, pi, lam3)
        gamma = solve_gamma(design, pi, omega, lam2, config.penalize_intercept)
        resolved = config.replace(lambda1=None, lambda2=lam2, lambda3=lam3)
    objective = penalized_objective(design, zero, zero, gamma, omega)
    return CointegrationFit(
        alpha=zero, beta=zero, gamma=gamma, omega=omega, rank=0, objective=objective,
        iterations=0, converged=True, method=method.value, p=design.p,
        intercept=design.intercept, config=resolved)


def fit_by_method(design, r, method, config=None, pilot=None):
    """
    Single entry point for the three estimators; rank 0 fits short-run terms only.
    ``pilot`` is handed to the adaptive lasso, see ``fit_sparse_vecm``.
    """
    method = Method.parse(method)
    if r == 0:
        return _fit_rank_zero(design, config or PenaltyConfig(), method)
    if method is Method.JOHANSEN:
        return johansen_ml(design, r)
    config = config or PenaltyConfig()
    penalty = (BetaPenalty.ADAPTIVE_LASSO if method is Method.SPARSE_ADAPTIVE_LASSO
               else BetaPenalty.LASSO)
    return fit_sparse_vecm(design, r, config.replace(beta_penalty=penalty),
                           pilot if penalty is BetaPenalty.ADAPTIVE_LASSO else None)


def fit_with_fixed_beta(design, beta, config=None):
    """
    alpha, Gamma and Omega with beta held fixed. Without ``config`` this is the
    Johansen path (OLS of Y on [X, Z beta]); otherwise Gamma and Omega are
    penalized with the config's lambda2 and lambda3 (tuned when None).
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 2 or beta.shape[0] != design.q:
        raise DataError('beta must have {} rows'.format(design.q))
    r = beta.shape[1]
    n, k = design.n, design.k
    ZB = design.Z @ beta
    regressors = np.hstack([design.X, ZB])

    if config is None:
        if np.linalg.matrix_rank(regressors) < regressors.shape[1]:
            raise NumericalError('Regressors are collinear under the fixed beta')
        coef = pseudo_inverse(regressors) @ design.Y
        gamma, alpha = coef[:k], coef[k:].T
        resid = design.Y - regressors @ coef
        omega = graphical_lasso(resid.T @ resid / n, 0.0)
        objective = penalized_objective(design, alpha, beta, gamma, omega)
        return CointegrationFit(
            alpha=alpha, beta=beta, gamma=gamma, omega=omega, rank=r, objective=objective,
            iterations=0, converged=True, method=Method.JOHANSEN.value, p=design.p,
            intercept=design.intercept, beta_fixed=True)

    ZB_pinv = pseudo_inverse(ZB)
    omega = np.eye(design.q)
    gamma = _stacked_identity(design)
    alpha = (ZB_pinv @ (design.Y - design.X @ gamma)).T
    lam2 = config.lambda2
    if lam2 is None:
        lam2, _ = tuning.tune_lambda2(design.X, design.Y - ZB @ alpha.T, config.grid_size,
                                      design.gamma_penalty_mask(config.penalize_intercept))
    lam3 = config.lambda3
    converged = False
    iteration = 0
    for iteration in range(1, config.max_outer_iter + 1):
        previous = alpha
        gamma = solve_gamma(design, alpha @ beta.T, omega, lam2, config.penalize_intercept)
        # every equation shares the regressor Z beta, so GLS equals OLS here
        alpha = (ZB_pinv @ (design.Y - design.X @ gamma)).T
        resid = design.Y - design.X @ gamma - ZB @ alpha.T
        if lam3 is None:
            lam3 = tuning.tune_lambda3(resid, config.grid_size)
        omega = graphical_lasso(resid.T @ resid / n, lam3)
        change = np.abs(alpha - previous).max(initial=0.0)
        if change < config.tol_outer * max(1.0, np.abs(alpha).max(initial=0.0)):
            converged = True
            break
    objective = penalized_objective(design, alpha, beta, gamma, omega, 0.0, lam2, lam3,
                                    penalize_intercept=config.penalize_intercept)
    return CointegrationFit(
        alpha=alpha, beta=beta, gamma=gamma, omega=omega, rank=r, objective=objective,
        iterations=iteration, converged=converged, method=Method.SPARSE_LASSO.value,
        p=design.p, intercept=design.intercept,
        config=config.replace(lambda2=lam2, lambda3=lam3), beta_fixed=True)
