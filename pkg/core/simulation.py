"""
Monte Carlo harness: the simulation designs, their data-generating process,
the estimation-accuracy (subspace angle) study and the rank-recovery study.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import stats

from . import dispatch
from .estimator import Method, fit_by_method, subspace_angle
from .exceptions import DataError, NumericalError
from .rank import select_rank
from .vecm import PenaltyConfig, TimeSeriesMatrix, build_design

logger = logging.getLogger(__name__)

A_VALUES = (-0.2, -0.4, -0.6, -0.8)

# lag order used for every simulation fit (the DGP has one lagged difference)
STUDY_P = 2

LOW_DESIGNS = ('low_sparse_r1', 'low_sparse_r2', 'low_dense_r1')
HIGH_DESIGNS = ('high_sparse_r1', 'high_sparse_r4', 'high_dense_r1')
DESIGN_GROUPS = {
    'low': LOW_DESIGNS,
    'high': HIGH_DESIGNS,
    'all': LOW_DESIGNS + HIGH_DESIGNS,
}


@dataclass(frozen=True)
class SimDesign:
    """Delta y_t = a beta beta' y_{t-1} + gamma Delta y_{t-1} + drift + e_t."""
    name: str
    q: int
    T: int
    beta_true: np.ndarray
    a: float
    gamma_coef: float
    r_true: int
    drift: float = 0.0

    def __post_init__(self):
        beta = np.array(self.beta_true, dtype=float, copy=True)
        if beta.ndim == 1:
            beta = beta.reshape(-1, 1)
        beta.setflags(write=False)
        object.__setattr__(self, 'beta_true', beta)
        if beta.shape != (self.q, self.r_true):
            raise DataError('beta_true must be {} x {}'.format(self.q, self.r_true))
        if not self.a < 0:
            raise DataError('Adjustment scalar a must be negative, got {}'.format(self.a))

    @property
    def alpha(self):
        return self.a * self.beta_true

    @property
    def pi(self):
        return self.alpha @ self.beta_true.T

    @property
    def gamma_matrix(self):
        return self.gamma_coef * np.eye(self.q)

    def with_a(self, a):
        return SimDesign(self.name, self.q, self.T, self.beta_true, float(a), self.gamma_coef,
                         self.r_true, self.drift)

    def as_dict(self):
        return {
            'name': self.name, 'q': self.q, 'T': self.T,
            'beta_true': self.beta_true.tolist(), 'a': self.a,
            'gamma_coef': self.gamma_coef, 'r_true': self.r_true, 'drift': self.drift,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def _unit(q, rows):
    v = np.zeros(q)
    v[list(rows)] = 1.0
    return v


def _catalog_betas():
    low = 4
    high = 11
    dense_high = np.full(high, 0.1)
    dense_high[:3] = 1.0
    return {
        'low_sparse_r1': (low, 500, 0.1, _unit(low, [0]).reshape(-1, 1)),
        'low_sparse_r2': (low, 500, 0.1, np.column_stack([_unit(low, [0]), _unit(low, [1])])),
        'low_dense_r1': (low, 500, 0.1, np.array([[1.0], [0.5], [0.5], [0.5]])),
        'high_sparse_r1': (high, 50, 0.4, _unit(high, range(3)).reshape(-1, 1)),
        'high_sparse_r4': (high, 50, 0.4, np.column_stack([
            _unit(high, range(0, 3)), _unit(high, range(3, 6)),
            _unit(high, range(6, 9)), _unit(high, range(9, 11))])),
        'high_dense_r1': (high, 50, 0.4, dense_high.reshape(-1, 1)),
    }


def design_catalog(a=-0.2):
    """The six simulation designs at adjustment scalar ``a``."""
    designs = []
    for name, (q, T, gamma_coef, beta) in _catalog_betas().items():
        designs.append(SimDesign(name, q, T, beta, float(a), gamma_coef, beta.shape[1]))
    return designs


def design_grid(names=None, a_values=A_VALUES):
    """Catalog designs (names or group names 'low', 'high', 'all') crossed with a values."""
    if names is None:
        names = DESIGN_GROUPS['all']
    if isinstance(names, str):
        names = [names]
    wanted = []
    for name in names:
        wanted.extend(DESIGN_GROUPS.get(name, (name,)))
    catalog = {d.name: d for d in design_catalog()}
    unknown = [name for name in wanted if name not in catalog]
    if unknown:
        raise DataError('Unknown design(s): {}'.format(', '.join(unknown)))
    return [catalog[name].with_a(a) for name in wanted for a in a_values]


def generate_sample(design, seed, noise_scale=1.0):
    """
    T observations from zero initial conditions (y_0 = Delta y_0 = 0) with
    N(0, noise_scale^2 I) errors; row 0 is y_1.
    """
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((design.T, design.q)) * noise_scale
    pi = design.pi
    gamma = design.gamma_matrix
    y = np.zeros((design.T, design.q))
    y_prev = np.zeros(design.q)
    dy_prev = np.zeros(design.q)
    for t in range(design.T):
        dy = pi @ y_prev + gamma @ dy_prev + design.drift + noise[t]
        y[t] = y_prev + dy
        y_prev, dy_prev = y[t], dy
    return TimeSeriesMatrix(y)


def synthetic_forecast_system(seed, T=150):
    """
    A sparse cointegrated system with drift for forecasting checks: q = 8,
    r = 1, beta = (1, -0.8, 0.6, 0, ..., 0)'. Returns (series, design).
    """
    beta = np.zeros((8, 1))
    beta[:3, 0] = [1.0, -0.8, 0.6]
    design = SimDesign('synthetic_forecast', 8, T, beta, -0.4, 0.2, 1, drift=0.1)
    return generate_sample(design, seed, 1.0), design


@dataclass(frozen=True)
class StudyRow:
    design: str
    method: str
    a: float
    metric: str
    value: float
    stderr: Optional[float] = None


@dataclass(frozen=True)
class StudyReport:
    study: str
    M: int
    seed: int
    rows: Tuple[StudyRow, ...]

    def value(self, design, method, metric, a=None):
        for row in self.rows:
            if (row.design, row.method, row.metric) == (design, method, metric) and (
                    a is None or math.isclose(row.a, a)):
                return row.value
        raise KeyError((design, method, metric, a))

    def records(self):
        return [
            {'design': r.design, 'method': r.method, 'a': r.a, 'metric': r.metric,
             'value': r.value, 'stderr': r.stderr}
            for r in self.rows
        ]


def summarize_angles(values):
    """Mean angle and its Monte Carlo standard error."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    if values.size == 1:
        return float(values[0]), math.nan
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def paired_t_pvalue(x, y):
    """Two-sided paired t-test p-value; identical samples give 1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.allclose(x, y, rtol=0.0, atol=0.0):
        return 1.0
    p_value = stats.ttest_rel(x, y).pvalue
    return 1.0 if math.isnan(p_value) else float(p_value)


def angle_run(payload):
    """
    Fit one generated sample with each method at the true rank; returns angles.
    The sparse lasso fit doubles as the adaptive lasso pilot when both are requested.
    """
    design = SimDesign.from_dict(payload['design'])
    sample = generate_sample(design, [int(s) for s in payload['stream']],
                             float(payload.get('noise_scale', 1.0)))
    vecm = build_design(sample, int(payload.get('p', STUDY_P)))
    config = PenaltyConfig(**payload['config']) if payload.get('config') else None
    methods = sorted(payload['methods'],
                     key=lambda m: Method.parse(m) is Method.SPARSE_ADAPTIVE_LASSO)
    angles, errors, pilot = {}, {}, None
    for method in methods:
        try:
            fit = fit_by_method(vecm, design.r_true, method, config, pilot=pilot)
            angles[method] = subspace_angle(fit.beta, design.beta_true)
        except (DataError, NumericalError, np.linalg.LinAlgError) as exc:
            angles[method] = None
            errors[method] = str(exc)
            continue
        if fit.method == Method.SPARSE_LASSO.value:
            pilot = fit
    return {'run': payload['run'], 'angles': angles, 'errors': errors}


def rank_run(payload):
    design = SimDesign.from_dict(payload['design'])
    sample = generate_sample(design, [int(s) for s in payload['stream']],
                             float(payload.get('noise_scale', 1.0)))
    config = PenaltyConfig(**payload['config']) if payload.get('config') else None
    try:
        estimate = select_rank(build_design(sample, int(payload.get('p', STUDY_P))), config)
    except (DataError, NumericalError, np.linalg.LinAlgError) as exc:
        return {'run': payload['run'], 'r_hat': None, 'error': str(exc)}
    return {'run': payload['run'], 'r_hat': estimate.r_hat, 'error': None}


def _payloads(designs, M, seed, extra):
    for d, design in enumerate(designs):
        yield d, [
            dict(extra, design=design.as_dict(), run=m, stream=[int(seed), d, m])
            for m in range(M)
        ]


def _check_runs(M):
    if int(M) < 2:
        raise DataError('A Monte Carlo study needs M >= 2, got {}'.format(M))
    return int(M)


def run_angle_study(designs, methods=tuple(Method), M=100, seed=0, config=None,
                    noise_scale=1.0):
    """
    Average subspace angle to the true beta per design and method over M runs,
    with paired two-sided t-tests of each sparse method against Johansen.
    """
    from .tasks import angle_run as angle_task

    M = _check_runs(M)
    methods = [Method.parse(m).value for m in methods]
    extra = {'methods': methods, 'p': STUDY_P, 'noise_scale': float(noise_scale),
             'config': config.as_dict() if config is not None else None}
    rows = []
    for d, payloads in _payloads(designs, M, seed, extra):
        design = designs[d]
        results = dispatch.map_tasks(angle_task, payloads)
        per_method = {m: [r['angles'][m] for r in results] for m in methods}
        for method in methods:
            valid = [v for v in per_method[method] if v is not None]
            failures = M - len(valid)
            if failures:
                logger.warning('%s/%s a=%.1f: %d of %d fits failed',
                               design.name, method, design.a, failures, M)
            mean, stderr = summarize_angles(valid)
            rows.append(StudyRow(design.name, method, design.a, 'mean_angle', mean, stderr))
            rows.append(StudyRow(design.name, method, design.a, 'failures', float(failures)))
        if Method.JOHANSEN.value in methods:
            reference = per_method[Method.JOHANSEN.value]
            for method in methods:
                if method == Method.JOHANSEN.value:
                    continue
                pairs = [(s, j) for s, j in zip(per_method[method], reference)
                         if s is not None and j is not None]
                p_value = paired_t_pvalue([s for s, _ in pairs], [j for _, j in pairs])
                rows.append(StudyRow(design.name, method, design.a, 'paired_t_pvalue', p_value))
        logger.info('Angle study: %s a=%.1f done', design.name, design.a)
    return StudyReport('angle', M, int(seed), tuple(rows))


def run_rank_study(designs, M=100, seed=0, config=None, noise_scale=1.0):
    """Frequencies of the RSC rank over M runs per design (metrics freq_r0 .. freq_rq)."""
    from .tasks import rank_run as rank_task

    M = _check_runs(M)
    extra = {'p': STUDY_P, 'noise_scale': float(noise_scale),
             'config': config.as_dict() if config is not None else None}
    rows = []
    for d, payloads in _payloads(designs, M, seed, extra):
        design = designs[d]
        results = dispatch.map_tasks(rank_task, payloads)
        ranks = [r['r_hat'] for r in results if r['r_hat'] is not None]
        failures = M - len(ranks)
        counts = np.bincount(np.asarray(ranks, dtype=int), minlength=design.q + 1)
        total = max(len(ranks), 1)
        for k in range(design.q + 1):
            rows.append(StudyRow(design.name, 'rsc', design.a, 'freq_r{}'.format(k),
                                 float(counts[k]) / total))
        rows.append(StudyRow(design.name, 'rsc', design.a, 'failures', float(failures)))
        logger.info('Rank study: %s a=%.1f recovered r=%d in %.1f%% of runs', design.name,
                    design.a, design.r_true, 100.0 * counts[design.r_true] / total)
    return StudyReport('rank', M, int(seed), tuple(rows))
