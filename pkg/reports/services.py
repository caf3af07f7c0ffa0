"""
Workflow services behind the management commands: resolve a RunConfig,
run one workflow, render its report and map failures to exit codes.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from django.conf import settings

from core.exceptions import DataError, NumericalError
from reports.ingest import parse_csv_with_dates
from reports.serializers import (
    BootstrapResultSerializer,
    CointegrationFitSerializer,
    ForecastReportSerializer,
    RankEstimateSerializer,
    RunConfigSerializer,
    StudyReportSerializer,
    clean_value,
    forecast_table,
)
from reports.writers import render_csv, render_json, write_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_NUMERICAL_ERROR = 2


@dataclass
class WorkflowReport:
    """JSON body of a report plus its tabular (CSV) form."""
    body: dict
    records: List[dict] = field(default_factory=list)
    columns: Optional[List[str]] = None
    summary: str = ''


def _load_config_file(path):
    try:
        with open(path, encoding='utf-8') as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise DataError('Config file not found: {}'.format(path))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError('Cannot read config file {}: {}'.format(path, exc))
    if not isinstance(data, dict):
        raise DataError('Config file {} must hold a JSON object'.format(path))
    return data


def _format_errors(errors):
    parts = []
    for name, messages in errors.items():
        if isinstance(messages, (list, tuple)):
            messages = '; '.join(str(m) for m in messages)
        parts.append('{}: {}'.format(name, messages))
    return ', '.join(parts)


def build_run_config(command, flags=None, config_file=None):
    """
    Resolve a RunConfig: built-in defaults, then the JSON ``config_file``,
    then the command-line ``flags`` (None values are treated as unset).
    """
    data = dict(settings.SPARSECOINT_DEFAULTS)
    data['seed'] = settings.SPARSECOINT_DEFAULT_SEED
    if config_file:
        data.update(_load_config_file(config_file))
    data.update({key: value for key, value in (flags or {}).items() if value is not None})
    data['command'] = command
    serializer = RunConfigSerializer(data=data)
    if not serializer.is_valid():
        raise DataError('Invalid configuration: {}'.format(_format_errors(serializer.errors)))
    return serializer.save()


def _matrix_records(labels, **matrices):
    """One record per series label; column ``<name>_<j>`` for column j of each matrix."""
    records = []
    for i, label in enumerate(labels):
        row = {'series': label}
        for name, matrix in matrices.items():
            matrix = np.atleast_2d(matrix)
            for j in range(matrix.shape[1]):
                row['{}_{}'.format(name, j + 1)] = clean_value(matrix[i, j])
        records.append(row)
    return records


class WorkflowService:
    """The five command-line workflows; each returns a WorkflowReport."""

    @staticmethod
    def _resolve_rank(config, design):
        from core.rank import select_rank

        if config.rank != 'auto':
            return int(config.rank), None
        estimate = select_rank(design, config.penalty_config(), config.sample_size)
        return estimate.r_hat, estimate

    @staticmethod
    def fit(config):
        from core.estimator import fit_by_method
        from core.vecm import build_design

        series, _ = parse_csv_with_dates(config.input_path)
        design = build_design(series, config.p, config.intercept)
        rank, estimate = WorkflowService._resolve_rank(config, design)
        if rank > series.q:
            raise DataError('Rank {} exceeds the number of series {}'.format(rank, series.q))
        fit = fit_by_method(design, rank, config.method, config.penalty_config())
        if not fit.converged:
            logger.warning('%s fit stopped after %d iterations without converging',
                           fit.method, fit.iterations)
        body = dict(CointegrationFitSerializer(fit).data)
        body['labels'] = series.column_labels()
        body['rank_selection'] = (
            dict(RankEstimateSerializer(estimate).data) if estimate is not None else None)
        alpha, beta = fit.identified()
        records = _matrix_records(series.column_labels(), beta=beta, alpha=alpha)
        summary = '{} fit at rank {}: objective {:.6g}, {} iterations{}'.format(
            fit.method, fit.rank, fit.objective, fit.iterations,
            '' if fit.converged else ' (not converged)')
        return WorkflowReport(body, records, summary=summary)

    @staticmethod
    def rank(config):
        from core.rank import select_rank
        from core.vecm import build_design

        series, _ = parse_csv_with_dates(config.input_path)
        design = build_design(series, config.p, config.intercept)
        estimate = select_rank(design, config.penalty_config(), config.sample_size)
        body = dict(RankEstimateSerializer(estimate).data)
        body['labels'] = series.column_labels()
        records = [
            {'index': i + 1, 'eigenvalue': clean_value(value), 'mu': clean_value(estimate.mu),
             'counted': bool(value >= estimate.mu)}
            for i, value in enumerate(estimate.eigenvalues)
        ]
        summary = 'Selected rank {} (mu = {:.6g})'.format(estimate.r_hat, estimate.mu)
        return WorkflowReport(body, records, summary=summary)

    @staticmethod
    def simulate(config):
        from core.estimator import Method
        from core.simulation import (
            design_grid, generate_sample, run_angle_study, run_rank_study)

        designs = design_grid(config.designs, config.a_values)
        if config.study == 'sample':
            design = designs[0]
            if len(designs) > 1:
                logger.info('Exporting one sample of %s at a=%.1f (first of %d designs)',
                            design.name, design.a, len(designs))
            sample = generate_sample(design, config.seed, config.noise_scale)
            labels = sample.column_labels()
            records = [dict(zip(labels, clean_value(row))) for row in sample.values]
            body = {'design': design.as_dict(), 'labels': labels,
                    'values': clean_value(sample.values)}
            return WorkflowReport(body, records, columns=labels,
                                  summary='Generated {} observations of {}'.format(
                                      sample.T, design.name))

        if config.study == 'angle':
            methods = config.methods or [m.value for m in Method]
            report = run_angle_study(designs, methods, config.M, config.seed,
                                     config.penalty_config(), config.noise_scale)
        else:
            report = run_rank_study(designs, config.M, config.seed, config.penalty_config(),
                                    config.noise_scale)
        body = dict(StudyReportSerializer(report).data)
        records = [dict(row) for row in body['rows']]
        columns = ['design', 'method', 'a', 'metric', 'value', 'stderr']
        summary = '{} study: {} designs x M={}'.format(report.study, len(designs), report.M)
        return WorkflowReport(body, records, columns, summary)

    @staticmethod
    def test_zerosum(config):
        from core.inference import bootstrap_zero_sum_test

        series, _ = parse_csv_with_dates(config.input_path)
        result = bootstrap_zero_sum_test(
            series, config.p, method=config.method, B=config.B, eta=config.eta,
            seed=config.seed, config=config.penalty_config(), intercept=config.intercept)
        body = dict(BootstrapResultSerializer(result).data)
        body['labels'] = series.column_labels()
        test_columns = {
            'method': result.method, 'q_stat': clean_value(result.q_stat),
            'p_value': clean_value(result.p_value), 'B': result.B, 'eta': result.eta,
            'reject': result.reject,
        }
        records = [dict(row, **test_columns)
                   for row in _matrix_records(body['labels'], beta=result.beta)]
        summary = 'Zero-sum test: Q = {:.4f}, p = {:.3f} ({})'.format(
            result.q_stat, result.p_value, 'reject' if result.reject else 'do not reject')
        return WorkflowReport(body, records, summary=summary)

    @staticmethod
    def forecast(config):
        from core.estimator import Method
        from core.forecast import compare_forecasts

        series, dates = parse_csv_with_dates(config.input_path)
        methods = config.methods or [Method.SPARSE_LASSO.value, Method.JOHANSEN.value]
        report = compare_forecasts(
            series, config.window, config.p, config.rank, methods, config.penalty_config(),
            config.intercept, config.reselect_rank)
        body = dict(ForecastReportSerializer(report).data)
        body['labels'] = list(report.labels)
        body['target_dates'] = [dates[t] for t in report.targets] if dates else None
        records = forecast_table(report)
        summary = 'Total MAFE: {}'.format(', '.join(
            '{} {:.4f}'.format(m, report.total_mafe(m)) for m in report.methods))
        return WorkflowReport(body, records, summary=summary)


WORKFLOWS = {
    'fit': WorkflowService.fit,
    'rank': WorkflowService.rank,
    'simulate': WorkflowService.simulate,
    'test_zerosum': WorkflowService.test_zerosum,
    'forecast': WorkflowService.forecast,
}


def report_header(config):
    return {
        'schema_version': settings.SPARSECOINT_REPORT_SCHEMA_VERSION,
        'command': config.command,
        'config': config.as_dict(),
    }


def render_report(config, report):
    if config.output_format == 'csv':
        return render_csv(report.records, report.columns)
    return render_json(dict(report_header(config), result=report.body))


def config_sidecar_path(output_path):
    return '{}.config.json'.format(output_path)


def _record_csv_config(config):
    """CSV tables carry no header block; their configuration goes next to them."""
    if config.output_path:
        write_report(render_json(report_header(config)), config_sidecar_path(config.output_path))
    else:
        logger.info('Run configuration: %s', render_json(report_header(config)).decode('utf-8'))


def execute(config, stdout=None):
    """Run the workflow and write its report; raises on failure."""
    logger.info('Running %s with seed %d', config.command, config.seed)
    report = WORKFLOWS[config.command](config)
    write_report(render_report(config, report), config.output_path, stdout)
    if config.output_format == 'csv':
        _record_csv_config(config)
    if report.summary:
        logger.info(report.summary)
    return report


def run(config, stdout=None):
    """Run one workflow; returns 0 on success, 1 on a data error, 2 on numerical failure."""
    try:
        execute(config, stdout)
    except DataError as exc:
        logger.error('%s failed: %s', config.command, exc)
        return EXIT_DATA_ERROR
    except (NumericalError, np.linalg.LinAlgError) as exc:
        logger.error('%s failed with a numerical error: %s', config.command, exc)
        return EXIT_NUMERICAL_ERROR
    return EXIT_OK
