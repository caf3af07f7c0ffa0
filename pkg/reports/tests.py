"""
Tests for CSV ingestion, run configuration, report writers and the
workflow commands.
Run: python manage.py test reports
"""
import json
import os
import tempfile
from io import StringIO
from unittest.mock import Mock, patch

import numpy as np
import pandas as pd
from django.apps import apps
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from core.exceptions import DataError, NumericalError, ParseError
from core.simulation import design_catalog, generate_sample
from reports import services
from reports.ingest import parse_csv, parse_csv_with_dates
from reports.serializers import clean_value
from reports.writers import atomic_write, render_csv, render_json

FIXED_PENALTIES = ['--lambda1', '0.01', '--lambda2', '0.01', '--lambda3', '0.01']


class TempDirMixin:
    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.tmp = self._tmp.name

    def path(self, name):
        return os.path.join(self.tmp, name)

    def write_text(self, name, text):
        path = self.path(name)
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
        return path

    def write_series(self, name, values, labels=None):
        values = np.asarray(values)
        labels = labels or ['y{}'.format(j + 1) for j in range(values.shape[1])]
        path = self.path(name)
        pd.DataFrame(values, columns=labels).to_csv(path, index=False)
        return path


class IngestTest(TempDirMixin, SimpleTestCase):
    """Test CSV parsing."""

    def test_header_and_values(self):
        series = parse_csv(self.write_text('a.csv', 'a,b\n1,2\n3,4\n'))
        np.testing.assert_array_equal(series.values, [[1.0, 2.0], [3.0, 4.0]])
        self.assertEqual(series.column_labels(), ['a', 'b'])

    def test_iso_date_column_is_dropped(self):
        series, dates = parse_csv_with_dates(
            self.write_text('d.csv', 'date,x\n2020-01-01,5\n2020-02-01,6\n'))
        self.assertEqual(series.values.shape, (2, 1))
        self.assertEqual(series.column_labels(), ['x'])
        self.assertEqual(dates, ['2020-01-01', '2020-02-01'])

    def test_year_colon_month_dates(self):
        series, dates = parse_csv_with_dates(
            self.write_text('m.csv', 'month,r1,r2\n1990:1,5.1,5.3\n1990:2,5.2,5.4\n'))
        self.assertEqual(series.values.shape, (2, 2))
        self.assertEqual(dates[1], '1990:2')

    def test_missing_value_names_line_and_column(self):
        with self.assertRaises(ParseError) as ctx:
            parse_csv(self.write_text('na.csv', 'a,b\n1,NA\n'))
        self.assertEqual(ctx.exception.line, 2)
        self.assertEqual(ctx.exception.column, 'b')

    def test_ragged_row(self):
        with self.assertRaises(ParseError) as ctx:
            parse_csv(self.write_text('r.csv', 'a,b\n1,2\n3\n'))
        self.assertEqual(ctx.exception.line, 3)

    def test_single_column(self):
        with self.assertRaises(ParseError):
            parse_csv(self.write_text('s.csv', 'a\n1\n2\n'))

    def test_header_only(self):
        with self.assertRaises(ParseError):
            parse_csv(self.write_text('h.csv', 'a,b\n'))

    def test_missing_file(self):
        with self.assertRaises(DataError):
            parse_csv(self.path('absent.csv'))

    def test_trailing_blank_lines_ignored(self):
        series = parse_csv(self.write_text('t.csv', 'a,b\n1,2\n\n\n'))
        self.assertEqual(series.T, 1)


class RunConfigTest(TempDirMixin, SimpleTestCase):
    """Test default, file and flag precedence."""

    def test_defaults(self):
        config = services.build_run_config('simulate')
        self.assertEqual(config.seed, 20140301)
        self.assertEqual(config.M, 100)
        self.assertEqual(config.output_format, 'json')
        self.assertFalse(config.intercept)

    @override_settings(SPARSECOINT_DEFAULT_SEED=7, SPARSECOINT_DEFAULTS={'M': 3})
    def test_defaults_come_from_settings(self):
        config = services.build_run_config('simulate')
        self.assertEqual((config.seed, config.M), (7, 3))

    def test_flags_override_file(self):
        path = self.write_text('c.json', json.dumps({'M': 7, 'B': 299, 'study': 'rank'}))
        config = services.build_run_config('simulate', {'M': 9, 'study': None}, path)
        self.assertEqual((config.M, config.B, config.study), (9, 299, 'rank'))

    def test_random_seed_is_drawn(self):
        config = services.build_run_config('simulate', {'seed': 'random'})
        self.assertIsInstance(config.seed, int)
        self.assertGreaterEqual(config.seed, 0)

    def test_unknown_method(self):
        with self.assertRaises(DataError):
            services.build_run_config('simulate', {'methods': ['ridge']})

    def test_input_required(self):
        with self.assertRaises(DataError):
            services.build_run_config('fit')
        with self.assertRaises(DataError):
            services.build_run_config('fit', {'input_path': self.path('absent.csv')})

    def test_forecast_defaults_to_intercept(self):
        path = self.write_text('a.csv', 'a,b\n1,2\n3,4\n')
        self.assertTrue(services.build_run_config('forecast', {'input_path': path}).intercept)
        self.assertFalse(services.build_run_config('fit', {'input_path': path}).intercept)

    def test_rank_parsing(self):
        path = self.write_text('a.csv', 'a,b\n1,2\n3,4\n')
        self.assertEqual(services.build_run_config('fit', {'input_path': path,
                                                           'rank': '1'}).rank, 1)
        with self.assertRaises(DataError):
            services.build_run_config('fit', {'input_path': path, 'rank': '-1'})

    def test_bad_config_file(self):
        path = self.write_text('bad.json', '[1, 2]')
        with self.assertRaises(DataError):
            services.build_run_config('simulate', config_file=path)


class SettingsTest(SimpleTestCase):
    def test_runs_without_auth_or_secret_key(self):
        self.assertFalse(apps.is_installed('django.contrib.auth'))
        with self.assertRaises(ImproperlyConfigured):
            settings.SECRET_KEY
        self.assertEqual(render_json({'ok': True}), b'{\n  "ok": true\n}\n')


class WriterTest(TempDirMixin, SimpleTestCase):
    """Test report rendering and atomic writes."""

    def test_atomic_write_leaves_only_target(self):
        target = self.path('report.json')
        atomic_write(target, b'{}\n')
        atomic_write(target, b'{"a": 1}\n')
        self.assertEqual(os.listdir(self.tmp), ['report.json'])
        with open(target, 'rb') as handle:
            self.assertEqual(handle.read(), b'{"a": 1}\n')

    def test_missing_directory(self):
        with self.assertRaises(DataError):
            atomic_write(self.path('nowhere/report.json'), b'{}')

    def test_nan_is_rejected(self):
        with self.assertRaises(ValueError):
            render_json({'value': float('nan')})

    def test_clean_value_maps_non_finite(self):
        self.assertEqual(clean_value(np.array([1.0, np.nan, np.inf])), [1.0, None, None])
        self.assertIsNone(clean_value(np.float64('nan')))
        self.assertEqual(clean_value(np.int64(3)), 3)

    def test_json_is_indented(self):
        self.assertEqual(render_json({'a': 1}), b'{\n  "a": 1\n}\n')

    def test_csv_columns(self):
        data = render_csv([{'x': 1, 'y': 2}], columns=['y', 'x'])
        self.assertEqual(data, b'y,x\n2,1\n')


class CommandTest(TempDirMixin, SimpleTestCase):
    """Test the workflow commands end to end."""

    def setUp(self):
        super().setUp()
        design = {d.name: d for d in design_catalog(-0.8)}['low_sparse_r1']
        self.sample = self.write_series('sample.csv', generate_sample(design, 3).values)

    def call(self, *args):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO())
        return out.getvalue()

    def test_fit_report(self):
        target = self.path('fit.json')
        self.call('fit', '--input', self.sample, '--rank', '1', '--output', target,
                  *FIXED_PENALTIES)
        with open(target, encoding='utf-8') as handle:
            report = json.load(handle)
        self.assertEqual(report['schema_version'], 1)
        self.assertEqual(report['command'], 'fit')
        self.assertEqual(report['config']['seed'], 20140301)
        self.assertEqual(report['config']['lambda1'], [0.01])
        result = report['result']
        self.assertEqual(result['rank'], 1)
        self.assertEqual(len(result['beta']), 4)
        self.assertAlmostEqual(result['beta'][0][0], 1.0)
        self.assertEqual(result['labels'], ['y1', 'y2', 'y3', 'y4'])
        self.assertIsNone(result['rank_selection'])

    def test_fit_csv_to_stdout(self):
        out = self.call('fit', '--input', self.sample, '--rank', '1', '--method', 'johansen',
                        '--format', 'csv')
        lines = out.splitlines()
        self.assertEqual(lines[0], 'series,beta_1,alpha_1')
        self.assertEqual(len(lines), 5)

    def test_rank_report(self):
        out = self.call('rank', '--input', self.sample)
        result = json.loads(out)['result']
        self.assertEqual(len(result['eigenvalues']), 4)
        self.assertIn(result['r_hat'], range(5))

    def test_simulate_csv_header(self):
        target = self.path('study.csv')
        self.call('simulate', '--study', 'rank', '--designs', 'low_sparse_r1',
                  '--a-values', '-0.8', '--M', '2', '--format', 'csv', '--output', target,
                  *FIXED_PENALTIES)
        with open(target, encoding='utf-8') as handle:
            header = handle.readline().strip()
        self.assertEqual(header, 'design,method,a,metric,value,stderr')

    def test_sample_export_is_reproducible(self):
        first, second = self.path('one.csv'), self.path('two.csv')
        for target in (first, second):
            self.call('simulate', '--study', 'sample', '--designs', 'high_sparse_r1',
                      '--seed', '7', '--format', 'csv', '--output', target)
        with open(first, 'rb') as a, open(second, 'rb') as b:
            self.assertEqual(a.read(), b.read())
        self.assertEqual(parse_csv(first).values.shape, (50, 11))

    def test_csv_report_has_config_sidecar(self):
        target = self.path('sample.out.csv')
        self.call('simulate', '--study', 'sample', '--designs', 'low_sparse_r1',
                  '--seed', '7', '--format', 'csv', '--output', target)
        with open(services.config_sidecar_path(target), encoding='utf-8') as handle:
            header = json.load(handle)
        self.assertEqual(header['schema_version'], 1)
        self.assertEqual(header['command'], 'simulate')
        self.assertEqual(header['config']['seed'], 7)
        self.assertEqual(header['config']['output_format'], 'csv')
        self.assertNotIn('result', header)
        self.assertEqual(sorted(os.listdir(self.tmp)),
                         ['sample.csv', 'sample.out.csv', 'sample.out.csv.config.json'])

    def test_json_report_has_no_sidecar(self):
        target = self.path('rank.json')
        self.call('rank', '--input', self.sample, '--output', target)
        self.assertFalse(os.path.exists(services.config_sidecar_path(target)))

    def test_csv_to_stdout_logs_its_config(self):
        with self.assertLogs('reports.services', 'INFO') as logs:
            self.call('rank', '--input', self.sample, '--format', 'csv')
        self.assertTrue(any('Run configuration' in line and '"schema_version": 1' in line
                            for line in logs.output))

    def test_forecast_total_row(self):
        walks = np.random.default_rng(4).standard_normal((60, 2)).cumsum(axis=0)
        source = self.write_series('walks.csv', walks, ['r1', 'r2'])
        out = self.call('forecast', '--input', source, '--p', '1', '--window', '50',
                        '--rank', '1', '--methods', 'johansen', '--format', 'csv')
        lines = out.strip().splitlines()
        self.assertEqual(lines[0], 'series,mafe_johansen')
        self.assertTrue(lines[-1].startswith('Total,'))
        self.assertEqual(len(lines), 4)

    def test_zero_sum_report(self):
        with self.assertLogs('core.inference', 'WARNING'):
            out = self.call('test_zerosum', '--input', self.sample, '--method', 'johansen',
                            '--B', '5', '--seed', '2')
        result = json.loads(out)['result']
        self.assertEqual(result['B'], 5)
        self.assertEqual(len(result['q_boot']), 5)
        self.assertTrue(0.0 <= result['p_value'] <= 1.0)
        beta = np.array(result['beta'])
        self.assertEqual(beta.shape, (4, 3))
        np.testing.assert_allclose(beta.sum(axis=0), result['theta_hat'])
        self.assertEqual(np.array(result['beta_support']).tolist(), (beta != 0).tolist())

    def test_zero_sum_csv_lists_beta(self):
        with self.assertLogs('core.inference', 'WARNING'):
            out = self.call('test_zerosum', '--input', self.sample, '--method', 'johansen',
                            '--B', '5', '--seed', '2', '--format', 'csv')
        lines = out.strip().splitlines()
        self.assertEqual(lines[0],
                         'series,beta_1,beta_2,beta_3,method,q_stat,p_value,B,eta,reject')
        self.assertEqual(len(lines), 5)
        self.assertTrue(lines[1].startswith('y1,'))

    def test_forecast_report_has_dm_statistics(self):
        walks = np.random.default_rng(5).standard_normal((60, 2)).cumsum(axis=0)
        source = self.write_series('walks.csv', walks, ['r1', 'r2'])
        out = self.call('forecast', '--input', source, '--p', '1', '--window', '45',
                        '--rank', '1', '--methods', 'sparse_lasso', 'johansen',
                        *FIXED_PENALTIES)
        result = json.loads(out)['result']
        self.assertEqual(list(result['dm_stats']), ['sparse_lasso'])
        self.assertEqual(len(result['dm_stats']['sparse_lasso']), 2)
        self.assertIn('dm_pvalue_sparse_lasso', result['table'][0])

    def test_missing_input_exits_with_data_error(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('fit', '--input', self.path('absent.csv'))
        self.assertEqual(ctx.exception.returncode, services.EXIT_DATA_ERROR)

    def test_malformed_input_exits_with_data_error(self):
        source = self.write_text('bad.csv', 'a,b\n1,x\n2,3\n')
        with self.assertRaises(CommandError) as ctx, \
                self.assertLogs('reports.services', 'ERROR'):
            self.call('rank', '--input', source)
        self.assertEqual(ctx.exception.returncode, services.EXIT_DATA_ERROR)

    def test_numerical_failure_exits_with_code_two(self):
        failing = patch.dict(services.WORKFLOWS,
                             {'rank': Mock(side_effect=NumericalError('singular'))})
        with failing, self.assertRaises(CommandError) as ctx, \
                self.assertLogs('reports.services', 'ERROR'):
            self.call('rank', '--input', self.sample)
        self.assertEqual(ctx.exception.returncode, services.EXIT_NUMERICAL_ERROR)

    def test_failed_run_leaves_no_report(self):
        target = self.path('never.json')
        source = self.write_text('bad.csv', 'a,b\n1,x\n')
        with self.assertRaises(CommandError), self.assertLogs('reports.services', 'ERROR'):
            self.call('fit', '--input', source, '--output', target)
        self.assertFalse(os.path.exists(target))
