"""
Shared plumbing of the workflow commands: common flags, RunConfig
resolution, the BLAS thread limit and exit codes.
"""
import argparse

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from threadpoolctl import threadpool_limits

from core.exceptions import DataError
from reports import services


class WorkflowCommand(BaseCommand):
    # RunConfig command name; subclasses set it
    workflow = None

    def add_arguments(self, parser):
        parser.add_argument('--config', dest='config_file', default=None,
                            help='JSON file of settings; flags given here take precedence')
        parser.add_argument('--output', dest='output_path', default=None,
                            help='Report path (default: standard output)')
        parser.add_argument('--format', dest='output_format', choices=['json', 'csv'],
                            default=None, help='Report format (default: json)')
        parser.add_argument('--seed', default=None,
                            help="Master seed, or 'random' to draw one (recorded in the report)")
        self.add_workflow_arguments(parser)

    def add_workflow_arguments(self, parser):
        pass

    # -- reusable flag groups ------------------------------------------------

    def add_input_arguments(self, parser):
        parser.add_argument('--input', dest='input_path', default=None,
                            help='CSV file: header row, optional date column, numeric series')
        parser.add_argument('--p', type=int, default=None, help='Lag order of the VAR in levels')
        parser.add_argument('--intercept', action=argparse.BooleanOptionalAction, default=None,
                            help='Include a constant in the short-run terms')

    def add_penalty_arguments(self, parser):
        parser.add_argument('--lambda1', type=float, nargs='+', default=None,
                            help='Lasso penalty on beta, one value or one per vector '
                                 '(default: cross-validated)')
        parser.add_argument('--lambda2', type=float, default=None,
                            help='Ridge penalty on Gamma (default: cross-validated)')
        parser.add_argument('--lambda3', type=float, default=None,
                            help='Graphical lasso penalty on Omega (default: BIC)')
        parser.add_argument('--penalize-intercept', dest='penalize_intercept',
                            action=argparse.BooleanOptionalAction, default=None)
        parser.add_argument('--tol-outer', dest='tol_outer', type=float, default=None)
        parser.add_argument('--max-outer-iter', dest='max_outer_iter', type=int, default=None)
        parser.add_argument('--grid-size', dest='grid_size', type=int, default=None,
                            help='Points per tuning grid')

    # ------------------------------------------------------------------------

    def handle(self, *args, **options):
        config_file = options.pop('config_file', None)
        flags = {
            key: value for key, value in options.items()
            if key not in self._django_options()
        }
        try:
            config = services.build_run_config(self.workflow, flags, config_file)
        except DataError as exc:
            self.stderr.write(self.style.ERROR(str(exc)))
            raise CommandError(str(exc), returncode=services.EXIT_DATA_ERROR)

        with threadpool_limits(limits=settings.SPARSECOINT_THREADS):
            code = services.run(config, stdout=self.stdout)
        if code != services.EXIT_OK:
            raise CommandError('{} failed (exit code {})'.format(self.workflow, code),
                               returncode=code)
        if config.output_path:
            self.stdout.write(self.style.SUCCESS(
                'Wrote {} report to {}'.format(config.output_format, config.output_path)))

    @staticmethod
    def _django_options():
        return {
            'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color',
            'force_color', 'skip_checks', 'stdout', 'stderr',
        }
