"""
Rolling-window one-step-ahead forecast comparison.
Run: python manage.py forecast --input ip.csv --window 48 --methods sparse-lasso johansen
"""
from ._base import WorkflowCommand


class Command(WorkflowCommand):
    help = 'Compare rolling one-step-ahead forecasts (MAFE and Diebold-Mariano p-values)'
    workflow = 'forecast'

    def add_workflow_arguments(self, parser):
        self.add_input_arguments(parser)
        parser.add_argument('--window', type=int, default=None, help='Rolling window length')
        parser.add_argument('--rank', default=None,
                            help="Cointegration rank, or 'auto' (RSC on the full sample)")
        parser.add_argument('--methods', nargs='+', default=None,
                            help='Estimators to compare (default: sparse-lasso johansen)')
        parser.add_argument('--reselect-rank', dest='reselect_rank',
                            action='store_true', default=None,
                            help='Re-select the rank in every window')
        self.add_penalty_arguments(parser)
