"""
Bootstrap test that every cointegrating vector sums to zero (rank q - 1).
Run: python manage.py test_zerosum --input rates.csv --method johansen --B 999
"""
from ._base import WorkflowCommand


class Command(WorkflowCommand):
    help = 'Residual-bootstrap test of the zero-sum restriction on beta'
    workflow = 'test_zerosum'

    def add_workflow_arguments(self, parser):
        self.add_input_arguments(parser)
        parser.add_argument('--method', default=None,
                            help='johansen, sparse-lasso (default) or sparse-adaptive-lasso')
        parser.add_argument('--B', type=int, default=None, help='Bootstrap replicates')
        parser.add_argument('--eta', type=float, default=None, help='Significance level')
        self.add_penalty_arguments(parser)
