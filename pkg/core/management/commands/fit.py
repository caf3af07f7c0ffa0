"""
Fit a VECM and report alpha, beta (with its sparsity pattern), Gamma, Omega.
Run: python manage.py fit --input rates.csv --rank 1 --method sparse-lasso
"""
from ._base import WorkflowCommand


class Command(WorkflowCommand):
    help = 'Estimate the cointegrating vectors of a VECM (Johansen or sparse penalized ML)'
    workflow = 'fit'

    def add_workflow_arguments(self, parser):
        self.add_input_arguments(parser)
        parser.add_argument('--rank', default=None,
                            help="Cointegration rank, or 'auto' for the RSC rank (default)")
        parser.add_argument('--method', default=None,
                            help='johansen, sparse-lasso (default) or sparse-adaptive-lasso')
        parser.add_argument('--sample-size', dest='sample_size', choices=['n', 'T'],
                            default=None, help="Denominator of the rank threshold's S2")
        self.add_penalty_arguments(parser)
