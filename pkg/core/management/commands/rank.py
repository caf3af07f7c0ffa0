"""
Select the cointegration rank with the rank selection criterion.
Run: python manage.py rank --input ip.csv --p 1
"""
from ._base import WorkflowCommand


class Command(WorkflowCommand):
    help = 'Select the cointegration rank (rank selection criterion)'
    workflow = 'rank'

    def add_workflow_arguments(self, parser):
        self.add_input_arguments(parser)
        parser.add_argument('--sample-size', dest='sample_size', choices=['n', 'T'],
                            default=None, help="Denominator of S2 (default: n)")
        parser.add_argument('--lambda2', type=float, default=None,
                            help='Ridge penalty on Gamma in the warm-start pass')
        parser.add_argument('--grid-size', dest='grid_size', type=int, default=None)
