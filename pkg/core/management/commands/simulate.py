"""
Monte Carlo studies on the catalog designs.
Run: python manage.py simulate --study angle --designs low --M 100 --seed 7 --format csv
"""
from ._base import WorkflowCommand


class Command(WorkflowCommand):
    help = 'Run the subspace-angle or rank-recovery Monte Carlo study, or export one sample'
    workflow = 'simulate'

    def add_workflow_arguments(self, parser):
        parser.add_argument('--study', choices=['angle', 'rank', 'sample'], default=None)
        parser.add_argument('--designs', nargs='+', default=None,
                            help="Design names or groups 'low', 'high', 'all' (default)")
        parser.add_argument('--a-values', dest='a_values', type=float, nargs='+', default=None,
                            help='Adjustment scalars (default: -0.2 -0.4 -0.6 -0.8)')
        parser.add_argument('--methods', nargs='+', default=None,
                            help='Estimators compared in the angle study (default: all three)')
        parser.add_argument('--M', type=int, default=None, help='Monte Carlo runs per design')
        parser.add_argument('--noise-scale', dest='noise_scale', type=float, default=None)
        self.add_penalty_arguments(parser)
