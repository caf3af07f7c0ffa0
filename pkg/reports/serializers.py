import math
import os

import numpy as np
from rest_framework import serializers

from core.estimator import Method
from core.simulation import A_VALUES, DESIGN_GROUPS
from reports.config import COMMANDS, INPUT_COMMANDS, RunConfig


def clean_value(value):
    """numpy values to JSON-safe Python; non-finite floats become None."""
    if isinstance(value, np.ndarray):
        return [clean_value(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [clean_value(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


class MatrixField(serializers.Field):
    """Read-only numpy array rendered as nested lists."""

    def __init__(self, **kwargs):
        kwargs['read_only'] = True
        super().__init__(**kwargs)

    def to_representation(self, value):
        if value is None:
            return None
        return clean_value(np.asarray(value))


class FiniteFloatField(serializers.FloatField):
    def to_representation(self, value):
        return clean_value(float(value)) if value is not None else None


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

class RunConfigSerializer(serializers.Serializer):
    command = serializers.ChoiceField(choices=COMMANDS)
    input_path = serializers.CharField(required=False, allow_null=True, allow_blank=True)
    output_path = serializers.CharField(required=False, allow_null=True, allow_blank=True)
    output_format = serializers.ChoiceField(choices=['json', 'csv'], default='json')
    p = serializers.IntegerField(min_value=1, default=2)
    rank = serializers.CharField(default='auto')
    method = serializers.CharField(default=Method.SPARSE_LASSO.value)
    methods = serializers.ListField(child=serializers.CharField(), required=False,
                                    allow_null=True)
    intercept = serializers.BooleanField(allow_null=True, default=None)
    lambda1 = serializers.ListField(child=serializers.FloatField(min_value=0.0),
                                    required=False, allow_null=True, allow_empty=False)
    lambda2 = serializers.FloatField(min_value=0.0, required=False, allow_null=True)
    lambda3 = serializers.FloatField(min_value=0.0, required=False, allow_null=True)
    penalize_intercept = serializers.BooleanField(default=True)
    tol_outer = serializers.FloatField(min_value=1e-12, default=1e-3)
    max_outer_iter = serializers.IntegerField(min_value=1, default=100)
    grid_size = serializers.IntegerField(min_value=1, default=20)
    sample_size = serializers.ChoiceField(choices=['n', 'T'], default='n')
    B = serializers.IntegerField(min_value=2, default=999)
    eta = serializers.FloatField(default=0.05)
    window = serializers.IntegerField(min_value=3, default=48)
    reselect_rank = serializers.BooleanField(default=False)
    study = serializers.ChoiceField(choices=['angle', 'rank', 'sample'], default='angle')
    designs = serializers.ListField(child=serializers.CharField(), default=['all'])
    a_values = serializers.ListField(child=serializers.FloatField(max_value=-1e-12),
                                     default=list(A_VALUES))
    M = serializers.IntegerField(min_value=2, default=100)
    noise_scale = serializers.FloatField(min_value=0.0, default=1.0)
    seed = serializers.CharField()

    def validate_rank(self, value):
        value = str(value).strip().lower()
        if value == 'auto':
            return value
        try:
            rank = int(value)
        except ValueError:
            raise serializers.ValidationError("Rank must be a non-negative integer or 'auto'")
        if rank < 0:
            raise serializers.ValidationError('Rank must be >= 0')
        return rank

    def validate_method(self, value):
        try:
            return Method.parse(value).value
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))

    def validate_methods(self, value):
        if value is None:
            return None
        return [self.validate_method(item) for item in value]

    def validate_designs(self, value):
        known = set(DESIGN_GROUPS) | set(DESIGN_GROUPS['all'])
        unknown = [name for name in value if name not in known]
        if unknown:
            raise serializers.ValidationError('Unknown design(s): {}'.format(', '.join(unknown)))
        return value

    def validate_eta(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError('eta must lie in (0, 1)')
        return value

    def validate_seed(self, value):
        value = str(value).strip().lower()
        if value == 'random':
            # the drawn seed is recorded in the report so the run can be repeated
            return int(np.random.SeedSequence().entropy % (2 ** 32))
        try:
            seed = int(value)
        except ValueError:
            raise serializers.ValidationError("Seed must be a non-negative integer or 'random'")
        if seed < 0:
            raise serializers.ValidationError('Seed must be >= 0')
        return seed

    def validate(self, attrs):
        command = attrs['command']
        path = attrs.get('input_path')
        if command in INPUT_COMMANDS:
            if not path:
                raise serializers.ValidationError({'input_path': 'This command needs --input'})
            if not os.path.isfile(path):
                raise serializers.ValidationError(
                    {'input_path': 'File does not exist: {}'.format(path)})
        if attrs.get('intercept') is None:
            attrs['intercept'] = command == 'forecast'
        return attrs

    def create(self, validated_data):
        return RunConfig(**validated_data)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

class CointegrationFitSerializer(serializers.Serializer):
    method = serializers.CharField()
    rank = serializers.IntegerField()
    p = serializers.IntegerField()
    intercept = serializers.BooleanField()
    converged = serializers.BooleanField()
    iterations = serializers.IntegerField()
    objective = FiniteFloatField()
    degenerate = serializers.BooleanField()
    inner_converged = serializers.BooleanField()
    alpha = serializers.SerializerMethodField()
    beta = serializers.SerializerMethodField()
    beta_support = serializers.SerializerMethodField()
    gamma = MatrixField()
    omega = MatrixField()
    pi = MatrixField()
    objective_trace = MatrixField()
    eigenvalues = MatrixField()
    lambdas = serializers.SerializerMethodField()

    def get_alpha(self, obj):
        return clean_value(obj.identified()[0])

    def get_beta(self, obj):
        return clean_value(obj.identified()[1])

    def get_beta_support(self, obj):
        return clean_value(np.abs(obj.beta) > 1e-12)

    def get_lambdas(self, obj):
        if obj.config is None:
            return None
        return {
            'lambda1': clean_value(obj.config.lambda1) if obj.config.lambda1 is not None else None,
            'lambda2': clean_value(obj.config.lambda2),
            'lambda3': clean_value(obj.config.lambda3),
        }


class RankEstimateSerializer(serializers.Serializer):
    r_hat = serializers.IntegerField()
    eigenvalues = MatrixField()
    mu = FiniteFloatField()
    s2 = FiniteFloatField()
    l = serializers.IntegerField()
    iterations = serializers.IntegerField()
    trajectory = serializers.ListField(child=serializers.IntegerField())
    cycled = serializers.BooleanField()
    sample_size = serializers.CharField()
    df_short_run = FiniteFloatField()


class BootstrapResultSerializer(serializers.Serializer):
    method = serializers.CharField()
    q_stat = FiniteFloatField()
    p_value = FiniteFloatField()
    B = serializers.IntegerField()
    eta = FiniteFloatField()
    reject = serializers.BooleanField()
    theta_hat = MatrixField()
    beta = MatrixField()
    beta_support = MatrixField()
    regularized = serializers.BooleanField()
    retries = serializers.IntegerField()
    seed = serializers.IntegerField()
    q_boot = MatrixField()


class StudyRowSerializer(serializers.Serializer):
    design = serializers.CharField()
    method = serializers.CharField()
    a = FiniteFloatField()
    metric = serializers.CharField()
    value = FiniteFloatField()
    stderr = FiniteFloatField(allow_null=True)


class StudyReportSerializer(serializers.Serializer):
    study = serializers.CharField()
    M = serializers.IntegerField()
    seed = serializers.IntegerField()
    rows = StudyRowSerializer(many=True)


class ForecastReportSerializer(serializers.Serializer):
    window = serializers.IntegerField()
    p = serializers.IntegerField()
    rank = serializers.IntegerField()
    intercept = serializers.BooleanField()
    methods = serializers.ListField(child=serializers.CharField())
    reference = serializers.CharField(allow_null=True)
    fallbacks = serializers.DictField(child=serializers.IntegerField())
    table = serializers.SerializerMethodField()
    dm_stats = serializers.SerializerMethodField()
    targets = MatrixField()
    forecasts = serializers.SerializerMethodField()

    def get_table(self, obj):
        return forecast_table(obj)

    def get_dm_stats(self, obj):
        return {method: clean_value(values) for method, values in obj.dm_stats.items()}

    def get_forecasts(self, obj):
        return {method: clean_value(values) for method, values in obj.forecasts.items()}


def forecast_table(report):
    """Per-series MAFE and Diebold-Mariano p-values plus a 'Total' row."""
    rows = []
    for i, label in enumerate(report.labels):
        row = {'series': label}
        for method in report.methods:
            row['mafe_{}'.format(method)] = clean_value(report.mafe(method)[i])
        for method, pvalues in report.dm_pvalues.items():
            row['dm_pvalue_{}'.format(method)] = clean_value(pvalues[i])
        rows.append(row)
    total = {'series': 'Total'}
    for method in report.methods:
        total['mafe_{}'.format(method)] = clean_value(report.total_mafe(method))
    for method in report.dm_pvalues:
        total['dm_pvalue_{}'.format(method)] = None
    rows.append(total)
    return rows
