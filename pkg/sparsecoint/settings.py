"""
Django settings for the sparsecoint project.

There is no web server and no database: Django provides app loading,
logging configuration, management commands and the test runner.
"""

from decouple import config

# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'rest_framework',
    'core',
    'reports',
]

USE_I18N = False

USE_TZ = True

TIME_ZONE = 'UTC'

# REST Framework is used for its serializers and JSON renderer only; with no
# authentication classes and no anonymous user class it runs without contrib.auth.
REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
    'COERCE_DECIMAL_TO_STRING': False,
}

# Celery Configuration (Monte Carlo runs and bootstrap replicates).
# Eager mode runs every task in process; point the broker at Redis and set
# CELERY_TASK_ALWAYS_EAGER=False to fan out to workers.
CELERY_BROKER_URL = config(
    'CELERY_BROKER_URL', default='redis://localhost:6379/0')
CELERY_RESULT_BACKEND = config(
    'CELERY_RESULT_BACKEND', default='redis://localhost:6379/0')
CELERY_TASK_ALWAYS_EAGER = config(
    'CELERY_TASK_ALWAYS_EAGER', default=True, cast=bool)
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_ACCEPT_CONTENT = ['json']

# Numerical workflow settings (set these in .env file)
# Thread count for BLAS pools; the only concurrency knob exposed to users.
SPARSECOINT_THREADS = config('SPARSECOINT_THREADS', default=1, cast=int)
SPARSECOINT_DEFAULT_SEED = config(
    'SPARSECOINT_DEFAULT_SEED', default=20140301, cast=int)
SPARSECOINT_LOG_LEVEL = config(
    'SPARSECOINT_LOG_LEVEL', default='INFO').strip().upper()
SPARSECOINT_REPORT_SCHEMA_VERSION = 1

# Defaults for the command-line workflows; flags and --config files override.
SPARSECOINT_DEFAULTS = {
    'p': 2,
    'rank': 'auto',
    'method': 'sparse_lasso',
    'B': 999,
    'eta': 0.05,
    'window': 48,
    'M': 100,
    'output_format': 'json',
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'stderr': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'core': {
            'handlers': ['stderr'],
            'level': SPARSECOINT_LOG_LEVEL,
        },
        'reports': {
            'handlers': ['stderr'],
            'level': SPARSECOINT_LOG_LEVEL,
        },
    },
}
