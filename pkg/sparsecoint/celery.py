"""
Celery configuration for Monte Carlo runs and bootstrap replicates
"""
import os
from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'sparsecoint.settings')

app = Celery('sparsecoint')
app.config_from_object('django.conf:settings', namespace='CELERY')
app.autodiscover_tasks()
