"""
Celery tasks for the embarrassingly parallel workloads. Payloads and results
are plain JSON-compatible dicts so the tasks can run on remote workers.
"""
from celery import shared_task

from . import inference, simulation


@shared_task(name='core.tasks.angle_run')
def angle_run(payload):
    """One Monte Carlo sample fitted by every requested method."""
    return simulation.angle_run(payload)


@shared_task(name='core.tasks.rank_run')
def rank_run(payload):
    """RSC rank of one Monte Carlo sample."""
    return simulation.rank_run(payload)


@shared_task(name='core.tasks.bootstrap_replicate')
def bootstrap_replicate(payload):
    """Zero-sum statistics of one bootstrap sample."""
    return inference.bootstrap_replicate(payload)
