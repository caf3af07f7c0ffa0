"""Fan-out of independent Monte Carlo runs and bootstrap replicates over Celery."""
import logging

from celery import group

logger = logging.getLogger(__name__)


def _always_eager():
    from django.conf import settings
    if not settings.configured:
        return True
    return getattr(settings, 'CELERY_TASK_ALWAYS_EAGER', True)


def map_tasks(task, payloads):
    """
    Run ``task`` once per payload and return the results in payload order.

    In eager mode (the default) every call runs in this process; otherwise a
    Celery group is sent to the configured broker and collected.
    """
    payloads = list(payloads)
    if not payloads:
        return []
    if _always_eager():
        return [task.apply(args=(payload,)).get() for payload in payloads]
    logger.info('Dispatching %d %s tasks to workers', len(payloads), task.name)
    result = group(task.s(payload) for payload in payloads).apply_async()
    return result.get()
