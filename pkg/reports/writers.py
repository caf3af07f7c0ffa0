"""
Report writers. Files are written to a temporary sibling and renamed into
place, so a report path never holds a partial file.
"""
import io
import logging
import os
import tempfile

import pandas as pd
from rest_framework.renderers import JSONRenderer

from core.exceptions import DataError

logger = logging.getLogger(__name__)


class ReportRenderer(JSONRenderer):
    # NaN is mapped to None by the serializers; anything left over must fail loudly
    strict = True


def render_json(payload):
    return ReportRenderer().render(payload, renderer_context={'indent': 2}) + b'\n'


def render_csv(records, columns=None):
    frame = pd.DataFrame.from_records(records, columns=columns)
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator='\n')
    return buffer.getvalue().encode('utf-8')


def atomic_write(path, data):
    """Write bytes to ``path`` via a temp file in the same directory and os.replace."""
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        raise DataError('Output directory does not exist: {}'.format(directory))
    handle, tmp_path = tempfile.mkstemp(dir=directory, prefix='.sparsecoint-', suffix='.tmp')
    try:
        with os.fdopen(handle, 'wb') as stream:
            stream.write(data)
            stream.flush()
            os.fsync(stream.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    logger.info('Wrote %d bytes to %s', len(data), path)


def write_report(data, output_path=None, stdout=None):
    """Write rendered bytes to output_path, or to stdout when no path is given."""
    if output_path:
        atomic_write(output_path, data)
    elif stdout is not None:
        stdout.write(data.decode('utf-8'), ending='')
