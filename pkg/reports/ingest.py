"""
CSV ingestion: header row, optional leading date column (ISO-8601 or
YYYY:MM), remaining columns numeric. Errors name the offending line and column.
"""
import csv
import logging
import math
import re

import pandas as pd

from core.exceptions import DataError, ParseError
from core.vecm import TimeSeriesMatrix

logger = logging.getLogger(__name__)

_COLON_MONTH = re.compile(r'^(\d{4}):(\d{1,2})$')
_DATE_LIKE = re.compile(r'^\d{4}[-/:]\d{1,2}')


def _parse_date(value):
    """Timestamp for an ISO-8601 or YYYY:MM cell, else None."""
    value = value.strip()
    if not _DATE_LIKE.match(value):
        return None
    match = _COLON_MONTH.match(value)
    if match:
        value = '{}-{:0>2}'.format(match.group(1), match.group(2))
    try:
        return pd.Timestamp(value)
    except (ValueError, TypeError):
        return None


def _is_number(value):
    try:
        float(value)
    except ValueError:
        return False
    return True


def _read_rows(path):
    try:
        with open(path, newline='', encoding='utf-8') as handle:
            rows = list(csv.reader(handle))
    except FileNotFoundError:
        raise DataError('Input file not found: {}'.format(path))
    except UnicodeDecodeError as exc:
        raise DataError('Input file is not valid UTF-8: {} ({})'.format(path, exc))
    except (OSError, csv.Error) as exc:
        raise DataError('Cannot read {}: {}'.format(path, exc))
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    return rows


def parse_csv_with_dates(path):
    """Returns (TimeSeriesMatrix, list of date strings or None)."""
    rows = _read_rows(path)
    if not rows:
        raise ParseError('File is empty', line=1)
    header = [cell.strip() for cell in rows[0]]
    if len(header) < 2:
        raise ParseError('Expected at least 2 columns, found {}'.format(len(header)), line=1)
    body = rows[1:]
    if not body:
        raise ParseError('No data rows after the header', line=2)
    for offset, row in enumerate(body):
        if len(row) != len(header):
            raise ParseError(
                'Ragged row: expected {} fields, found {}'.format(len(header), len(row)),
                line=offset + 2)

    first = [row[0].strip() for row in body]
    has_dates = not _is_number(first[0]) and _parse_date(first[0]) is not None
    dates = None
    if has_dates:
        dates = []
        for offset, cell in enumerate(first):
            if _parse_date(cell) is None:
                raise ParseError('Unrecognised date {!r}'.format(cell), line=offset + 2,
                                 column=header[0])
            dates.append(cell)

    start = 1 if has_dates else 0
    labels = header[start:]
    values = []
    for offset, row in enumerate(body):
        parsed = []
        for label, cell in zip(labels, row[start:]):
            try:
                number = float(cell.strip())
            except ValueError:
                raise ParseError('Non-numeric value {!r}'.format(cell), line=offset + 2,
                                 column=label)
            if not math.isfinite(number):
                raise ParseError('Non-finite value {!r}'.format(cell), line=offset + 2,
                                 column=label)
            parsed.append(number)
        values.append(parsed)
    logger.info('Read %d observations of %d series from %s', len(values), len(labels), path)
    return TimeSeriesMatrix(values, tuple(labels)), dates


def parse_csv(path):
    """Numeric matrix with header labels, rows in file order."""
    series, _ = parse_csv_with_dates(path)
    return series
