"""CSV writers: one header row, time (or the sweep parameter) in the first column."""

import csv
import logging
import os

logger = logging.getLogger(__name__)


def _columns(rows, first):
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    if first in columns:
        columns.remove(first)
        columns.insert(0, first)
    return columns


def write_rows(path, rows, first="t"):
    """Write a list of mappings; missing entries are left empty."""
    columns = _columns(rows, first)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c, "")) for c in columns])
    logger.info("wrote %d rows to %s", len(rows), path)
    return path


def _cell(value):
    if isinstance(value, float):
        return repr(float(value))
    if hasattr(value, "item"):
        return repr(value.item())
    return value


def read_rows(path):
    """Rows of a CSV written by ``write_rows``, numbers converted to float."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            row = {}
            for key, value in raw.items():
                try:
                    row[key] = float(value)
                except ValueError:
                    row[key] = value
            rows.append(row)
    return rows
