"""CSV result tables and their aggregation.

Files are plain RFC-4180 CSV (CRLF, minimal quoting).  Aggregation groups
rows by a label column and reports population mean/std per numeric column;
empty cells and "n/a" mark excluded values and are skipped with a count.
"""

import csv
from pathlib import Path

import numpy as np

from ..errors import ToolkitError

NA_VALUES = ("", "n/a")


def write_csv(path, header, rows) -> None:
    header = list(header)
    try:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\r\n")
            w.writerow(header)
            for i, row in enumerate(rows):
                if len(row) != len(header):
                    raise ToolkitError(
                        "bad-csv",
                        f"row {i + 2} has {len(row)} cells, expected {len(header)}")
                w.writerow(["" if v is None else v for v in row])
    except OSError as e:
        raise ToolkitError("io-error", f"cannot write {path}: {e}")


def read_csv(path):
    """(header, rows) with every row width-checked against the header."""
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise ToolkitError("bad-csv", f"{path} is empty")
            rows = []
            for i, row in enumerate(reader):
                if len(row) != len(header):
                    raise ToolkitError(
                        "bad-csv",
                        f"{path} line {i + 2}: {len(row)} cells, "
                        f"expected {len(header)}")
                rows.append(row)
    except OSError as e:
        raise ToolkitError("io-error", f"cannot read {path}: {e}")
    return header, rows


def aggregate_report(header, rows, group_by: str, columns) -> dict:
    """Per-group population statistics of the named numeric columns.

    Returns {group: {column: {"mean", "std", "n", "excluded"}}}.  Cells
    equal to "" or "n/a" are excluded; anything else must parse as a float
    or the row's line number is reported.
    """
    idx = {name: i for i, name in enumerate(header)}
    for name in [group_by, *columns]:
        if name not in idx:
            raise ToolkitError("bad-csv", f"missing column {name!r}")
    groups = {}
    for r, row in enumerate(rows):
        g = row[idx[group_by]]
        bucket = groups.setdefault(g, {c: [] for c in columns})
        excluded = groups.setdefault("__excluded__", {})
        for c in columns:
            cell = row[idx[c]].strip() if isinstance(row[idx[c]], str) else row[idx[c]]
            if isinstance(cell, str) and cell.lower() in NA_VALUES:
                excluded.setdefault((g, c), 0)
                excluded[(g, c)] += 1
                continue
            try:
                bucket[c].append(float(cell))
            except (TypeError, ValueError):
                raise ToolkitError(
                    "bad-csv",
                    f"line {r + 2}: cell {c!r}={cell!r} is not numeric")
    excluded = groups.pop("__excluded__", {})
    out = {}
    for g, cols in groups.items():
        out[g] = {}
        for c, values in cols.items():
            arr = np.asarray(values, dtype=np.float64)
            out[g][c] = {
                "mean": float(arr.mean()) if arr.size else None,
                "std": float(arr.std()) if arr.size else None,
                "n": int(arr.size),
                "excluded": int(excluded.get((g, c), 0)),
            }
    return out
