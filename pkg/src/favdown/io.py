"""CSV/JSON writers for the external file formats."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def _writer(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", newline="")


def write_events_csv(events: np.ndarray, path) -> None:
    with _writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "x", "r"])
        w.writerows(np.asarray(events).reshape(-1, 3).tolist())


def write_profile_csv(values: dict[int, int], path) -> None:
    with _writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", "value"])
        for y in sorted(values):
            w.writerow([y, values[y]])


def write_lemma_csv(rows, path) -> None:
    """Rows of (kernel, h, start, quantity, value)."""
    with _writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kernel", "h", "start", "quantity", "value"])
        for kernel, h, start, quantity, value in rows:
            w.writerow([kernel, h, start, quantity, repr(float(value))])


def write_enumeration_csv(report, path) -> None:
    with _writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "statistic", "key", "numerator", "denominator"])
        for stat, key, num, den in report.rows():
            w.writerow([report.n, stat, key, num, den])


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def write_json(obj, path) -> None:
    with _writer(path) as fh:
        fh.write(dumps(obj))


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
