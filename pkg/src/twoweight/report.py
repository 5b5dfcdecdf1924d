"""Versioned report documents and CSV tables.

A report is a JSON object with a schema id, the exact inputs, a digest of
those inputs, results and invariant verdicts. The timestamp is the only field
that changes between identical runs, and it is left out of the digest.
"""

import csv
import datetime as _dt
import hashlib
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .measure import Interval, Weight

SCHEMA = "twoweight.report/1"


def jsonable(obj):
    """Plain JSON types; Fractions are kept exact as 'p/q' strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return v
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Interval):
        return [jsonable(obj.left), jsonable(obj.right)]
    if isinstance(obj, Weight):
        return obj.to_dict()
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def canonical(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"))


def digest(inputs) -> str:
    return hashlib.sha256(canonical(inputs).encode()).hexdigest()


def build_report(command, inputs, results, verdicts=None, timestamp=None):
    if timestamp is None:
        timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return {
        "schema": SCHEMA,
        "command": command,
        "inputs": jsonable(inputs),
        "inputs_digest": digest(inputs),
        "results": jsonable(results),
        "verdicts": jsonable(verdicts or {}),
        "timestamp": timestamp,
    }


def without_timestamp(report):
    return {k: v for k, v in report.items() if k != "timestamp"}


def write_report(report, out_dir, name=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name or report['command']}.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=1) + "\n")
    return path


def write_csv(rows, path, columns=None) -> Path:
    rows = [jsonable(r) for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            columns += [k for k in r if k not in columns]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return path
