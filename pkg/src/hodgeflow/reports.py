"""JSON and CSV report serialization.

Every JSON report is an object with keys ``schema`` (always
``"hodgeflow-report"``), ``schema_version``, ``kind``, ``package_version``,
``config`` (every parameter used, defaults included) and ``results``.  CSV
files start with one ``#`` comment line naming the schema and kind, followed
by a header row.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
from importlib import metadata
from pathlib import Path

import numpy as np

from .errors import IoError

SCHEMA = "hodgeflow-report"
SCHEMA_VERSION = 1
FLUX_COLUMNS = ("s", "flux", "W1_norm", "W2_norm", "W3_norm")
EQUIV_COLUMNS = ("field", "heat_norm", "lp_norm", "ratio")


def package_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays, tuples and dataclasses to JSON types."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        # JSON has no inf/nan; keep them as strings so the document stays valid
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, os.PathLike):
        return os.fspath(obj)
    return obj


def make_report(kind, results=None, config=None):
    return {
        "schema": SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "package_version": package_version(),
        "config": to_jsonable(config or {}),
        "results": to_jsonable(results if results is not None else []),
    }


def dumps(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_json(path, report):
    try:
        Path(path).write_text(dumps(report))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_json(path):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if doc.get("schema") != SCHEMA:
        raise IoError(f"{path} is not a {SCHEMA} document")
    return doc


def csv_text(rows, columns, kind):
    buf = io.StringIO()
    buf.write(f"# {SCHEMA} v{SCHEMA_VERSION} kind={kind}\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({c: repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns})
    return buf.getvalue()


def write_csv(path, rows, columns, kind):
    try:
        Path(path).write_text(csv_text(rows, columns, kind))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    """Return ``(kind, rows)`` with numeric cells parsed as floats."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not lines or not lines[0].startswith(f"# {SCHEMA}"):
        raise IoError(f"{path} lacks the {SCHEMA} header line")
    kind = lines[0].split("kind=", 1)[-1]
    rows = []
    for r in csv.DictReader(lines[1:]):
        rows.append({k: _num(v) for k, v in r.items()})
    return kind, rows


def _num(v):
    try:
        return float(v)
    except ValueError:
        return v
