"""Result records and their CSV/JSON serialization.

Floats are written with 17 significant digits in CSV and with ``repr`` in
JSON, both of which round-trip doubles exactly.  The timestamp always sits
on a line of its own so that outputs can be compared byte for byte after
dropping that line.
"""

from dataclasses import dataclass, field
import csv
import io
import json
import math
import os
from pathlib import Path
import tempfile

from .. import __version__

__all__ = ["Certificate", "Table", "ResultRecord", "emit_results", "atomic_write", "TIMESTAMP_KEY"]

TIMESTAMP_KEY = "timestamp"
TOOL = "cryptoherm"


@dataclass(frozen=True)
class Certificate:
    """A PASS/FAIL judgement together with the tolerance it was judged against."""

    name: str
    value: float
    tol: float
    passed: bool
    relation: str = "<="

    def as_dict(self):
        return {
            "name": self.name,
            "value": self.value,
            "relation": self.relation,
            "tol": self.tol,
            "status": "PASS" if self.passed else "FAIL",
        }


def certify(name, value, tol, relation="<="):
    value, tol = float(value), float(tol)
    ok = {"<=": value <= tol, ">": value > tol, "==": value == tol}[relation]
    return Certificate(name, value, tol, bool(ok), relation)


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)


@dataclass
class ResultRecord:
    experiment_id: str
    timestamp: str
    config: dict
    tables: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.certificates)


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)  # "inf", "-inf", "nan" as strings keeps the document standard JSON
    return v


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv_text(record, name, table):
    buf = io.StringIO()
    buf.write(f"# tool: {TOOL} {__version__}\n")
    buf.write(f"# experiment: {record.experiment_id}\n")
    buf.write(f"# table: {name}\n")
    buf.write(f"# {TIMESTAMP_KEY}: {record.timestamp}\n")
    buf.write(f"# config: {json.dumps(record.config, sort_keys=True)}\n")
    for c in record.certificates:
        d = c.as_dict()
        buf.write(f"# certificate: {d['name']} = {_fmt(d['value'])} {d['relation']} {_fmt(d['tol'])} {d['status']}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(record):
    doc = {
        "tool": TOOL,
        "version": __version__,
        "experiment": record.experiment_id,
        TIMESTAMP_KEY: record.timestamp,
        "config": record.config,
        "certificates": [{k: _json_value(v) for k, v in c.as_dict().items()} for c in record.certificates],
        "tables": {
            name: {"columns": t.columns, "rows": [[_json_value(v) for v in row] for row in t.rows]}
            for name, t in record.tables.items()
        },
    }
    return json.dumps(doc, indent=1) + "\n"


def emit_results(record, fmt, path):
    """Write ``record`` and return the list of files written.

    JSON produces one document at ``path``.  CSV produces one file per
    table; with several tables the table name is appended to the stem
    (``out.levels.csv``).  A record without tables still yields a
    header-only file so that nothing is dropped silently.
    """
    path = Path(path)
    if fmt == "json":
        return [atomic_write(path, _json_text(record))]
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    tables = record.tables or {"empty": Table(columns=[])}
    if len(tables) == 1:
        (name, table), = tables.items()
        return [atomic_write(path, _csv_text(record, name, table))]
    return [
        atomic_write(path.with_name(f"{path.stem}.{name}{path.suffix}"), _csv_text(record, name, t))
        for name, t in tables.items()
    ]
