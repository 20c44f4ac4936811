"""CSV and JSON report emission.

Both files are deterministic for a fixed config: runtime and the output
directory are kept out of them, and numbers are written with 17
significant digits, which round-trips every double exactly.  Non-finite values are written as ``nan``, ``inf``
and ``-inf`` (strings in the JSON mirror).
"""

import json
import os
import platform

import numpy as np

from .suites import Row, SuiteReport

COLUMNS = ("suite", "check", "depth", "instance", "seed", "lhs", "rhs", "value", "tolerance", "status")
FLOAT_COLUMNS = ("lhs", "rhs", "value", "tolerance")


def fmt(x):
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _json_float(x):
    x = float(x)
    return x if np.isfinite(x) else fmt(x)


def _parse_float(x):
    return float(x)  # float() accepts "nan", "inf", "-inf"


def environment():
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "machine": platform.machine(),
        "system": platform.system(),
    }


def csv_text(reports):
    lines = [",".join(COLUMNS)]
    for rep in reports:
        for r in rep.rows:
            cells = []
            for col in COLUMNS:
                v = getattr(r, col)
                cells.append(fmt(v) if col in FLOAT_COLUMNS else str(v))
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _suite_dict(rep):
    return {
        "suite": rep.suite,
        "verdict": rep.verdict,
        "fitted": {k: {str(L): _json_float(c) for L, c in v.items()} for k, v in rep.fitted.items()},
        "drift": {k: _json_float(v) for k, v in rep.drift.items()},
        "rows": [
            {col: (_json_float(getattr(r, col)) if col in FLOAT_COLUMNS else getattr(r, col))
             for col in COLUMNS}
            for r in rep.rows
        ],
    }


def json_text(reports, config=None):
    echo = None
    if config is not None:
        echo = {k: v for k, v in config.to_dict().items() if k != "out"}
    doc = {
        "config": echo,
        "environment": environment(),
        "suites": [_suite_dict(rep) for rep in reports],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_report(reports, out_dir, config=None, stem="report"):
    """Writes ``<stem>.csv`` and ``<stem>.json`` under ``out_dir``; returns both paths."""
    if isinstance(reports, SuiteReport):
        reports = [reports]
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}.json")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(csv_text(reports))
    with open(json_path, "w", newline="\n") as fh:
        fh.write(json_text(reports, config))
    return csv_path, json_path


def read_report(json_path):
    """Parses a JSON report back into :class:`SuiteReport` objects (runtime is 0)."""
    with open(json_path) as fh:
        doc = json.load(fh)
    out = []
    for s in doc["suites"]:
        rows = [
            Row(**{col: (_parse_float(r[col]) if col in FLOAT_COLUMNS else r[col]) for col in COLUMNS})
            for r in s["rows"]
        ]
        fitted = {k: {int(L): _parse_float(c) for L, c in v.items()} for k, v in s["fitted"].items()}
        drift = {k: _parse_float(v) for k, v in s["drift"].items()}
        out.append(SuiteReport(s["suite"], rows, fitted, drift, s["verdict"]))
    return out


def read_csv(csv_path):
    with open(csv_path) as fh:
        lines = fh.read().splitlines()
    if lines[0] != ",".join(COLUMNS):
        raise ValueError(f"{csv_path}: unexpected header")
    rows = []
    for line in lines[1:]:
        vals = dict(zip(COLUMNS, line.split(",")))
        for col in ("depth", "instance", "seed"):
            vals[col] = int(vals[col])
        for col in FLOAT_COLUMNS:
            vals[col] = _parse_float(vals[col])
        rows.append(Row(**vals))
    return rows
