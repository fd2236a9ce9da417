"""CSV and Markdown tables for study reports.

Floats are written with ``repr`` so a CSV round trip is exact; empty cells
stand for values that were not computed (for example TT columns of an FG
run).  Output bytes depend only on the report contents.
"""
from __future__ import annotations

import csv
import io
import numbers
import sys
from typing import List, Optional, Sequence

from .errors import InvalidInputError
from .studies import EigenReport, EigenRow, LevelRow, RunReport

FORMATS = ("csv", "markdown")

RUN_COLUMNS = ("level", "Nc", "h", "dt", "err_fg", "rate_fg", "err_tt", "rate_tt",
               "time_fg_s", "time_tt_s", "time_ratio", "strg_fg", "strg_tt", "strg_ratio",
               "max_rank")
EIGEN_COLUMNS = ("Nc", "dt", "lambda_max_A", "lambda_max_PA", "lambda_max_PA_interior")

_INT_COLUMNS = {"level", "Nc", "strg_fg", "strg_tt", "max_rank"}
_ATTR = {"Nc": "nc"}


def _cell_csv(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, numbers.Integral):
        return str(int(v))
    return repr(float(v))


def _cell_md(v, col: str) -> str:
    if v is None:
        return "-"
    if isinstance(v, numbers.Integral):
        return str(int(v))
    if col.startswith("err") or col.startswith("lambda") or col in ("h", "dt"):
        return f"{v:.3e}"
    if col.startswith("time") and not col.endswith("ratio"):
        return f"{v:.3f}"
    return f"{v:.2f}"


def _table(report):
    if isinstance(report, RunReport):
        cols = RUN_COLUMNS
        rows = [[getattr(r, _ATTR.get(c, c)) for c in cols] for r in report.rows]
    elif isinstance(report, EigenReport):
        cols = EIGEN_COLUMNS
        rows = [[r.nc, r.dt, r.lambda_a, r.lambda_pa, r.lambda_pa_interior] for r in report.rows]
    else:
        raise InvalidInputError(f"cannot format {type(report).__name__}")
    return cols, rows


def format_report(report, fmt: str = "csv") -> str:
    if fmt not in FORMATS:
        raise InvalidInputError(f"format must be one of {FORMATS}")
    cols, rows = _table(report)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell_csv(v) for v in row])
        return buf.getvalue()
    lines = ["| " + " | ".join(cols) + " |", "|" + "|".join("---" for _ in cols) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(_cell_md(v, c) for v, c in zip(row, cols)) + " |")
    return "\n".join(lines) + "\n"


def emit_report(report, fmt: str = "csv", path: Optional[str] = None) -> str:
    """Write the table to ``path`` (stdout for None or ``-``) and return it."""
    text = format_report(report, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        return text
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InvalidInputError(f"cannot write report to {path!r}: {exc}") from exc
    return text


def _parse(v: str, col: str):
    if v == "":
        return None
    return int(v) if col in _INT_COLUMNS else float(v)


def parse_report_csv(text: str) -> RunReport:
    """Inverse of the CSV form of :func:`emit_report` for run reports."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidInputError("empty CSV") from None
    if tuple(header) != RUN_COLUMNS:
        raise InvalidInputError(f"unexpected CSV header {header}")
    rows: List[LevelRow] = []
    for rec in reader:
        if not rec:
            continue
        vals = {_ATTR.get(c, c): _parse(v, c) for c, v in zip(header, rec)}
        rows.append(LevelRow(**vals))
    return RunReport("parsed", {}, rows)


def parse_eigen_csv(text: str) -> EigenReport:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != EIGEN_COLUMNS:
        raise InvalidInputError(f"unexpected CSV header {header}")
    out = EigenReport("parsed")
    for rec in reader:
        if rec:
            nc, dt, la, lpa, lpi = rec
            out.rows.append(EigenRow(int(nc), float(dt), float(la), float(lpa), float(lpi)))
    return out


def rows_equal(a: Sequence[LevelRow], b: Sequence[LevelRow]) -> bool:
    """Compare the tabulated columns of two row lists."""
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        for c in RUN_COLUMNS:
            k = _ATTR.get(c, c)
            if getattr(ra, k) != getattr(rb, k):
                return False
    return True
