"""Deterministic report serialization.

JSON carries the whole report; CSV carries the report's primary table as a
plottable file with `# key=value` metadata lines for scalar metrics. Floats
are written with repr, so parsing a file recovers bit-identical numbers and
rerunning with the same (config, seed) rewrites identical bytes. Wall-clock
time is deliberately left out of both formats.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ParseError, ValidationError
from .experiments import ExperimentReport

__all__ = ["emit_report", "parse_report", "read_csv_table", "PRIMARY_TABLES"]

PRIMARY_TABLES = {
    "far": "far_curve",
    "flaw": "expected_counts",
    "spd": "spd_curve",
    "eval": "spd_curve",
    "calibration": "calibration",
    "detect": "alarms",
    "synth": "segments",
}

# Column order for known tables, so an empty table still gets its header.
TABLE_COLUMNS = {
    "far_curve": ["h", "alarm_count", "empirical_period", "bound_period", "holds"],
    "expected_counts": ["quantity", "analytic", "mc_mean", "mc_stderr"],
    "spd_curve": ["nadd", "precision", "threshold", "alarm_count"],
    "random_curve": ["nadd", "precision", "threshold", "alarm_count"],
    "alarms": ["t"],
    "segments": ["start", "end"],
}


def _report_payload(report: ExperimentReport) -> dict:
    return {
        "schema_version": report.schema_version,
        "kind": report.kind,
        "seed": report.seed,
        "config": report.config,
        "metrics": report.metrics,
        "tables": {name: list(rows) for name, rows in report.tables.items()},
    }


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _primary_table(report: ExperimentReport) -> tuple[str, tuple[dict, ...]]:
    name = PRIMARY_TABLES.get(report.kind)
    if name is not None and name in report.tables:
        return name, report.tables[name]
    if report.tables:
        first = sorted(report.tables)[0]
        return first, report.tables[first]
    return "empty", ()


def emit_report(report: ExperimentReport, path, format: str = "json") -> Path:
    """Write a report to disk; returns the path written."""
    out = Path(path)
    if format == "json":
        payload = _report_payload(report)
        try:
            text = json.dumps(payload, indent=2, sort_keys=True)
        except (TypeError, OverflowError) as exc:
            raise ValidationError(f"report is not serializable: {exc}") from exc
        out.write_text(text + "\n")
        return out
    if format == "csv":
        name, rows = _primary_table(report)
        lines = [f"# schema_version={report.schema_version}", f"# kind={report.kind}"]
        if report.seed is not None:
            lines.append(f"# seed={report.seed}")
        for key in sorted(report.metrics):
            lines.append(f"# {key}={_format_cell(report.metrics[key])}")
        lines.append(f"# table={name}")
        columns = list(rows[0].keys()) if rows else TABLE_COLUMNS.get(name, [])
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_format_cell(row[c]) for c in columns))
        out.write_text("\n".join(lines) + "\n")
        return out
    raise ValidationError(f"unknown format {format!r}")


def parse_report(path) -> dict:
    """Read back a JSON report as a plain dict."""
    source = Path(path)
    try:
        return json.loads(source.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _parse_scalar(cell: str):
    if cell == "":
        return None
    if cell in ("True", "False"):
        return cell == "True"
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell


def read_csv_table(path) -> tuple[dict, list[dict]]:
    """Read back a CSV report: ({metadata}, [table rows])."""
    source = Path(path)
    meta: dict = {}
    rows: list[dict] = []
    columns: list[str] | None = None
    for lineno, line in enumerate(source.read_text().splitlines(), start=1):
        if line.startswith("# "):
            body = line[2:]
            if "=" not in body:
                raise ParseError(f"{source}: line {lineno}: malformed metadata {line!r}")
            key, value = body.split("=", 1)
            meta[key] = _parse_scalar(value)
            continue
        if columns is None:
            columns = line.split(",") if line else []
            continue
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(columns):
            raise ParseError(
                f"{source}: line {lineno}: {len(cells)} cells for {len(columns)} columns"
            )
        rows.append({c: _parse_scalar(v) for c, v in zip(columns, cells)})
    if columns is None:
        raise ParseError(f"{source}: no table header found")
    return meta, rows
