"""Result serialization: RFC-4180 CSV with '#' metadata comment lines, and
a JSON mirror of run reports."""

from __future__ import annotations

import csv
import io
import json
import sys

__all__ = ["csv_text", "json_text", "flatten_report", "write_output"]


def csv_text(rows: list[dict], meta: dict) -> str:
    """CSV with '# key=value' metadata comments above the header row."""
    buf = io.StringIO()
    for key, val in meta.items():
        buf.write(f"# {key}={val}\r\n")
    if rows:
        columns = list(rows[0].keys())
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\r\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def flatten_report(report: dict) -> dict:
    """One flat CSV row from a nested run report (metrics and prediction)."""
    row: dict = {"seed": report["seed"]}
    row.update(report["results"])
    if report.get("prediction"):
        row.update(report["prediction"])
    return row


def write_output(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)
