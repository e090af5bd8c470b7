"""Verification reports with byte-stable serialization.

Reports are plain JSON objects rendered with sorted keys and fixed
indentation, so identical inputs always produce identical bytes. Wall-clock
data is excluded unless explicitly requested, keeping the default output
canonical.
"""

import hashlib
import json

from . import __version__

REPORT_SCHEMA = "dyntwist-report-v1"
SERIES_SCHEMA = "dyntwist-series-v1"

VERDICT_ZERO = "zero"
VERDICT_NONZERO = "nonzero-with-witness"


def compact_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def content_digest(data) -> str:
    """Stable digest of any JSON-serializable document."""
    return "sha256:" + hashlib.sha256(compact_json(data).encode()).hexdigest()


def check_row(check: str, witness) -> dict:
    """One verdict row; witness None means the residual vanished."""
    if witness is None:
        return {"check": check, "verdict": VERDICT_ZERO, "witness": ""}
    return {"check": check, "verdict": VERDICT_NONZERO,
            "witness": str(witness)}


def entry_witness(pos) -> str:
    """Witness text for a (row, col, value-or-text) triple."""
    row, col, value = pos
    text = value if isinstance(value, str) else value.text()
    return "entry (%d,%d): %s" % (row, col, text)


def build_report(command: str, fixture_name: str, digest: str, rows: list,
                 timings=None) -> dict:
    ordered = sorted(rows, key=lambda r: r["check"])
    status = 0 if all(r["verdict"] == VERDICT_ZERO for r in ordered) else 1
    report = {
        "schema": REPORT_SCHEMA,
        "tool": "dyntwist " + __version__,
        "command": command,
        "fixture": {"name": fixture_name, "digest": digest},
        "checks": ordered,
        "status": status,
    }
    if timings is not None:
        report["timings"] = timings
    return report


def error_report(command: str, message: str) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "tool": "dyntwist " + __version__,
        "command": command,
        "error": message,
        "checks": [],
        "status": 2,
    }
