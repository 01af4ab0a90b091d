"""
Report validation.

Enforces the invariants documented in ``schemas/report.schema.json`` without a
JSON-Schema dependency. Used by :func:`canvas_psd.io.report.read_report` and by
``canvas-psd compare`` before reports are trusted.

Checked invariants:
- schema version is one this release reads
- required top-level sections are present with the right types
- categoricals are from the closed sets
- triangle fits satisfy ``f_v = l1`` and ``f_h = p * l2 / n``
- count statistics have nonnegative spreads
"""

from __future__ import annotations

import math
from typing import Any

SCHEMA_VERSION = "1.0"
SUPPORTED_SCHEMA_VERSIONS = {SCHEMA_VERSION}
COMMANDS = {"count", "psd", "fingerprint"}
REQUIRED_FIELDS = ("schema_version", "tool_version", "command", "source", "config")
REQUIRED_SOURCE_FIELDS = ("path", "sha256", "shape", "resolution")

ALLOWED = {
    "edge_shape": {"Diamond", "Cross"},
    "diagonal_connection": {"Horizontal", "Vertical", "None"},
    "center_shape": {"C", "O", "Plain"},
    "axis_emphasis": {"Vertical", "Horizontal", "Both", "None"},
}


def _check_fit(fit: dict[str, Any], errors: list[str]) -> None:
    missing = [k for k in ("m", "n", "p", "l1", "l2", "f_v", "f_h", "residual") if k not in fit]
    if missing:
        errors.append(f"triangle_fit missing fields {missing}")
        return
    if fit["residual"] < 0:
        errors.append("triangle_fit.residual is negative")
    if not math.isclose(fit["f_v"], fit["l1"], rel_tol=1e-9):
        errors.append("triangle_fit.f_v differs from l1")
    if fit["n"] >= 1 and not math.isclose(fit["f_h"], fit["p"] * fit["l2"] / fit["n"], rel_tol=1e-9):
        errors.append("triangle_fit.f_h differs from p * l2 / n")


def _check_statistics(stats: dict[str, Any], errors: list[str]) -> None:
    for direction in ("vertical", "horizontal"):
        block = stats.get(direction)
        if not isinstance(block, dict):
            errors.append(f"count_statistics.{direction} missing")
            continue
        if block.get("std", 0) < 0:
            errors.append(f"count_statistics.{direction}.std is negative")
        histogram = block.get("histogram", {})
        edges = histogram.get("bin_edges", [])
        counts = histogram.get("counts", [])
        if len(edges) != len(counts) + 1:
            errors.append(f"count_statistics.{direction} histogram needs len(bin_edges) == len(counts) + 1")


def _check_fingerprint(fp: dict[str, Any], errors: list[str]) -> None:
    for name, allowed in ALLOWED.items():
        if fp.get(name) not in allowed:
            errors.append(f"fingerprint.{name}={fp.get(name)!r} not in {sorted(allowed)}")
    for key, value in fp.get("metrics", {}).items():
        if not isinstance(value, int | float) or not math.isfinite(value):
            errors.append(f"fingerprint metric {key} is not a finite number")


def validate_report(data: dict[str, Any]) -> list[str]:
    """Return a list of validation errors. Empty list means valid."""
    errors: list[str] = []
    if not isinstance(data, dict):
        return ["report must be a JSON object"]

    missing = [f for f in REQUIRED_FIELDS if f not in data]
    if missing:
        errors.append(f"missing required fields {missing}")
        return errors
    if data["schema_version"] not in SUPPORTED_SCHEMA_VERSIONS:
        errors.append(f"unsupported schema_version {data['schema_version']!r}")
    if data["command"] not in COMMANDS:
        errors.append(f"unknown command {data['command']!r}")

    source = data["source"]
    if not isinstance(source, dict) or any(f not in source for f in REQUIRED_SOURCE_FIELDS):
        errors.append(f"source needs fields {REQUIRED_SOURCE_FIELDS}")
    elif not source["resolution"] or source["resolution"] <= 0:
        errors.append("source.resolution must be positive")
    if not isinstance(data["config"], dict):
        errors.append("config must be an object")

    if (fit := data.get("triangle_fit")) is not None:
        _check_fit(fit, errors)
    if (stats := data.get("count_statistics")) is not None:
        _check_statistics(stats, errors)
    if (fp := data.get("fingerprint")) is not None:
        _check_fingerprint(fp, errors)
    return errors
