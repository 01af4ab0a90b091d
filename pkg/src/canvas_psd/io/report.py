"""
Analysis reports and per-swatch tables.

A report is deterministic JSON (sorted keys, two-space indent): the same image
and config always give byte-identical files. Run metadata that changes from
run to run (timestamps, durations, worker count) goes to a sibling
``<report>.meta.json`` instead.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import polars as pl

from canvas_psd import __version__
from canvas_psd.counting import CountStatistics, SwatchMeasurement, TriangleFit
from canvas_psd.errors import ReportError
from canvas_psd.features import FeatureFingerprint
from canvas_psd.io.validate import SCHEMA_VERSION, validate_report
from canvas_psd.spectrum import ImageGrid

SWATCH_COLUMNS = ("x", "y", "f_v", "f_h", "angle_v", "angle_h", "confidence")


def file_sha256(path: Path | str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def source_metadata(path: Path | str, image: ImageGrid) -> dict[str, Any]:
    return {
        "path": Path(path).name,
        "sha256": file_sha256(path),
        "shape": list(image.shape),
        "resolution": image.resolution,
    }


@dataclass(frozen=True)
class AnalysisReport:
    """Everything one analysis command produced, plus the config that produced it."""

    command: str
    source: dict[str, Any]
    config: dict[str, Any]
    count_statistics: CountStatistics | None = None
    triangle_fit: TriangleFit | None = None
    fit_error: dict[str, Any] | None = None
    fingerprint: FeatureFingerprint | None = None
    spectrum: dict[str, Any] | None = None
    peaks: list[dict[str, Any]] = field(default_factory=list)
    tool_version: str = __version__
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "command": self.command,
            "source": self.source,
            "config": self.config,
            "count_statistics": self.count_statistics.to_dict() if self.count_statistics else None,
            "triangle_fit": self.triangle_fit.to_dict() if self.triangle_fit else None,
            "fit_error": self.fit_error,
            "fingerprint": self.fingerprint.to_dict() if self.fingerprint else None,
            "spectrum": self.spectrum,
            "peaks": self.peaks,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> AnalysisReport:
        stats = data.get("count_statistics")
        fit = data.get("triangle_fit")
        fp = data.get("fingerprint")
        return cls(
            command=data["command"],
            source=data["source"],
            config=data["config"],
            count_statistics=CountStatistics.from_dict(stats) if stats else None,
            triangle_fit=TriangleFit.from_dict(fit) if fit else None,
            fit_error=data.get("fit_error"),
            fingerprint=FeatureFingerprint.from_dict(fp) if fp else None,
            spectrum=data.get("spectrum"),
            peaks=list(data.get("peaks") or []),
            tool_version=data["tool_version"],
            schema_version=data["schema_version"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def meta_path(path: Path | str) -> Path:
    """``report.json`` -> ``report.meta.json``."""
    path = Path(path)
    return path.with_name(f"{path.stem}.meta{path.suffix or '.json'}")


def write_report(report: AnalysisReport, path: Path | str, meta: dict[str, Any] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_json(), encoding="utf-8")
    if meta is not None:
        meta_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_report(path: Path | str) -> AnalysisReport:
    """Parse and validate a report; raises ReportError on any problem."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"cannot read report {path}: {exc}", path=str(path)) from exc
    if errors := validate_report(data):
        raise ReportError(f"invalid report {path}: " + "; ".join(errors), path=str(path), errors=errors)
    try:
        return AnalysisReport.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportError(f"invalid report {path}: {exc}", path=str(path)) from exc


def swatch_frame(maps: list[SwatchMeasurement]) -> pl.DataFrame:
    """One row per swatch, row-major; unset frequencies are null."""
    schema = {c: pl.Float64 for c in SWATCH_COLUMNS}
    return pl.DataFrame([m.to_dict() for m in maps], schema=schema)


def write_swatch_csv(maps: list[SwatchMeasurement], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    swatch_frame(maps).write_csv(path)
    return path


def read_swatch_csv(path: Path | str) -> pl.DataFrame:
    return pl.read_csv(path, schema_overrides={c: pl.Float64 for c in SWATCH_COLUMNS})
