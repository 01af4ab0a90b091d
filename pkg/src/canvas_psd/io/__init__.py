"""Image ingestion, reports, per-swatch tables and contour export."""

from canvas_psd.io.contour import read_contour, write_contour
from canvas_psd.io.images import load_image, read_sidecar, save_image, sidecar_path, write_sidecar
from canvas_psd.io.report import (
    AnalysisReport,
    read_report,
    read_swatch_csv,
    source_metadata,
    write_report,
    write_swatch_csv,
)
from canvas_psd.io.validate import SCHEMA_VERSION, validate_report

__all__ = [
    "SCHEMA_VERSION",
    "AnalysisReport",
    "load_image",
    "read_contour",
    "read_report",
    "read_sidecar",
    "read_swatch_csv",
    "save_image",
    "sidecar_path",
    "source_metadata",
    "validate_report",
    "write_contour",
    "write_report",
    "write_sidecar",
    "write_swatch_csv",
]
