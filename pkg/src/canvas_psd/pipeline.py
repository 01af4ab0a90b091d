"""
Analysis pipelines behind the CLI commands.

Each ``run_*`` function loads its inputs, runs the stages in order and logs
every stage as a single ``pipeline.step`` line (running, then done or error,
with its duration). Reports are returned and optionally written; per-run
timings go to the report's ``.meta.json`` sibling so the report itself stays
byte-identical across runs.

Usage:
    from canvas_psd.pipeline import run_psd
    report = run_psd("scan.png", out="scan.psd.json")
"""

from __future__ import annotations

import time
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

from canvas_psd import __version__
from canvas_psd.config import AnalysisConfig, settings
from canvas_psd.counting import PeakSet, count_maps, detect_peaks, fit_spectral_triangle, statistics
from canvas_psd.errors import FitFailedError, ReportError
from canvas_psd.features import MatchReport, compare, fingerprint_spectrum
from canvas_psd.io import (
    AnalysisReport,
    load_image,
    read_report,
    save_image,
    source_metadata,
    write_contour,
    write_report,
    write_sidecar,
    write_swatch_csv,
)
from canvas_psd.logging import get_logger
from canvas_psd.spectrum import ImageGrid, Spectrum2D, averaged_periodogram
from canvas_psd.weave import (
    BasicShape,
    DegradationSpec,
    ShapeKind,
    WeavePattern,
    predicted_peaks,
    spectral_triangle,
    synthesize_image,
)

log = get_logger("canvas_psd.pipeline")


@contextmanager
def _step(stage: str, phase: str, durations: dict[str, float]) -> Iterator[None]:
    log.info("pipeline.step", stage=stage, phase=phase, status="running")
    start = time.perf_counter()
    try:
        yield
    except Exception as exc:
        elapsed = time.perf_counter() - start
        log.error("pipeline.step", stage=stage, phase=phase, status="error", duration=elapsed, detail=str(exc))
        raise
    elapsed = time.perf_counter() - start
    durations[phase] = round(elapsed, 3)
    log.info("pipeline.step", stage=stage, phase=phase, status="done", duration=elapsed)


def _meta(command: str, durations: dict[str, float], workers: int) -> dict[str, Any]:
    return {
        "command": command,
        "created_at": datetime.now(UTC).isoformat(timespec="seconds"),
        "durations": durations,
        "tool_version": __version__,
        "workers": workers,
    }


def _load(
    path: Path | str,
    config: AnalysisConfig,
    resolution: float | None,
    stage: str,
    durations: dict[str, float],
) -> ImageGrid:
    with _step(stage, "load", durations):
        return load_image(path, resolution or config.resolution_override)


def _spectrum_stages(
    image: ImageGrid,
    config: AnalysisConfig,
    workers: int,
    stage: str,
    durations: dict[str, float],
):
    det = config.detector
    with _step(stage, "periodogram", durations):
        psd = averaged_periodogram(image, config.plan, workers=workers)
    with _step(stage, "peaks", durations):
        peaks = detect_peaks(psd, det.dc_radius, det.min_separation, det.rel_threshold, det.floor, det.max_peaks)
    fit = None
    fit_error = None
    with _step(stage, "fit", durations):
        try:
            fit = fit_spectral_triangle(peaks, p=config.p, config=config.fit)
        except FitFailedError as exc:
            fit_error = exc.to_dict()
            log.warning("pipeline.fit_failed", reason=str(exc), peaks=len(peaks))
    return psd, peaks, fit, fit_error


def _spectrum_summary(psd: Spectrum2D, peaks: PeakSet) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    return {**psd.to_dict(), "peak_count": len(peaks)}, peaks.to_dict()["peaks"]


# -----------------------------------------------------------------------------
# Commands
# -----------------------------------------------------------------------------
def run_synth(
    pattern: WeavePattern,
    out: Path | str,
    size: tuple[float, float] = (4.0, 4.0),
    resolution: float = 200.0,
    shape_kind: ShapeKind = ShapeKind.RECTANGLE,
    degradation: DegradationSpec | None = None,
) -> tuple[ImageGrid, dict[str, Any]]:
    """Render a weave to ``out`` with a ground-truth sidecar next to it."""
    degradation = degradation or DegradationSpec()
    shape = BasicShape.default(pattern, kind=shape_kind)
    durations: dict[str, float] = {}
    with _step("synth", "render", durations):
        image = synthesize_image(pattern, shape, size=size, resolution=resolution, degradation=degradation)
    nyquist = resolution / 2
    f_max = min(nyquist, 3 * max(pattern.f_v, pattern.f_h))
    sidecar = {
        "resolution": resolution,
        "size_cm": list(size),
        "pattern": pattern.to_dict(),
        "shape": shape.to_dict(),
        "degradation": degradation.model_dump(mode="json"),
        "scale": float(image.pixels.max()),
        "spectral_triangle": spectral_triangle(pattern).to_dict(),
        "predicted_peaks": [[float(fx), float(fy)] for fx, fy in predicted_peaks(pattern, f_max)],
        "tool_version": __version__,
    }
    with _step("synth", "write", durations):
        save_image(image, out)
        write_sidecar(out, sidecar)
    return image, sidecar


def run_count(
    path: Path | str,
    config: AnalysisConfig | None = None,
    out: Path | str | None = None,
    csv: Path | str | None = None,
    resolution: float | None = None,
    workers: int | None = None,
) -> AnalysisReport:
    """Standard swatch counting: maps, then mode / mean / std per direction."""
    config = config or AnalysisConfig()
    workers = workers or settings.workers
    durations: dict[str, float] = {}
    image = _load(path, config, resolution, "count", durations)
    sw = config.swatch
    with _step("count", "swatches", durations):
        maps = count_maps(
            image,
            swatch_size=sw.size_cm,
            overlap_fraction=sw.overlap_fraction,
            n_dft=sw.n_dft,
            dc_radius=config.detector.dc_radius,
            rel_threshold=config.detector.rel_threshold,
            workers=workers,
        )
    with _step("count", "statistics", durations):
        stats = statistics(maps, sw.bin_width or image.resolution / sw.n_dft, sw.min_confidence)
    report = AnalysisReport(
        command="count",
        source=source_metadata(path, image),
        config=config.to_dict(),
        count_statistics=stats,
    )
    if csv is not None:
        write_swatch_csv(maps, csv)
    if out is not None:
        write_report(report, out, _meta("count", durations, workers))
    return report


def run_psd(
    path: Path | str,
    config: AnalysisConfig | None = None,
    out: Path | str | None = None,
    contour: Path | str | None = None,
    resolution: float | None = None,
    workers: int | None = None,
) -> AnalysisReport:
    """Averaged periodogram -> peaks -> spectral triangle.

    A failed fit is recorded in the report (with its best candidate) rather
    than raised; the CLI turns it into a nonzero exit.
    """
    config = config or AnalysisConfig()
    workers = workers or settings.workers
    durations: dict[str, float] = {}
    image = _load(path, config, resolution, "psd", durations)
    psd, peaks, fit, fit_error = _spectrum_stages(image, config, workers, "psd", durations)
    spectrum, peak_list = _spectrum_summary(psd, peaks)
    report = AnalysisReport(
        command="psd",
        source=source_metadata(path, image),
        config=config.to_dict(),
        triangle_fit=fit,
        fit_error=fit_error,
        spectrum=spectrum,
        peaks=peak_list,
    )
    if contour is not None:
        write_contour(psd, contour)
    if out is not None:
        write_report(report, out, _meta("psd", durations, workers))
    return report


def run_fingerprint(
    path: Path | str,
    config: AnalysisConfig | None = None,
    out: Path | str | None = None,
    contour: Path | str | None = None,
    resolution: float | None = None,
    workers: int | None = None,
) -> AnalysisReport:
    """Triangle fit plus the four-feature fingerprint of the averaged periodogram."""
    config = config or AnalysisConfig()
    workers = workers or settings.workers
    durations: dict[str, float] = {}
    image = _load(path, config, resolution, "fingerprint", durations)
    psd, peaks, fit, fit_error = _spectrum_stages(image, config, workers, "fingerprint", durations)
    with _step("fingerprint", "classify", durations):
        fp = fingerprint_spectrum(psd, peaks, fit, config.detector, config.classifier)
    spectrum, peak_list = _spectrum_summary(psd, peaks)
    report = AnalysisReport(
        command="fingerprint",
        source=source_metadata(path, image),
        config=config.to_dict(),
        triangle_fit=fit,
        fit_error=fit_error,
        fingerprint=fp,
        spectrum=spectrum,
        peaks=peak_list,
    )
    if contour is not None:
        write_contour(psd, contour)
    if out is not None:
        write_report(report, out, _meta("fingerprint", durations, workers))
    return report


def run_compare(first: Path | str, second: Path | str, tolerance: float = 1.0) -> MatchReport:
    """Compare the fingerprints stored in two fingerprint reports."""
    reports = [read_report(first), read_report(second)]
    for path, report in zip((first, second), reports, strict=True):
        if report.fingerprint is None:
            raise ReportError(f"{path} holds no fingerprint; run `canvas-psd fingerprint` first", path=str(path))
    result = compare(reports[0].fingerprint, reports[1].fingerprint, tolerance=tolerance)
    log.info("pipeline.compare", verdict=result.verdict.value, pairing=result.pairing)
    return result
