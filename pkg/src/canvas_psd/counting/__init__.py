"""
Thread counting.

Two methods:
- swatch: per-swatch DFT peaks, maps and histogram statistics
- triangle: peak lattice of the averaged periodogram -> spectral triangle -> m, n, f_v, f_h
"""

from canvas_psd.counting.peaks import PeakSet, detect_peaks, refine_peak
from canvas_psd.counting.swatch import (
    CountStatistics,
    DirectionStatistics,
    Swatch,
    SwatchMeasurement,
    count_maps,
    statistics,
    swatch_count,
    swatch_grid,
)
from canvas_psd.counting.triangle import TriangleFit, fit_spectral_triangle

__all__ = [
    "CountStatistics",
    "DirectionStatistics",
    "PeakSet",
    "Swatch",
    "SwatchMeasurement",
    "TriangleFit",
    "count_maps",
    "detect_peaks",
    "fit_spectral_triangle",
    "refine_peak",
    "statistics",
    "swatch_count",
    "swatch_grid",
]
