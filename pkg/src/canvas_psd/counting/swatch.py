"""
Standard sliding-swatch thread counting.

Each swatch (about 1 cm square) is mean-removed, Blackman-Harris windowed and
transformed. Ignoring the lowest spectral components, the dominant peak within
45 degrees of the f_x axis counts the vertical threads and the one within 45
degrees of the f_y axis counts the horizontal threads; the angle of each peak
from its axis is the local thread tilt. Scanning the whole image gives maps of
densities and angles, summarised by histogram mode, mean and standard
deviation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from canvas_psd.counting.peaks import refine_peak
from canvas_psd.errors import ImageTooSmallError, InsufficientDataError
from canvas_psd.logging import get_logger
from canvas_psd.spectrum import ImageGrid, window_1d

log = get_logger("canvas_psd.counting.swatch")

# Logistic mapping of ln(peak / sector median) to confidence.
CONFIDENCE_MIDPOINT = 10.0
CONFIDENCE_SLOPE = 2.0
MIN_SWATCH_PX = 8


@dataclass(frozen=True)
class Swatch:
    """Square swatch: top-left pixel and side in pixels."""

    row: int
    col: int
    size: int

    @property
    def centre(self) -> tuple[float, float]:
        """(x, y) pixel coordinates of the swatch centre."""
        return (self.col + self.size / 2, self.row + self.size / 2)


@dataclass(frozen=True)
class SwatchMeasurement:
    """Local counts; frequencies are None when the swatch is not confident."""

    position: tuple[float, float]
    f_v: float | None
    f_h: float | None
    angle_v: float
    angle_h: float
    confidence: float

    def to_dict(self) -> dict:
        return {
            "x": self.position[0],
            "y": self.position[1],
            "f_v": self.f_v,
            "f_h": self.f_h,
            "angle_v": self.angle_v,
            "angle_h": self.angle_h,
            "confidence": self.confidence,
        }


@dataclass(frozen=True)
class DirectionStatistics:
    mode: float
    mean: float
    std: float
    angle_mean: float
    angle_std: float
    count: int
    bin_edges: list[float] = field(default_factory=list)
    counts: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "mean": self.mean,
            "std": self.std,
            "angle_mean": self.angle_mean,
            "angle_std": self.angle_std,
            "count": self.count,
            "histogram": {"bin_edges": self.bin_edges, "counts": self.counts},
        }

    @classmethod
    def from_dict(cls, data: dict) -> DirectionStatistics:
        return cls(
            mode=data["mode"],
            mean=data["mean"],
            std=data["std"],
            angle_mean=data["angle_mean"],
            angle_std=data["angle_std"],
            count=int(data["count"]),
            bin_edges=list(data["histogram"]["bin_edges"]),
            counts=[int(c) for c in data["histogram"]["counts"]],
        )


@dataclass(frozen=True)
class CountStatistics:
    """Histogram statistics per thread direction."""

    vertical: DirectionStatistics
    horizontal: DirectionStatistics
    bin_width: float
    total: int

    def to_dict(self) -> dict:
        return {
            "vertical": self.vertical.to_dict(),
            "horizontal": self.horizontal.to_dict(),
            "bin_width": self.bin_width,
            "total": self.total,
        }

    @classmethod
    def from_dict(cls, data: dict) -> CountStatistics:
        return cls(
            vertical=DirectionStatistics.from_dict(data["vertical"]),
            horizontal=DirectionStatistics.from_dict(data["horizontal"]),
            bin_width=data["bin_width"],
            total=int(data["total"]),
        )


def _confidence(ratio: float) -> float:
    if ratio <= 0:
        return 0.0
    z = CONFIDENCE_SLOPE * (math.log(ratio) - math.log(CONFIDENCE_MIDPOINT))
    return 1.0 / (1.0 + math.exp(-z))


def _sector_peak(
    magnitude: np.ndarray,
    sector: np.ndarray,
    centre: int,
    bin_width: float,
) -> tuple[float, float, float] | None:
    """(fx, fy, peak/median) of the strongest bin in ``sector``."""
    if not np.any(sector):
        return None
    masked = np.where(sector, magnitude, -np.inf)
    row, col = np.unravel_index(np.argmax(masked), masked.shape)
    peak = magnitude[row, col]
    median = float(np.median(magnitude[sector]))
    if peak <= 0:
        return None
    ratio = math.inf if median <= 0 else float(peak / median)
    r, c = refine_peak(magnitude, int(row), int(col))
    return ((c - centre) * bin_width, (r - centre) * bin_width, ratio)


def swatch_count(
    image: ImageGrid,
    swatch: Swatch,
    n_dft: int = 1024,
    dc_radius: float = 3.0,
    rel_threshold: float = 4.0,
) -> SwatchMeasurement:
    """Count threads in one swatch.

    Confidence is the logistic of ``ln(peak / sector median)``, the smaller of
    the two directions. A sector whose peak does not reach ``rel_threshold``
    times its median leaves both frequencies unset with confidence 0.
    """
    height, width = image.shape
    if swatch.size < MIN_SWATCH_PX or swatch.row + swatch.size > height or swatch.col + swatch.size > width:
        raise ImageTooSmallError(
            f"swatch {swatch} does not fit a {height}x{width} image",
            swatch=[swatch.row, swatch.col, swatch.size],
            image_shape=[height, width],
        )
    if swatch.size > n_dft:
        raise ValueError(f"swatch side {swatch.size} px exceeds n_dft={n_dft}")
    patch = image.crop(swatch.row, swatch.col, swatch.size, swatch.size)
    patch = patch - patch.mean()
    w = window_1d("blackman-harris", swatch.size)
    magnitude = fft.fftshift(np.abs(fft.fft2(patch * np.outer(w, w), s=(n_dft, n_dft))))

    bin_width = image.resolution / n_dft
    centre = n_dft // 2
    f = (np.arange(n_dft) - centre) * bin_width
    fx, fy = np.meshgrid(f, f, indexing="xy")
    off_dc = np.hypot(fx, fy) > dc_radius
    vertical = off_dc & (fx > 0) & (np.abs(fy) <= fx)
    horizontal = off_dc & (fy > 0) & (np.abs(fx) <= fy)

    v_peak = _sector_peak(magnitude, vertical, centre, bin_width)
    h_peak = _sector_peak(magnitude, horizontal, centre, bin_width)
    position = swatch.centre
    if v_peak is None or h_peak is None or min(v_peak[2], h_peak[2]) < rel_threshold:
        return SwatchMeasurement(position, None, None, 0.0, 0.0, 0.0)

    vx, vy, v_ratio = v_peak
    hx, hy, h_ratio = h_peak
    return SwatchMeasurement(
        position=position,
        f_v=float(math.hypot(vx, vy)),
        f_h=float(math.hypot(hx, hy)),
        angle_v=math.degrees(math.atan2(vy, vx)),
        angle_h=math.degrees(math.atan2(-hx, hy)),
        confidence=min(_confidence(v_ratio), _confidence(h_ratio)),
    )


def swatch_grid(shape: tuple[int, int], size: int, overlap_fraction: float) -> list[Swatch]:
    """Row-major swatches of side ``size`` stepping ``size * (1 - overlap)``."""
    height, width = shape
    if height < size or width < size:
        raise ImageTooSmallError(
            f"image {height}x{width} px is smaller than one {size} px swatch",
            image_shape=[height, width],
            swatch=size,
        )
    step = max(1, round(size * (1 - overlap_fraction)))
    return [
        Swatch(row, col, size) for row in range(0, height - size + 1, step) for col in range(0, width - size + 1, step)
    ]


def count_maps(
    image: ImageGrid,
    swatch_size: float = 1.0,
    overlap_fraction: float = 0.5,
    n_dft: int = 1024,
    dc_radius: float = 3.0,
    rel_threshold: float = 4.0,
    workers: int = 1,
) -> list[SwatchMeasurement]:
    """Measure every swatch of ``swatch_size`` cm; results are row-major."""
    if not 0 <= overlap_fraction < 1:
        raise ValueError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    size = int(round(swatch_size * image.resolution))
    swatches = swatch_grid(image.shape, size, overlap_fraction)
    log.debug("swatch.scan", swatches=len(swatches), size_px=size, overlap=overlap_fraction)

    def _one(s: Swatch) -> SwatchMeasurement:
        return swatch_count(image, s, n_dft=n_dft, dc_radius=dc_radius, rel_threshold=rel_threshold)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_one, swatches))
    return [_one(s) for s in swatches]


def _direction(freqs: np.ndarray, angles: np.ndarray, bin_width: float) -> DirectionStatistics:
    idx = np.floor(freqs / bin_width + 0.5).astype(int)
    lo = int(idx.min())
    counts = np.bincount(idx - lo)
    # argmax returns the first maximal bin, i.e. the lowest frequency.
    mode = (lo + int(np.argmax(counts))) * bin_width
    edges = [(lo + k - 0.5) * bin_width for k in range(len(counts) + 1)]
    ddof = 1 if len(freqs) > 1 else 0
    return DirectionStatistics(
        mode=float(mode),
        mean=float(np.mean(freqs)),
        std=float(np.std(freqs, ddof=ddof)),
        angle_mean=float(np.mean(angles)),
        angle_std=float(np.std(angles, ddof=ddof)),
        count=len(freqs),
        bin_edges=[float(e) for e in edges],
        counts=[int(c) for c in counts],
    )


def statistics(
    maps: list[SwatchMeasurement],
    bin_width: float,
    min_confidence: float = 0.5,
) -> CountStatistics:
    """Mode / mean / std per direction over confident measurements.

    Bins are centred on multiples of ``bin_width``; ties in the mode go to the
    lower frequency. Std is the sample standard deviation (0 for one value).
    """
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    confident = [s for s in maps if s.confidence >= min_confidence and s.f_v is not None and s.f_h is not None]
    if not confident:
        raise InsufficientDataError(
            f"no swatch reaches confidence {min_confidence}",
            measurements=len(maps),
            min_confidence=min_confidence,
        )
    f_v = np.array([s.f_v for s in confident])
    f_h = np.array([s.f_h for s in confident])
    return CountStatistics(
        vertical=_direction(f_v, np.array([s.angle_v for s in confident]), bin_width),
        horizontal=_direction(f_h, np.array([s.angle_h for s in confident]), bin_width),
        bin_width=bin_width,
        total=len(confident),
    )
