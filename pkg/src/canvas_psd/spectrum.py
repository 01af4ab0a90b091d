"""
Windowed segmentation, 2-D periodograms and the averaged periodogram.

An image is cut into N x N segments on the full 2-D grid of offsets
``(r1*D, r2*D)``; segments that would cross the image border are discarded.
Every segment is multiplied by a separable window, zero-padded to
``N_DFT x N_DFT`` and transformed; its periodogram is ``|I_r|^2 / (N U)``
with ``U = 1`` unless window-power normalisation is requested. The averaged
periodogram is the arithmetic mean over all K segments, accumulated in segment
index order so results are bit-identical for any worker count.

Output spectra are DC-centred (DC at index ``N_DFT // 2``); rows index the
vertical frequency f_y and columns the horizontal frequency f_x, both in
threads/cm.
"""

from __future__ import annotations

from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import fft, ndimage, signal

from canvas_psd.errors import ImageTooSmallError
from canvas_psd.logging import get_logger

log = get_logger("canvas_psd.spectrum")

WindowName = Literal["blackman-harris", "hann", "rectangular"]

# Names understood by scipy.signal.get_window.
_SCIPY_WINDOW: dict[str, str] = {
    "blackman-harris": "blackmanharris",
    "hann": "hann",
    "rectangular": "boxcar",
}

# Main-lobe half-width of each window, in units of 1/N cycles per pixel.
MAINLOBE_HALF_WIDTH: dict[str, float] = {
    "blackman-harris": 4.0,
    "hann": 2.0,
    "rectangular": 1.0,
}


# -----------------------------------------------------------------------------
# Domain types
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ImageGrid:
    """Grayscale intensity raster with its physical resolution (pixels per cm)."""

    pixels: np.ndarray
    resolution: float
    origin_label: str = ""

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.ndim != 2 or min(pixels.shape) < 2:
            raise ValueError(f"image must be 2-D with both dimensions >= 2, got shape {pixels.shape}")
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if not np.all(np.isfinite(pixels)):
            raise ValueError("image contains non-finite values")
        if pixels.min() < 0:
            raise ValueError("image intensities must be nonnegative")
        object.__setattr__(self, "pixels", pixels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def size_cm(self) -> tuple[float, float]:
        """(width, height) in cm."""
        return (self.shape[1] / self.resolution, self.shape[0] / self.resolution)

    def crop(self, row: int, col: int, height: int, width: int) -> np.ndarray:
        return self.pixels[row : row + height, col : col + width]


class SegmentationPlan(BaseModel):
    """Segment side ``n``, displacement ``d``, window and transform size ``n_dft`` (pixels)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n: int = Field(default=400, ge=1, description="Segment side N (px)")
    d: int = Field(default=100, ge=1, description="Displacement D between segments (px)")
    window: WindowName = Field(default="blackman-harris", description="Separable window")
    n_dft: int = Field(default=2048, ge=1, description="Transform size N_DFT (px)")
    normalize_window: bool = Field(
        default=False,
        description="Divide by U = mean(w^2) instead of fixing U = 1",
    )

    @model_validator(mode="after")
    def _ordered(self) -> SegmentationPlan:
        if not (0 < self.d <= self.n <= self.n_dft):
            raise ValueError(f"plan requires 0 < D <= N <= N_DFT, got D={self.d}, N={self.n}, N_DFT={self.n_dft}")
        return self

    @property
    def overlap_ratio(self) -> float:
        """``s = (N - D) / D``."""
        return (self.n - self.d) / self.d


PLAN_PRESETS: dict[str, SegmentationPlan] = {
    "standard": SegmentationPlan(n=400, d=100, window="blackman-harris", n_dft=2048),
    "twill": SegmentationPlan(n=400, d=50, window="blackman-harris", n_dft=400),
}


def plan_preset(name: str) -> SegmentationPlan:
    try:
        return PLAN_PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown plan preset {name!r}; choose from {sorted(PLAN_PRESETS)}") from None


@dataclass(frozen=True, eq=False)
class Spectrum2D:
    """DC-centred nonnegative spectral raster; ``bin_width`` is threads/cm per bin."""

    values: np.ndarray
    bin_width: float
    segment_count: int = 1
    window: str = "rectangular"
    segment_size: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_dft(self) -> int:
        return self.values.shape[0]

    @property
    def center(self) -> int:
        return self.n_dft // 2

    @property
    def freqs(self) -> np.ndarray:
        """Frequency of every row / column index (threads/cm), monotone increasing."""
        return (np.arange(self.n_dft) - self.center) * self.bin_width

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """``(FX, FY)`` frequency of every bin."""
        f = self.freqs
        return np.meshgrid(f, f, indexing="xy")

    def radius(self) -> np.ndarray:
        fx, fy = self.grid()
        return np.hypot(fx, fy)

    def to_index(self, freq) -> tuple[float, float]:
        """(row, col) fractional index of a frequency vector (f_x, f_y)."""
        return (self.center + freq[1] / self.bin_width, self.center + freq[0] / self.bin_width)

    def to_freq(self, row: float, col: float) -> tuple[float, float]:
        return ((col - self.center) * self.bin_width, (row - self.center) * self.bin_width)

    def sample(self, freqs: np.ndarray) -> np.ndarray:
        """Bilinear samples at an ``(k, 2)`` array of (f_x, f_y) points."""
        freqs = np.atleast_2d(freqs)
        rows = self.center + freqs[:, 1] / self.bin_width
        cols = self.center + freqs[:, 0] / self.bin_width
        return ndimage.map_coordinates(self.values, [rows, cols], order=1, mode="nearest")

    @property
    def mainlobe_bins(self) -> float:
        """Window main-lobe half-width in DFT bins."""
        if self.segment_size <= 0:
            return 1.0
        return MAINLOBE_HALF_WIDTH.get(self.window, 1.0) * self.n_dft / self.segment_size

    def to_dict(self) -> dict:
        return {
            "n_dft": self.n_dft,
            "bin_width": self.bin_width,
            "segment_count": self.segment_count,
            "window": self.window,
            "segment_size": self.segment_size,
        }


# -----------------------------------------------------------------------------
# Operations
# -----------------------------------------------------------------------------
def window_1d(name: str, n: int) -> np.ndarray:
    """Symmetric 1-D window of length ``n``.

    Blackman-Harris is the 4-term form (0.35875, 0.48829, 0.14128, 0.01168).
    """
    if name not in _SCIPY_WINDOW:
        raise ValueError(f"unknown window {name!r}")
    return signal.get_window(_SCIPY_WINDOW[name], n, fftbins=False)


def make_window(plan: SegmentationPlan) -> np.ndarray:
    """Separable N x N window, outer product of two 1-D windows."""
    w = window_1d(plan.window, plan.n)
    return np.outer(w, w)


def segment_offsets(shape: tuple[int, int], plan: SegmentationPlan) -> list[tuple[int, int]]:
    """Top-left ``(row, col)`` of every full segment, row-major."""
    height, width = shape
    if height < plan.n or width < plan.n:
        raise ImageTooSmallError(
            f"image {height}x{width} px is smaller than one {plan.n}x{plan.n} segment",
            image_shape=[height, width],
            segment=plan.n,
        )
    rows = range(0, height - plan.n + 1, plan.d)
    cols = range(0, width - plan.n + 1, plan.d)
    return [(r, c) for r in rows for c in cols]


def segment_count(shape: tuple[int, int], plan: SegmentationPlan) -> int:
    """``K = (floor((H - N) / D) + 1) * (floor((W - N) / D) + 1)``."""
    height, width = shape
    if height < plan.n or width < plan.n:
        return 0
    return ((height - plan.n) // plan.d + 1) * ((width - plan.n) // plan.d + 1)


def iter_segments(image: ImageGrid, plan: SegmentationPlan) -> Iterator[np.ndarray]:
    """Windowed N x N segments in row-major offset order, cropped on demand."""
    w = make_window(plan)
    for r, c in segment_offsets(image.shape, plan):
        yield image.crop(r, c, plan.n, plan.n) * w


def extract_segments(image: ImageGrid, plan: SegmentationPlan) -> list[np.ndarray]:
    """Every windowed segment at once; prefer iter_segments on large images."""
    return list(iter_segments(image, plan))


def periodogram(
    segment: np.ndarray,
    n_dft: int,
    resolution: float = 1.0,
    u: float = 1.0,
    window: str = "rectangular",
) -> Spectrum2D:
    """``|DFT_{N_DFT}(segment)|^2 / (N U)``, DC-centred.

    ``resolution`` (px/cm) only sets the frequency axis; with the default of 1
    the axis is in cycles per pixel.
    """
    segment = np.asarray(segment, dtype=np.float64)
    n = segment.shape[0]
    if segment.ndim != 2 or segment.shape[1] != n:
        raise ValueError(f"segment must be square, got shape {segment.shape}")
    if n > n_dft:
        raise ValueError(f"segment side {n} exceeds N_DFT={n_dft}")
    spectrum = fft.fft2(segment, s=(n_dft, n_dft))
    values = fft.fftshift((spectrum.real**2 + spectrum.imag**2) / (n * u))
    return Spectrum2D(
        values=values,
        bin_width=resolution / n_dft,
        segment_count=1,
        window=window,
        segment_size=n,
    )


def window_power(plan: SegmentationPlan) -> float:
    """``U``: 1, or ``mean(w^2)`` when the plan normalises the window."""
    if not plan.normalize_window:
        return 1.0
    return float(np.mean(make_window(plan) ** 2))


def averaged_periodogram(image: ImageGrid, plan: SegmentationPlan, workers: int = 1) -> Spectrum2D:
    """Mean of all segment periodograms, reduced in segment index order.

    At most ``workers`` windowed segments and their spectra are alive at once.
    """
    offsets = segment_offsets(image.shape, plan)
    w = make_window(plan)
    u = window_power(plan)
    k = len(offsets)
    log.debug("spectrum.segments", count=k, n=plan.n, d=plan.d, n_dft=plan.n_dft, overlap=plan.overlap_ratio)

    def _one(offset: tuple[int, int]) -> np.ndarray:
        segment = image.crop(offset[0], offset[1], plan.n, plan.n) * w
        return periodogram(segment, plan.n_dft, image.resolution, u, plan.window).values

    total = np.zeros((plan.n_dft, plan.n_dft))
    chunk = max(1, workers)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for start in range(0, k, chunk):
                # map() yields in submission order, which fixes the summation order.
                for values in pool.map(_one, offsets[start : start + chunk]):
                    total += values
    else:
        for offset in offsets:
            total += _one(offset)

    return Spectrum2D(
        values=total / k,
        bin_width=image.resolution / plan.n_dft,
        segment_count=k,
        window=plan.window,
        segment_size=plan.n,
    )
