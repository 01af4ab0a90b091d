"""
Local-maximum peak detection on a DC-centred spectrum.

Peaks are 8-neighbourhood maxima above an adaptive threshold, outside the DC
exclusion radius and in the closed upper half-plane (``f_y > 0``, or ``f_y = 0``
with ``f_x > 0``); conjugate symmetry makes the other half redundant. Peak
positions are refined to sub-bin accuracy with a parabola through the log
values of each peak and its axis neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from canvas_psd.logging import get_logger
from canvas_psd.spectrum import Spectrum2D

log = get_logger("canvas_psd.counting.peaks")

_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class PeakSet:
    """Spectral peaks, strongest first. ``freqs`` rows are (f_x, f_y) in threads/cm."""

    freqs: np.ndarray
    magnitudes: np.ndarray
    bin_width: float

    @classmethod
    def empty(cls, bin_width: float) -> PeakSet:
        return cls(freqs=np.zeros((0, 2)), magnitudes=np.zeros(0), bin_width=bin_width)

    def __len__(self) -> int:
        return len(self.magnitudes)

    @property
    def radii(self) -> np.ndarray:
        return np.hypot(self.freqs[:, 0], self.freqs[:, 1])

    @property
    def angles(self) -> np.ndarray:
        """Angle from the +f_x axis, degrees in (-180, 180]."""
        return np.degrees(np.arctan2(self.freqs[:, 1], self.freqs[:, 0]))

    def symmetric(self) -> tuple[np.ndarray, np.ndarray]:
        """Peaks plus their mirror images through DC."""
        return np.vstack([self.freqs, -self.freqs]), np.concatenate([self.magnitudes, self.magnitudes])

    def to_dict(self) -> dict:
        return {
            "bin_width": self.bin_width,
            "peaks": [
                {"freq": [float(f[0]), float(f[1])], "magnitude": float(m)}
                for f, m in zip(self.freqs, self.magnitudes, strict=True)
            ],
        }


def subbin_offset(left: float, centre: float, right: float) -> float:
    """Vertex of the parabola through three log samples, clipped to half a bin."""
    l, c, r = (np.log(max(v, _TINY)) for v in (left, centre, right))
    denom = l - 2 * c + r
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (l - r) / denom, -0.5, 0.5))


def refine_peak(values: np.ndarray, row: int, col: int) -> tuple[float, float]:
    """Fractional (row, col) of a local maximum."""
    rows, cols = values.shape
    dr = dc = 0.0
    if 0 < row < rows - 1:
        dr = subbin_offset(values[row - 1, col], values[row, col], values[row + 1, col])
    if 0 < col < cols - 1:
        dc = subbin_offset(values[row, col - 1], values[row, col], values[row, col + 1])
    return row + dr, col + dc


def detect_peaks(
    psd: Spectrum2D,
    dc_radius: float = 3.0,
    min_separation: float = 1.0,
    rel_threshold: float = 4.0,
    floor: float = 1e-6,
    max_peaks: int = 200,
) -> PeakSet:
    """Local maxima of ``psd`` above ``rel_threshold`` times the off-DC median.

    ``floor`` (relative to the strongest off-DC value) keeps round-off ripple of
    clean spectra from counting as peaks. Peaks are pruned greedily in
    descending magnitude so no two kept peaks are closer than
    ``min_separation``.
    """
    values = psd.values
    radius = psd.radius()
    off_dc = radius > dc_radius
    if not np.any(off_dc):
        return PeakSet.empty(psd.bin_width)
    background = values[off_dc]
    strongest = float(background.max())
    if strongest <= 0:
        return PeakSet.empty(psd.bin_width)
    threshold = max(rel_threshold * float(np.median(background)), floor * strongest, _TINY)

    footprint = ndimage.generate_binary_structure(2, 2)
    is_max = ndimage.maximum_filter(values, footprint=footprint, mode="nearest") == values
    centre = psd.center
    row_idx, col_idx = np.indices(values.shape)
    upper = (row_idx > centre) | ((row_idx == centre) & (col_idx > centre))
    rows, cols = np.nonzero(is_max & off_dc & upper & (values >= threshold))
    if rows.size == 0:
        return PeakSet.empty(psd.bin_width)

    mags = values[rows, cols]
    order = np.argsort(-mags, kind="stable")
    rows, cols, mags = rows[order], cols[order], mags[order]
    freqs = np.array([psd.to_freq(*refine_peak(values, r, c)) for r, c in zip(rows, cols, strict=True)])

    tree = cKDTree(freqs)
    suppressed = np.zeros(len(freqs), dtype=bool)
    keep: list[int] = []
    for i in range(len(freqs)):
        if suppressed[i]:
            continue
        keep.append(i)
        if len(keep) == max_peaks:
            break
        for j in tree.query_ball_point(freqs[i], r=min_separation - 1e-12):
            if j > i:
                suppressed[j] = True

    log.debug("peaks.detected", candidates=int(rows.size), kept=len(keep), threshold=threshold)
    return PeakSet(freqs=freqs[keep], magnitudes=mags[keep], bin_width=psd.bin_width)
