"""
Four-feature PSD fingerprint and pairwise canvas comparison.

The averaged periodogram of a canvas is summarised by four categoricals, each
derived from a single raw metric and a threshold in
:class:`~canvas_psd.config.ClassifierConfig`:

- edge shape: Diamond, or Cross when far peaks are elongated (median
  level-set elongation)
- diagonal connection: whether the valley between the first diagonal peak
  and an axis fills in (ridge ratio along the horizontal or vertical path)
- centre shape: C, O (a dip between DC and the first diagonal peak) or Plain
  (no distinct diagonal maximum)
- axis emphasis: energy spread along the f_x = 0 line (Vertical) or the
  f_y = 0 line (Horizontal), measured as the axis-to-background median ratio

Metrics are stored with every fingerprint; :func:`categories_from_metrics`
re-derives the categoricals from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import StrEnum

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from canvas_psd.config import AnalysisConfig, ClassifierConfig, PeakDetectorConfig
from canvas_psd.counting.peaks import PeakSet, detect_peaks
from canvas_psd.counting.triangle import TriangleFit, fit_spectral_triangle
from canvas_psd.errors import FitFailedError
from canvas_psd.logging import get_logger
from canvas_psd.spectrum import ImageGrid, SegmentationPlan, Spectrum2D, averaged_periodogram

log = get_logger("canvas_psd.features")

# Far peaks measured for the edge shape, strongest first.
EDGE_PEAK_COUNT = 8
COUNT_TOLERANCE = 1.0
MIN_EQUAL_FEATURES = 3


class EdgeShape(StrEnum):
    DIAMOND = "Diamond"
    CROSS = "Cross"


class DiagonalConnection(StrEnum):
    HORIZONTAL = "Horizontal"
    VERTICAL = "Vertical"
    NONE = "None"


class CenterShape(StrEnum):
    C = "C"
    O = "O"  # noqa: E741
    PLAIN = "Plain"


class AxisEmphasis(StrEnum):
    VERTICAL = "Vertical"
    HORIZONTAL = "Horizontal"
    BOTH = "Both"
    NONE = "None"


class Verdict(StrEnum):
    MATCH = "Match"
    NO_MATCH = "NoMatch"
    CONFLICT = "Conflict"
    FEATURE_ONLY = "FeatureOnly"


_SWAP_AXIS = {
    AxisEmphasis.VERTICAL: AxisEmphasis.HORIZONTAL,
    AxisEmphasis.HORIZONTAL: AxisEmphasis.VERTICAL,
}
_SWAP_DIAGONAL = {
    DiagonalConnection.VERTICAL: DiagonalConnection.HORIZONTAL,
    DiagonalConnection.HORIZONTAL: DiagonalConnection.VERTICAL,
}

FEATURE_FIELDS = ("edge_shape", "diagonal_connection", "center_shape", "axis_emphasis")


@dataclass(frozen=True)
class FeatureFingerprint:
    edge_shape: EdgeShape
    diagonal_connection: DiagonalConnection
    center_shape: CenterShape
    axis_emphasis: AxisEmphasis
    f_v: float | None = None
    f_h: float | None = None
    metrics: dict[str, float] = field(default_factory=dict)

    @property
    def has_counts(self) -> bool:
        return self.f_v is not None and self.f_h is not None

    def rotated(self) -> FeatureFingerprint:
        """The fingerprint of the same canvas turned by 90 degrees."""
        return replace(
            self,
            f_v=self.f_h,
            f_h=self.f_v,
            axis_emphasis=_SWAP_AXIS.get(self.axis_emphasis, self.axis_emphasis),
            diagonal_connection=_SWAP_DIAGONAL.get(self.diagonal_connection, self.diagonal_connection),
        )

    def to_dict(self) -> dict:
        return {
            "edge_shape": self.edge_shape.value,
            "diagonal_connection": self.diagonal_connection.value,
            "center_shape": self.center_shape.value,
            "axis_emphasis": self.axis_emphasis.value,
            "f_v": self.f_v,
            "f_h": self.f_h,
            "metrics": dict(sorted(self.metrics.items())),
        }

    @classmethod
    def from_dict(cls, data: dict) -> FeatureFingerprint:
        return cls(
            edge_shape=EdgeShape(data["edge_shape"]),
            diagonal_connection=DiagonalConnection(data["diagonal_connection"]),
            center_shape=CenterShape(data["center_shape"]),
            axis_emphasis=AxisEmphasis(data["axis_emphasis"]),
            f_v=data.get("f_v"),
            f_h=data.get("f_h"),
            metrics={k: float(v) for k, v in data.get("metrics", {}).items()},
        )


@dataclass(frozen=True)
class MatchReport:
    """Count agreement and feature agreement, reported separately."""

    count_match: bool
    pairing: str
    feature_matches: dict[str, bool]
    verdict: Verdict
    f_v_difference: float | None = None
    f_h_difference: float | None = None

    @property
    def equal_features(self) -> int:
        return sum(self.feature_matches.values())

    def to_dict(self) -> dict:
        return {
            "count_match": self.count_match,
            "pairing": self.pairing,
            "feature_matches": self.feature_matches,
            "equal_features": self.equal_features,
            "verdict": self.verdict.value,
            "f_v_difference": self.f_v_difference,
            "f_h_difference": self.f_h_difference,
        }


# -----------------------------------------------------------------------------
# Decisions from metrics
# -----------------------------------------------------------------------------
def _edge_from(metrics: dict[str, float], cfg: ClassifierConfig) -> EdgeShape:
    return EdgeShape.CROSS if metrics["elongation"] > cfg.elongation else EdgeShape.DIAMOND


def _diagonal_from(metrics: dict[str, float], cfg: ClassifierConfig) -> DiagonalConnection:
    ridge_h = metrics["ridge_horizontal"]
    ridge_v = metrics["ridge_vertical"]
    h_flag = ridge_h > cfg.ridge
    v_flag = ridge_v > cfg.ridge
    if h_flag and v_flag:
        return DiagonalConnection.HORIZONTAL if ridge_h >= ridge_v else DiagonalConnection.VERTICAL
    if h_flag:
        return DiagonalConnection.HORIZONTAL
    if v_flag:
        return DiagonalConnection.VERTICAL
    return DiagonalConnection.NONE


def _center_from(metrics: dict[str, float], cfg: ClassifierConfig) -> CenterShape:
    if metrics["prominence"] < cfg.prominence:
        return CenterShape.PLAIN
    return CenterShape.O if metrics["dip"] >= cfg.dip else CenterShape.C


def _axes_from(metrics: dict[str, float], cfg: ClassifierConfig) -> AxisEmphasis:
    v = metrics["axis_ratio_vertical"] > cfg.axis_ratio
    h = metrics["axis_ratio_horizontal"] > cfg.axis_ratio
    if v and h:
        return AxisEmphasis.BOTH
    if v:
        return AxisEmphasis.VERTICAL
    if h:
        return AxisEmphasis.HORIZONTAL
    return AxisEmphasis.NONE


def categories_from_metrics(
    metrics: dict[str, float],
    cfg: ClassifierConfig | None = None,
) -> tuple[EdgeShape, DiagonalConnection, CenterShape, AxisEmphasis]:
    """Re-derive all four categoricals from stored metrics."""
    cfg = cfg or ClassifierConfig()
    return _edge_from(metrics, cfg), _diagonal_from(metrics, cfg), _center_from(metrics, cfg), _axes_from(metrics, cfg)


# -----------------------------------------------------------------------------
# Classifiers
# -----------------------------------------------------------------------------
def first_diagonal_peak(peaks: PeakSet, min_angle_deg: float = 10.0) -> int | None:
    """Index of the strongest peak at least ``min_angle_deg`` away from both axes."""
    if len(peaks) == 0:
        return None
    folded = np.mod(np.abs(peaks.angles), 90.0)
    off_axis = np.minimum(folded, 90.0 - folded) >= min_angle_deg
    candidates = np.flatnonzero(off_axis)
    if candidates.size == 0:
        return None
    return int(candidates[np.argmax(peaks.magnitudes[candidates])])


def _path(start: np.ndarray, end: np.ndarray, step: float) -> np.ndarray:
    count = max(2, int(math.ceil(np.linalg.norm(end - start) / step)) + 1)
    t = np.linspace(0.0, 1.0, count)[:, np.newaxis]
    return start + t * (end - start)


def _elongation(psd: Spectrum2D, freq: np.ndarray, half: int) -> float:
    row, col = (int(round(v)) for v in psd.to_index(freq))
    r0, r1 = max(0, row - half), min(psd.n_dft, row + half + 1)
    c0, c1 = max(0, col - half), min(psd.n_dft, col + half + 1)
    box = psd.values[r0:r1, c0:c1]
    peak = psd.values[row, col]
    background = box.min()
    level = background + 0.5 * (peak - background)
    labels, _ = ndimage.label(box >= level)
    component = labels == labels[row - r0, col - c0]
    rows = np.flatnonzero(component.any(axis=1))
    cols = np.flatnonzero(component.any(axis=0))
    extent_r = rows[-1] - rows[0] + 1
    extent_c = cols[-1] - cols[0] + 1
    return float(max(extent_r, extent_c) / min(extent_r, extent_c))


def classify_edge_shape(
    psd: Spectrum2D,
    peaks: PeakSet,
    cfg: ClassifierConfig | None = None,
) -> tuple[EdgeShape, dict[str, float]]:
    """Diamond or Cross from the median 50%-level elongation of far peaks.

    Far peaks lie beyond ``far_factor`` times the innermost peak radius. With
    none, the strongest peak stands in and ``edge_fallback`` is set.
    """
    cfg = cfg or ClassifierConfig()
    if len(peaks) == 0:
        metrics = {"elongation": 1.0, "edge_peaks": 0.0, "edge_fallback": 1.0}
        return _edge_from(metrics, cfg), metrics
    radii = peaks.radii
    far = np.flatnonzero(radii > cfg.far_factor * radii.min())[:EDGE_PEAK_COUNT]
    fallback = far.size == 0
    if fallback:
        far = np.array([0])

    sym, _ = peaks.symmetric()
    tree = cKDTree(sym) if len(sym) > 1 else None
    ratios = []
    for i in far:
        spacing = 8 * psd.bin_width
        if tree is not None:
            dist, _ = tree.query(peaks.freqs[i], k=2)
            spacing = float(dist[1])
        half = max(2, int(0.5 * spacing / psd.bin_width))
        ratios.append(_elongation(psd, peaks.freqs[i], half))
    metrics = {
        "elongation": float(np.median(ratios)),
        "edge_peaks": float(len(ratios)),
        "edge_fallback": 1.0 if fallback else 0.0,
    }
    return _edge_from(metrics, cfg), metrics


def classify_diagonal_connection(
    psd: Spectrum2D,
    peaks: PeakSet,
    cfg: ClassifierConfig | None = None,
) -> tuple[DiagonalConnection, dict[str, float]]:
    """Ridge ratios from the first diagonal peak horizontally to f_x = 0 and vertically to f_y = 0."""
    cfg = cfg or ClassifierConfig()
    index = first_diagonal_peak(peaks, cfg.diagonal_min_angle_deg)
    if index is None:
        metrics = {"ridge_horizontal": 0.0, "ridge_vertical": 0.0}
        return DiagonalConnection.NONE, metrics
    p = peaks.freqs[index]
    value = float(psd.sample(p)[0])
    step = 0.5 * psd.bin_width
    horizontal = psd.sample(_path(p, np.array([0.0, p[1]]), step))
    vertical = psd.sample(_path(p, np.array([p[0], 0.0]), step))
    metrics = {
        "ridge_horizontal": float(horizontal.min() / value) if value > 0 else 0.0,
        "ridge_vertical": float(vertical.min() / value) if value > 0 else 0.0,
    }
    return _diagonal_from(metrics, cfg), metrics


def classify_center(
    psd: Spectrum2D,
    peaks: PeakSet,
    dc_radius: float = 3.0,
    cfg: ClassifierConfig | None = None,
) -> tuple[CenterShape, dict[str, float]]:
    """C, O or Plain from the profile between the DC boundary and the first diagonal peak."""
    cfg = cfg or ClassifierConfig()
    index = first_diagonal_peak(peaks, cfg.diagonal_min_angle_deg)
    if index is None:
        metrics = {"prominence": 0.0, "dip": 0.0}
        return CenterShape.PLAIN, metrics
    p = peaks.freqs[index]
    radius = float(np.linalg.norm(p))
    start = p * min(dc_radius / radius, 1.0)
    profile = psd.sample(_path(start, p, 0.5 * psd.bin_width))
    peak = float(profile[-1])
    if peak <= 0:
        metrics = {"prominence": 0.0, "dip": 0.0}
        return CenterShape.PLAIN, metrics
    prominence = (peak - float(profile.min())) / peak

    dip = 0.0
    interior = profile[1:-1]
    if interior.size:
        is_min = (interior < profile[:-2]) & (interior <= profile[2:])
        if np.any(is_min):
            depth = min(profile[0], profile[-1]) - interior[is_min].min()
            dip = max(0.0, float(depth) / peak)
    metrics = {"prominence": float(prominence), "dip": dip}
    return _center_from(metrics, cfg), metrics


def classify_axes(
    psd: Spectrum2D,
    peaks: PeakSet,
    dc_radius: float = 3.0,
    floor: float = 1e-6,
    cfg: ClassifierConfig | None = None,
) -> tuple[AxisEmphasis, dict[str, float]]:
    """Median along each axis line over the median off-axis background.

    DC and the main lobes of detected axis peaks are excluded. Values are
    floored at ``floor`` times the strongest off-DC value so clean spectra
    compare round-off to round-off.
    """
    cfg = cfg or ClassifierConfig()
    fx, fy = psd.grid()
    radius = np.hypot(fx, fy)
    off_dc = radius > dc_radius
    if not np.any(off_dc):
        metrics = {"axis_ratio_vertical": 1.0, "axis_ratio_horizontal": 1.0}
        return AxisEmphasis.NONE, metrics
    lobe = max(1.0, psd.mainlobe_bins) * psd.bin_width
    values = np.maximum(psd.values, floor * float(psd.values[off_dc].max()))

    near_peak = np.zeros(values.shape, dtype=bool)
    sym, _ = peaks.symmetric()
    for px, py in sym:
        if min(abs(px), abs(py)) <= lobe:
            near_peak |= np.hypot(fx - px, fy - py) <= lobe

    background = values[off_dc & (np.abs(fx) > lobe) & (np.abs(fy) > lobe)]
    reference = float(np.median(background)) if background.size else float(np.median(values[off_dc]))
    c = psd.center
    column = values[:, c][(off_dc & ~near_peak)[:, c]]
    row = values[c, :][(off_dc & ~near_peak)[c, :]]
    metrics = {
        "axis_ratio_vertical": float(np.median(column) / reference) if column.size else 1.0,
        "axis_ratio_horizontal": float(np.median(row) / reference) if row.size else 1.0,
    }
    return _axes_from(metrics, cfg), metrics


# -----------------------------------------------------------------------------
# Fingerprint and comparison
# -----------------------------------------------------------------------------
def fingerprint_spectrum(
    psd: Spectrum2D,
    peaks: PeakSet,
    fit: TriangleFit | None,
    detector: PeakDetectorConfig | None = None,
    cfg: ClassifierConfig | None = None,
) -> FeatureFingerprint:
    """Classify an already computed spectrum; counts come from ``fit`` when given."""
    detector = detector or PeakDetectorConfig()
    cfg = cfg or ClassifierConfig()
    edge, m_edge = classify_edge_shape(psd, peaks, cfg)
    diagonal, m_diag = classify_diagonal_connection(psd, peaks, cfg)
    centre, m_centre = classify_center(psd, peaks, detector.dc_radius, cfg)
    axes, m_axes = classify_axes(psd, peaks, detector.dc_radius, detector.floor, cfg)
    return FeatureFingerprint(
        edge_shape=edge,
        diagonal_connection=diagonal,
        center_shape=centre,
        axis_emphasis=axes,
        f_v=fit.f_v if fit is not None else None,
        f_h=fit.f_h if fit is not None else None,
        metrics={**m_edge, **m_diag, **m_centre, **m_axes},
    )


def fingerprint(
    image: ImageGrid,
    plan: SegmentationPlan | None = None,
    p: int = 1,
    config: AnalysisConfig | None = None,
    workers: int = 1,
) -> FeatureFingerprint:
    """averaged_periodogram -> detect_peaks -> fit_spectral_triangle -> classifiers.

    A failed triangle fit leaves the frequencies unset; the categoricals are
    still produced.
    """
    config = config or AnalysisConfig()
    plan = plan or config.plan
    det = config.detector
    psd = averaged_periodogram(image, plan, workers=workers)
    peaks = detect_peaks(psd, det.dc_radius, det.min_separation, det.rel_threshold, det.floor, det.max_peaks)
    try:
        fit = fit_spectral_triangle(peaks, p=p, config=config.fit)
    except FitFailedError as exc:
        log.warning("features.fit_failed", reason=str(exc), peaks=len(peaks))
        fit = None
    return fingerprint_spectrum(psd, peaks, fit, det, config.classifier)


def _pairing(
    a: FeatureFingerprint,
    b: FeatureFingerprint,
    name: str,
    tolerance: float,
) -> tuple[tuple, MatchReport]:
    matches = {f: getattr(a, f) == getattr(b, f) for f in FEATURE_FIELDS}
    equal = sum(matches.values())
    if a.has_counts and b.has_counts:
        dv = abs(a.f_v - b.f_v)
        dh = abs(a.f_h - b.f_h)
        count_ok = dv <= tolerance and dh <= tolerance
        distance = max(dv, dh)
        if count_ok and equal >= MIN_EQUAL_FEATURES:
            verdict = Verdict.MATCH
        elif equal >= MIN_EQUAL_FEATURES:
            verdict = Verdict.CONFLICT
        else:
            verdict = Verdict.NO_MATCH
    else:
        dv = dh = None
        count_ok = False
        distance = math.inf
        verdict = Verdict.FEATURE_ONLY
    report = MatchReport(
        count_match=count_ok,
        pairing=name,
        feature_matches=matches,
        verdict=verdict,
        f_v_difference=dv,
        f_h_difference=dh,
    )
    return (count_ok, equal, -distance), report


def compare(a: FeatureFingerprint, b: FeatureFingerprint, tolerance: float = COUNT_TOLERANCE) -> MatchReport:
    """Compare two canvases, also trying ``b`` turned by 90 degrees; the better pairing wins.

    Counts agree when both densities are within ``tolerance`` threads/cm.
    Match needs agreeing counts and at least three equal features; Conflict
    is equal features with counts too far apart.
    """
    direct = _pairing(a, b, "direct", tolerance)
    rotated = _pairing(a, b.rotated(), "rotated", tolerance)
    return max(direct, rotated, key=lambda item: item[0])[1]
