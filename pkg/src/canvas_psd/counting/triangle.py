"""
Spectral-triangle fit: from a peak lattice to ``m, n, f_v, f_h``.

The spectrum of a weave lives on the reciprocal lattice spanned by

    a_bar = (f_v/m, -n f_h/(m p))      b_bar = (0, f_h/p)

Inside it sits a right triangle with one vertex at DC, ``V1 = (f_v, 0)`` on the
f_x axis and ``V2 = (0, n f_h/p)`` on the f_y axis. The hypotenuse ``V2 -> V1``
passes through ``m - 1`` interior peaks spaced by ``a_bar`` and the f_y leg
through ``n - 1`` interior peaks spaced by ``b_bar``.

The fit finds the lattice first and reads the triangle off it, so vertices and
interior points never need to be detected themselves (the basic-shape spectrum
can null any of them):

1. Every pair of the strongest peaks spans a candidate lattice. Each one is
   reduced, scored by the magnitude-weighted share of peaks it explains
   (coverage) and refitted by least squares.
2. Among accepted lattices, those explaining the most strong peaks stay in the
   running. The coarsest of them wins unless a finer one explains at least
   ``min_extra_peaks`` more peaks.
3. ``V1`` and ``b_bar`` are the primitive, mutually perpendicular, near-axis
   lattice vectors of smallest index; that index is ``m``, and ``n`` is the
   unique residue with ``(V1 - n b_bar) / m`` on the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from canvas_psd.config import TriangleFitConfig
from canvas_psd.counting.peaks import PeakSet
from canvas_psd.errors import FitFailedError, NoCanonicalFormError
from canvas_psd.lattice import Basis2D, Rect, canonicalize, lattice_points, reciprocal_basis
from canvas_psd.logging import get_logger

log = get_logger("canvas_psd.counting.triangle")

_MAX_REDUCTION_STEPS = 64


@dataclass(frozen=True)
class TriangleFit:
    """Fitted triangle and the weave counts it implies.

    ``f_v = l1`` and ``f_h = p * l2 / n`` (``f_h = p * |b_bar|`` when ``n = 0``).
    """

    m: int
    n: int
    p: int
    l1: float
    l2: float
    f_v: float
    f_h: float
    residual: float
    coverage: float
    a_bar: tuple[float, float]
    b_bar: tuple[float, float]
    supporting: int
    degenerate: bool = False
    accepted: bool = True

    @property
    def v1(self) -> tuple[float, float]:
        return (
            self.m * self.a_bar[0] + self.n * self.b_bar[0],
            self.m * self.a_bar[1] + self.n * self.b_bar[1],
        )

    @property
    def v2(self) -> tuple[float, float]:
        k = self.n if self.n else 1
        return (k * self.b_bar[0], k * self.b_bar[1])

    @property
    def rotation_deg(self) -> float:
        """Angle of the f_v leg from the +f_x axis."""
        vx, vy = self.v1
        return math.degrees(math.atan2(vy, vx))

    def weave_basis(self) -> Basis2D | None:
        """Spatial basis ``a, b`` (cm) in canonical form, or None when the fit is rotated.

        For an unrotated weave this is ``a = [m d_v, 0]``, ``b = [n d_v, p d_h]`` up to
        the choice of ``n`` modulo ``m``.
        """
        spatial = reciprocal_basis(Basis2D.from_vectors(self.a_bar, self.b_bar))
        try:
            return canonicalize(spatial)
        except NoCanonicalFormError:
            return None

    def to_dict(self) -> dict:
        return {
            "m": int(self.m),
            "n": int(self.n),
            "p": int(self.p),
            "l1": float(self.l1),
            "l2": float(self.l2),
            "f_v": float(self.f_v),
            "f_h": float(self.f_h),
            "residual": float(self.residual),
            "coverage": float(self.coverage),
            "a_bar": [float(v) for v in self.a_bar],
            "b_bar": [float(v) for v in self.b_bar],
            "supporting": int(self.supporting),
            "degenerate": bool(self.degenerate),
            "accepted": bool(self.accepted),
            "rotation_deg": float(self.rotation_deg),
            "weave_basis": basis.to_dict() if (basis := self.weave_basis()) is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> TriangleFit:
        return cls(
            m=int(data["m"]),
            n=int(data["n"]),
            p=int(data["p"]),
            l1=float(data["l1"]),
            l2=float(data["l2"]),
            f_v=float(data["f_v"]),
            f_h=float(data["f_h"]),
            residual=float(data["residual"]),
            coverage=float(data["coverage"]),
            a_bar=(float(data["a_bar"][0]), float(data["a_bar"][1])),
            b_bar=(float(data["b_bar"][0]), float(data["b_bar"][1])),
            supporting=int(data["supporting"]),
            degenerate=bool(data.get("degenerate", False)),
            accepted=bool(data.get("accepted", True)),
        )


@dataclass(frozen=True)
class _Lattice:
    """A scored candidate lattice; ``basis`` holds the refitted vectors as columns."""

    basis: np.ndarray
    coverage: float
    residual: float
    supporting: int
    strong: int
    accepted: bool

    @property
    def cell_area(self) -> float:
        return float(abs(np.linalg.det(self.basis)))

    @property
    def spacing(self) -> float:
        return float(np.linalg.norm(self.basis, axis=0).min())


def _tolerance(spacing: float, bin_width: float, config: TriangleFitConfig) -> float:
    return max(config.spacing_tolerance * spacing, 1.5 * bin_width)


def _reduce(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lagrange-Gauss reduction: the two shortest independent lattice vectors."""
    if np.linalg.norm(a) > np.linalg.norm(b):
        a, b = b, a
    for _ in range(_MAX_REDUCTION_STEPS):
        mu = np.rint(np.dot(a, b) / np.dot(a, a))
        b = b - mu * a
        if np.linalg.norm(b) >= np.linalg.norm(a):
            break
        a, b = b, a
    return a, b


def _dedup_key(a: np.ndarray, b: np.ndarray, bin_width: float) -> tuple:
    def oriented(v: np.ndarray) -> tuple[int, int]:
        if v[0] < -bin_width / 2 or (abs(v[0]) <= bin_width / 2 and v[1] < 0):
            v = -v
        return tuple(int(x) for x in np.rint(v / bin_width))

    return tuple(sorted((oriented(a), oriented(b))))


def _score(
    a: np.ndarray, b: np.ndarray, peaks: PeakSet, strong: np.ndarray, config: TriangleFitConfig
) -> _Lattice | None:
    """Coverage, least-squares refit and residual of the lattice spanned by ``a, b``."""
    spacing = float(np.linalg.norm(a))
    tol = _tolerance(spacing, peaks.bin_width, config)
    if spacing <= 2 * tol:
        return None
    basis = np.column_stack([a, b])
    freqs = peaks.freqs
    mags = peaks.magnitudes
    ints = np.rint(np.linalg.solve(basis, freqs.T).T)
    explained = np.linalg.norm(freqs - ints @ basis.T, axis=1) <= tol
    support_ints = ints[explained]
    support = freqs[explained]
    if np.linalg.matrix_rank(support_ints) == 2:
        solution, *_ = np.linalg.lstsq(support_ints, support, rcond=None)
        basis = solution.T
    residual = float(np.sqrt(np.mean(np.sum((support - support_ints @ basis.T) ** 2, axis=1))))
    coverage = float(mags[explained].sum() / mags.sum())
    refit_spacing = float(np.linalg.norm(basis, axis=0).min())
    return _Lattice(
        basis=basis,
        coverage=coverage,
        residual=residual,
        supporting=int(explained.sum()),
        strong=int((explained & strong).sum()),
        accepted=bool(coverage >= config.min_coverage and residual <= config.max_residual * refit_spacing),
    )


def _lattice_candidates(peaks: PeakSet, config: TriangleFitConfig) -> list[_Lattice]:
    """Score the lattice spanned by every independent pair of the strongest peaks."""
    mags = peaks.magnitudes
    strong = mags >= config.strong_fraction * mags.max()
    top = np.argsort(-mags, kind="stable")[: config.basis_peaks]
    seen: set[tuple] = set()
    scored: list[_Lattice] = []
    for pos, i in enumerate(top):
        for j in top[pos + 1 :]:
            u, w = peaks.freqs[i], peaks.freqs[j]
            if Basis2D.from_vectors(u, w).is_degenerate(1e-3):
                continue
            a, b = _reduce(u, w)
            key = _dedup_key(a, b, peaks.bin_width)
            if key in seen:
                continue
            seen.add(key)
            if (lattice := _score(a, b, peaks, strong, config)) is not None:
                scored.append(lattice)
    return scored


def _axis_pair(lattice: _Lattice, config: TriangleFitConfig) -> tuple[np.ndarray, np.ndarray, int] | None:
    """Integer coordinates of ``V1`` and ``b_bar`` and their index ``m``, or None."""
    basis = lattice.basis
    area = lattice.cell_area
    # |V1| |b_bar| = m * area with |b_bar| >= spacing bounds both vectors.
    radius = config.max_m * area / lattice.spacing * 1.05
    points = lattice_points(Basis2D.from_matrix(basis), Rect.square(radius)).points
    lengths = np.hypot(points[:, 0], points[:, 1])
    keep = (lengths > 0) & (lengths <= radius)
    points, lengths = points[keep], lengths[keep]
    ints = np.rint(np.linalg.solve(basis, points.T).T).astype(int)
    primitive = np.gcd(ints[:, 0], ints[:, 1]) == 1
    angles = np.degrees(np.arctan2(points[:, 1], points[:, 0]))
    on_x = np.flatnonzero(primitive & (np.abs(angles) <= config.axis_window_deg))
    on_y = np.flatnonzero(primitive & (np.abs(angles - 90.0) <= config.axis_window_deg))
    if on_x.size == 0 or on_y.size == 0:
        return None

    vx, vy = points[on_x], points[on_y]
    cross = np.abs(vx[:, None, 0] * vy[None, :, 1] - vx[:, None, 1] * vy[None, :, 0])
    index = np.rint(cross / area).astype(int)
    off_right = np.abs(np.abs(angles[on_y][None, :] - angles[on_x][:, None]) - 90.0)
    ok = (off_right <= config.right_angle_tolerance_deg) & (index >= 1) & (index <= config.max_m)
    if not ok.any():
        return None
    rows, cols = np.nonzero(ok)
    size = lengths[on_x][rows] + lengths[on_y][cols]
    best = np.lexsort((size, off_right[rows, cols], index[rows, cols]))[0]
    r, c = rows[best], cols[best]
    return ints[on_x[r]], ints[on_y[c]], int(index[r, c])


def _triangle(lattice: _Lattice, p: int, config: TriangleFitConfig) -> TriangleFit | None:
    pair = _axis_pair(lattice, config)
    if pair is None:
        return None
    v1_ints, b_ints, m = pair
    # (V1 - n b_bar) / m is a lattice vector for exactly one residue n.
    n = next(k for k in range(m) if np.all((v1_ints - k * b_ints) % m == 0))
    basis = lattice.basis
    v1 = basis @ v1_ints
    b_bar = basis @ b_ints
    a_bar = (v1 - n * b_bar) / m
    b_len = float(np.linalg.norm(b_bar))
    l1 = float(np.linalg.norm(v1))
    return TriangleFit(
        m=m,
        n=n,
        p=p,
        l1=l1,
        l2=n * b_len,
        f_v=l1,
        f_h=p * b_len,
        residual=lattice.residual,
        coverage=lattice.coverage,
        a_bar=(float(a_bar[0]), float(a_bar[1])),
        b_bar=(float(b_bar[0]), float(b_bar[1])),
        supporting=lattice.supporting,
        degenerate=n == 0,
        accepted=lattice.accepted,
    )


def _select(accepted: list[_Lattice], config: TriangleFitConfig) -> _Lattice:
    most = max(lat.strong for lat in accepted)
    pool = sorted((lat for lat in accepted if lat.strong == most), key=lambda lat: -lat.cell_area)
    choice = pool[0]
    for lattice in pool[1:]:
        if lattice.supporting >= choice.supporting + config.min_extra_peaks and lattice.coverage >= choice.coverage:
            choice = lattice
    return choice


def fit_spectral_triangle(peaks: PeakSet, p: int = 1, config: TriangleFitConfig | None = None) -> TriangleFit:
    """Find the weave triangle in ``peaks``; ``p`` is given, never inferred.

    Raises FitFailedError (carrying the best rejected candidate) when no
    candidate reaches the coverage and residual thresholds.
    """
    config = config or TriangleFitConfig()
    if p < 1:
        raise ValueError(f"p must be positive, got {p}")
    if len(peaks) < 2:
        raise FitFailedError(f"need at least two peaks, got {len(peaks)}", peaks=len(peaks))

    fits = [
        (lattice, fit)
        for lattice in _lattice_candidates(peaks, config)
        if (fit := _triangle(lattice, p, config)) is not None
    ]
    accepted = [lattice for lattice, fit in fits if fit.accepted]
    log.debug("triangle.candidates", lattices=len(fits), accepted=len(accepted), peaks=len(peaks))
    if not accepted:
        best = max(fits, key=lambda item: (item[1].coverage, -item[1].residual))[1] if fits else None
        raise FitFailedError(
            "no spectral triangle reaches the coverage and residual thresholds",
            best=best,
            peaks=len(peaks),
            candidates=len(fits),
        )
    chosen = _select(accepted, config)
    return next(fit for lattice, fit in fits if lattice is chosen)
