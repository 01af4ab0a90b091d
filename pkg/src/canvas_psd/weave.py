"""
Generative weave model.

A weave is a lattice of one repeated basic shape. With ``d_v`` the distance
between consecutive vertical threads and ``d_h`` between horizontal ones, the
basic shape covering ``m`` vertical and ``p`` horizontal threads repeats along

    a = [m*d_v, 0]        b = [n*d_v, p*d_h]

so the image is ``i(x) = b(x) * h(x)`` with ``h`` a lattice of impulses. Its
spectrum is non-zero only on the reciprocal lattice, where a right triangle
with one vertex at DC encodes the weave: the leg on the f_x axis measures
``f_v = 1/d_v``, the leg on the f_y axis measures ``n*f_h/p`` in ``n``
segments, and the hypotenuse is cut into ``m`` segments.

Plain weave is ``(m, n, p) = (2, 1, 1)``; a simple twill has ``m > 2``, ``p = 1``
and ``n`` equal to 1 or ``m - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import ndimage

from canvas_psd.errors import AliasingError, PatternError
from canvas_psd.lattice import Basis2D, Rect, lattice_points, reciprocal_basis
from canvas_psd.logging import get_logger
from canvas_psd.spectrum import ImageGrid

log = get_logger("canvas_psd.weave")

RIGHT_ANGLE_TOLERANCE = 1e-9
# Fraction of the covered threads actually filled by the default basic shape.
DEFAULT_FILL = 0.9


class WeaveKind(StrEnum):
    PLAIN = "plain"
    TWILL = "twill"
    OTHER = "other"


@dataclass(frozen=True)
class WeavePattern:
    """Integers ``m, n, p`` plus thread spacings ``d_v, d_h`` (cm)."""

    m: int
    n: int
    p: int
    d_v: float
    d_h: float

    def __post_init__(self) -> None:
        problems = []
        if self.m < 1:
            problems.append(f"m must be positive (m={self.m})")
        if self.p < 1:
            problems.append(f"p must be positive (p={self.p})")
        if not 0 <= self.n < max(self.m, 1):
            problems.append(f"n must satisfy 0 <= n < m (n={self.n}, m={self.m})")
        if not (self.d_v > 0 and self.d_h > 0):
            problems.append(f"thread spacings must be positive (d_v={self.d_v}, d_h={self.d_h})")
        if problems:
            raise PatternError("; ".join(problems), m=self.m, n=self.n, p=self.p, d_v=self.d_v, d_h=self.d_h)

    @classmethod
    def plain(cls, f_v: float, f_h: float) -> WeavePattern:
        """Plain weave from thread densities (threads/cm)."""
        return cls(m=2, n=1, p=1, d_v=1.0 / f_v, d_h=1.0 / f_h)

    @classmethod
    def twill(cls, m: int, f_v: float, f_h: float, n: int = 1) -> WeavePattern:
        """Simple twill ``m > 2`` with ``n`` of 1 or ``m - 1``."""
        if m <= 2 or n not in (1, m - 1):
            raise PatternError(f"simple twill needs m > 2 and n in (1, m-1), got m={m}, n={n}", m=m, n=n)
        return cls(m=m, n=n, p=1, d_v=1.0 / f_v, d_h=1.0 / f_h)

    @property
    def f_v(self) -> float:
        return 1.0 / self.d_v

    @property
    def f_h(self) -> float:
        return 1.0 / self.d_h

    @property
    def kind(self) -> WeaveKind:
        if (self.m, self.n, self.p) == (2, 1, 1):
            return WeaveKind.PLAIN
        if self.m > 2 and self.p == 1 and self.n in (1, self.m - 1):
            return WeaveKind.TWILL
        return WeaveKind.OTHER

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "p": self.p,
            "d_v": self.d_v,
            "d_h": self.d_h,
            "f_v": self.f_v,
            "f_h": self.f_h,
            "kind": self.kind.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> WeavePattern:
        return cls(m=int(data["m"]), n=int(data["n"]), p=int(data["p"]), d_v=data["d_v"], d_h=data["d_h"])


class ShapeKind(StrEnum):
    RECTANGLE = "rectangle"
    RAISED_COSINE = "raised-cosine-rectangle"


@dataclass(frozen=True)
class BasicShape:
    """Horizontal rectangle (width along x), optionally with raised-cosine edges."""

    kind: ShapeKind = ShapeKind.RECTANGLE
    width: float = 0.1
    height: float = 0.1
    amplitude: float = 1.0
    # Fraction of each half-side that is tapered (raised-cosine kind only).
    taper: float = 0.25

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise PatternError(f"shape width and height must be positive ({self.width}, {self.height})")
        if not 0 < self.taper <= 1:
            raise PatternError(f"taper must be in (0, 1], got {self.taper}")

    @classmethod
    def default(cls, pattern: WeavePattern, kind: ShapeKind = ShapeKind.RECTANGLE) -> BasicShape:
        """Covers 90% of the ``m`` vertical and ``p`` horizontal threads it stands for.

        The width is ``0.9 * m * d_v``, not ``0.9 * d_v``: one shape is the full
        horizontal float over ``m`` vertical threads, so twill shapes are wide
        rectangles. Its sinc nulls can silence lattice peaks; the triangle fit
        does not rely on any single peak being detected.
        """
        return cls(
            kind=kind,
            width=DEFAULT_FILL * pattern.m * pattern.d_v,
            height=DEFAULT_FILL * pattern.p * pattern.d_h,
        )

    def profile(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Shape value at local coordinates (cm, centred on the shape)."""
        if self.kind is ShapeKind.RECTANGLE:
            inside_u = (u >= -self.width / 2) & (u < self.width / 2)
            inside_v = (v >= -self.height / 2) & (v < self.height / 2)
            return self.amplitude * (inside_u & inside_v)
        return self.amplitude * _raised_cosine(u, self.width / 2, self.taper) * _raised_cosine(
            v, self.height / 2, self.taper
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "width": self.width,
            "height": self.height,
            "amplitude": self.amplitude,
            "taper": self.taper,
        }


def _raised_cosine(x: np.ndarray, half: float, taper: float) -> np.ndarray:
    flat = half * (1 - taper)
    ramp = half - flat
    ax = np.abs(x)
    out = np.where(ax <= flat, 1.0, 0.0)
    edge = (ax > flat) & (ax < half)
    return np.where(edge, 0.5 * (1 + np.cos(np.pi * (ax - flat) / ramp)), out)


class DegradationSpec(BaseModel):
    """Seeded imperfections, applied as jitter -> rotation -> blur -> noise."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    jitter: float = Field(default=0.0, ge=0, description="Per-shape position jitter sigma (cm)")
    thread_jitter_v: float = Field(
        default=0.0,
        ge=0,
        description="Spacing jitter sigma of vertical threads (cm); positions accumulate along x",
    )
    thread_jitter_h: float = Field(
        default=0.0,
        ge=0,
        description="Spacing jitter sigma of horizontal threads (cm); positions accumulate along y",
    )
    rotation: float = Field(default=0.0, description="Global rotation (degrees, counter-clockwise in array axes)")
    blur: float = Field(default=0.0, ge=0, description="Isotropic Gaussian blur sigma (px)")
    merge_sigma: float = Field(
        default=0.0,
        ge=0,
        description="Horizontal-only blur sigma as a fraction of d_v; fuses neighbouring vertical threads",
    )
    noise: float = Field(default=0.0, ge=0, description="Additive white noise sigma (intensity units)")
    snr_db: float | None = Field(default=None, description="Noise level from a signal-to-noise ratio instead")
    seed: int = Field(default=0, ge=0)

    @property
    def is_clean(self) -> bool:
        return (
            self.jitter == 0
            and self.thread_jitter_v == 0
            and self.thread_jitter_h == 0
            and self.rotation == 0
            and self.blur == 0
            and self.merge_sigma == 0
            and self.noise == 0
            and self.snr_db is None
        )


@dataclass(frozen=True)
class Triangle:
    """Right triangle with segment counts on the hypotenuse and on the ``n`` leg."""

    vertices: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    hypotenuse_segments: int
    leg_segments: int
    degenerate: bool = False

    def __post_init__(self) -> None:
        if self.degenerate:
            return
        if self.hypotenuse_segments < 1 or self.leg_segments < 1:
            raise PatternError(f"segment counts must be >= 1 ({self.hypotenuse_segments}, {self.leg_segments})")
        if self.right_vertex() is None:
            raise PatternError(f"triangle is not right-angled: {self.vertices}")

    def right_vertex(self) -> int | None:
        pts = [np.array(v, dtype=float) for v in self.vertices]
        for i in range(3):
            u = pts[(i + 1) % 3] - pts[i]
            w = pts[(i + 2) % 3] - pts[i]
            cos = float(u @ w) / (np.linalg.norm(u) * np.linalg.norm(w))
            if abs(math.acos(max(-1.0, min(1.0, cos))) - math.pi / 2) < RIGHT_ANGLE_TOLERANCE:
                return i
        return None

    @property
    def legs(self) -> tuple[float, float]:
        """Lengths of the two legs (f_x-side leg first for spectral triangles)."""
        i = self.right_vertex() if not self.degenerate else 0
        origin = np.array(self.vertices[i])
        return (
            float(np.linalg.norm(np.array(self.vertices[(i + 1) % 3]) - origin)),
            float(np.linalg.norm(np.array(self.vertices[(i + 2) % 3]) - origin)),
        )

    @property
    def hypotenuse_length(self) -> float:
        i = self.right_vertex() if not self.degenerate else 0
        return float(np.linalg.norm(np.array(self.vertices[(i + 1) % 3]) - np.array(self.vertices[(i + 2) % 3])))

    @property
    def segment_length(self) -> float:
        return self.hypotenuse_length / self.hypotenuse_segments

    def to_dict(self) -> dict:
        return {
            "vertices": [list(v) for v in self.vertices],
            "hypotenuse_segments": self.hypotenuse_segments,
            "leg_segments": self.leg_segments,
            "degenerate": self.degenerate,
        }


# -----------------------------------------------------------------------------
# Geometry
# -----------------------------------------------------------------------------
def pattern_basis(pattern: WeavePattern) -> Basis2D:
    """``a = [m d_v, 0]``, ``b = [n d_v, p d_h]``."""
    return Basis2D.from_vectors(
        (pattern.m * pattern.d_v, 0.0),
        (pattern.n * pattern.d_v, pattern.p * pattern.d_h),
    )


def spectral_triangle(pattern: WeavePattern) -> Triangle:
    """Frequency-domain triangle: DC, ``(L1, 0)`` and ``(0, L2)``.

    ``L1 = f_v`` and ``L2 = n f_h / p``; the hypotenuse holds ``m`` segments and
    the f_y leg ``n``. ``n = 0`` collapses the triangle onto the f_x axis and is
    returned with ``degenerate=True``.
    """
    l1 = pattern.f_v
    l2 = pattern.n * pattern.f_h / pattern.p
    if pattern.n == 0:
        return Triangle(
            vertices=((0.0, 0.0), (l1, 0.0), (0.0, 0.0)),
            hypotenuse_segments=pattern.m,
            leg_segments=0,
            degenerate=True,
        )
    return Triangle(
        vertices=((0.0, 0.0), (l1, 0.0), (0.0, l2)),
        hypotenuse_segments=pattern.m,
        leg_segments=pattern.n,
    )


def spatial_triangle(pattern: WeavePattern) -> Triangle:
    """Space-domain triangle: horizontal leg ``n*a``, hypotenuse ``m*b``.

    Similar to the spectral triangle under a 90-degree rotation.
    """
    basis = pattern_basis(pattern)
    a = np.array(basis.a)
    b = np.array(basis.b)
    corner = pattern.n * a
    apex = pattern.m * b
    if pattern.n == 0:
        return Triangle(
            vertices=((0.0, 0.0), (0.0, 0.0), tuple(apex)),
            hypotenuse_segments=pattern.m,
            leg_segments=0,
            degenerate=True,
        )
    return Triangle(
        vertices=((0.0, 0.0), tuple(corner), tuple(apex)),
        hypotenuse_segments=pattern.m,
        leg_segments=pattern.n,
    )


def predicted_peaks(pattern: WeavePattern, f_max: float, f_min: float = 0.0) -> np.ndarray:
    """Reciprocal-lattice points with ``f_min < |f| <= f_max`` in the upper half-plane.

    Rows are (f_x, f_y) in threads/cm, sorted by radius then angle.
    """
    recip = reciprocal_basis(pattern_basis(pattern))
    pts = lattice_points(recip, Rect.square(f_max)).points
    r = np.hypot(pts[:, 0], pts[:, 1])
    upper = (pts[:, 1] > 1e-12) | ((np.abs(pts[:, 1]) <= 1e-12) & (pts[:, 0] > 0))
    keep = upper & (r > f_min) & (r <= f_max + 1e-9)
    pts = pts[keep]
    order = np.lexsort((np.arctan2(pts[:, 1], pts[:, 0]), np.round(np.hypot(pts[:, 0], pts[:, 1]), 9)))
    return pts[order]


# -----------------------------------------------------------------------------
# Synthesis
# -----------------------------------------------------------------------------
def _thread_offsets(indices: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Cumulative spacing errors per thread index, anchored at the middle thread."""
    if sigma == 0 or indices.size == 0:
        return np.zeros(indices.shape)
    lo, hi = int(indices.min()), int(indices.max())
    steps = rng.normal(0.0, sigma, size=hi - lo + 1)
    walk = np.cumsum(steps)
    walk -= walk[(hi - lo) // 2]
    return walk[indices - lo]


def synthesize_image(
    pattern: WeavePattern,
    shape: BasicShape | None = None,
    size: tuple[float, float] = (4.0, 4.0),
    resolution: float = 200.0,
    degradation: DegradationSpec | None = None,
) -> ImageGrid:
    """Render the weave model at pixel centres, then apply the degradations.

    ``size`` is (width, height) in cm and ``resolution`` in px/cm. Overlapping
    shapes add. Output is a deterministic function of the arguments.
    """
    shape = shape or BasicShape.default(pattern)
    degradation = degradation or DegradationSpec()
    if size[0] <= 0 or size[1] <= 0 or resolution <= 0:
        raise PatternError(f"size and resolution must be positive (size={size}, resolution={resolution})")
    if min(pattern.d_v, pattern.d_h) * resolution < 2:
        raise AliasingError(
            f"thread spacing below 2 px (d_v={pattern.d_v * resolution:.2f} px, d_h={pattern.d_h * resolution:.2f} px)",
            resolution=resolution,
            f_v=pattern.f_v,
            f_h=pattern.f_h,
        )
    if shape.width > pattern.m * pattern.d_v or shape.height > pattern.p * pattern.d_h:
        log.warning("weave.shape_overlap", width=shape.width, height=shape.height, pattern=pattern.to_dict())

    width_px = int(round(size[0] * resolution))
    height_px = int(round(size[1] * resolution))
    rng = np.random.default_rng(degradation.seed)
    basis = pattern_basis(pattern)

    # Enumerate generously: rotation and jitter can pull outside shapes into view.
    centre = np.array([width_px, height_px]) / (2 * resolution)
    reach = 0.5 * math.hypot(width_px, height_px) / resolution + math.hypot(shape.width, shape.height)
    reach += 6 * (degradation.jitter + degradation.thread_jitter_v + degradation.thread_jitter_h) * math.sqrt(
        max(width_px, height_px) / resolution / min(pattern.d_v, pattern.d_h) + 1
    )
    bounds = Rect(centre[0] - reach, centre[0] + reach, centre[1] - reach, centre[1] + reach)
    points = lattice_points(basis, bounds).points

    # Jitter: per-shape, then per-thread cumulative spacing errors.
    if degradation.jitter > 0:
        points = points + rng.normal(0.0, degradation.jitter, size=points.shape)
    if degradation.thread_jitter_v > 0 or degradation.thread_jitter_h > 0:
        coeffs = np.rint(np.linalg.solve(basis.matrix, lattice_points(basis, bounds).points.T)).astype(int)
        vertical_thread = coeffs[0] * pattern.m + coeffs[1] * pattern.n
        horizontal_thread = coeffs[1] * pattern.p
        points = points.copy()
        points[:, 0] += _thread_offsets(vertical_thread, degradation.thread_jitter_v, rng)
        points[:, 1] += _thread_offsets(horizontal_thread, degradation.thread_jitter_h, rng)

    # Rotation about the image centre, shapes included.
    theta = math.radians(degradation.rotation)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    if theta != 0.0:
        rel = points - centre
        points = centre + np.column_stack(
            [cos_t * rel[:, 0] - sin_t * rel[:, 1], sin_t * rel[:, 0] + cos_t * rel[:, 1]]
        )

    half_x = 0.5 * (abs(cos_t) * shape.width + abs(sin_t) * shape.height)
    half_y = 0.5 * (abs(sin_t) * shape.width + abs(cos_t) * shape.height)
    pixels = np.zeros((height_px, width_px))
    for cx, cy in points:
        c0 = max(0, math.ceil((cx - half_x) * resolution - 0.5))
        c1 = min(width_px - 1, math.floor((cx + half_x) * resolution - 0.5))
        r0 = max(0, math.ceil((cy - half_y) * resolution - 0.5))
        r1 = min(height_px - 1, math.floor((cy + half_y) * resolution - 0.5))
        if c0 > c1 or r0 > r1:
            continue
        xs = (np.arange(c0, c1 + 1) + 0.5) / resolution - cx
        ys = (np.arange(r0, r1 + 1) + 0.5) / resolution - cy
        if theta == 0.0:
            patch = shape.profile(xs[np.newaxis, :], ys[:, np.newaxis])
        else:
            gx, gy = np.meshgrid(xs, ys)
            patch = shape.profile(cos_t * gx + sin_t * gy, -sin_t * gx + cos_t * gy)
        pixels[r0 : r1 + 1, c0 : c1 + 1] += patch

    if degradation.blur > 0:
        pixels = ndimage.gaussian_filter(pixels, degradation.blur, mode="reflect")
    if degradation.merge_sigma > 0:
        sigma_px = degradation.merge_sigma * pattern.d_v * resolution
        pixels = ndimage.gaussian_filter1d(pixels, sigma_px, axis=1, mode="reflect")

    noise_sigma = degradation.noise
    if degradation.snr_db is not None:
        noise_sigma = float(np.std(pixels)) * 10 ** (-degradation.snr_db / 20)
    if noise_sigma > 0:
        pixels = pixels + rng.normal(0.0, noise_sigma, size=pixels.shape)
    if pixels.min() < 0:
        # Constant offset keeps intensities nonnegative; it only moves DC.
        pixels = pixels - pixels.min()

    log.debug("weave.synth", shapes=len(points), shape_px=[height_px, width_px], pattern=pattern.to_dict())
    return ImageGrid(pixels=pixels, resolution=resolution, origin_label=f"synthetic:{pattern.kind.value}")
