"""
Exact 2-D lattice algebra.

A lattice is every integer combination ``n1*a + n2*b`` of a basis ``Q = [a|b]``.
Its reciprocal lattice is generated by the columns of ``Q^{-T}``: those vectors
satisfy ``a.a_bar = b.b_bar = 1`` and ``a.b_bar = b.a_bar = 0``, which is why the
spectrum of a lattice of impulses lives on the reciprocal lattice. In two
dimensions the reciprocal lattice is the original one rotated by 90 degrees and
scaled by ``1/det(Q)``, and the two fundamental areas are inverses of each other.

Spatial vectors are in cm, reciprocal vectors in 1/cm (threads/cm).
All types are immutable and every function is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from canvas_psd.errors import DegenerateBasisError, NoCanonicalFormError

DEGENERACY_TOLERANCE = 1e-12
CANONICAL_ANGLE_TOLERANCE_DEG = 0.5
# Largest |coefficient| tried when looking for a horizontal lattice vector.
CANONICAL_SEARCH_LIMIT = 8


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle ``[x_min, x_max] x [y_min, y_max]``."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min <= self.x_max and self.y_min <= self.y_max):
            raise ValueError(f"empty rectangle: {self}")

    @classmethod
    def square(cls, half_side: float) -> Rect:
        return cls(-half_side, half_side, -half_side, half_side)

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        return (
            (x >= self.x_min - tol) & (x <= self.x_max + tol) & (y >= self.y_min - tol) & (y <= self.y_max + tol)
        )

    def corners(self) -> np.ndarray:
        return np.array(
            [
                [self.x_min, self.y_min],
                [self.x_max, self.y_min],
                [self.x_min, self.y_max],
                [self.x_max, self.y_max],
            ]
        )


@dataclass(frozen=True)
class Basis2D:
    """A pair of plane vectors ``a``, ``b`` generating a point lattice."""

    a: tuple[float, float]
    b: tuple[float, float]

    @classmethod
    def from_vectors(cls, a, b) -> Basis2D:
        return cls((float(a[0]), float(a[1])), (float(b[0]), float(b[1])))

    @classmethod
    def from_matrix(cls, q: np.ndarray) -> Basis2D:
        return cls.from_vectors(q[:, 0], q[:, 1])

    @property
    def matrix(self) -> np.ndarray:
        """``Q = [a|b]`` with the basis vectors as columns."""
        return np.array([[self.a[0], self.b[0]], [self.a[1], self.b[1]]], dtype=float)

    @property
    def det(self) -> float:
        return self.a[0] * self.b[1] - self.a[1] * self.b[0]

    @property
    def angle(self) -> float:
        """Angle between ``a`` and ``b`` in radians, in ``(0, pi)``."""
        cross = self.det
        dot = self.a[0] * self.b[0] + self.a[1] * self.b[1]
        return abs(math.atan2(cross, dot))

    def is_degenerate(self, tol: float = DEGENERACY_TOLERANCE) -> bool:
        """Zero-length or (near-)parallel vectors; ``tol`` bounds ``|sin|`` of their angle."""
        scale = math.hypot(*self.a) * math.hypot(*self.b)
        return scale == 0.0 or abs(self.det) <= tol * scale

    def require_nondegenerate(self) -> None:
        if self.is_degenerate():
            raise DegenerateBasisError(
                f"basis vectors are linearly dependent (det={self.det:.3e})",
                a=list(self.a),
                b=list(self.b),
            )

    def to_dict(self) -> dict:
        return {"a": list(self.a), "b": list(self.b)}


@dataclass(frozen=True)
class PointSet2D:
    """Lattice points inside ``bounds``, sorted by (y, x)."""

    points: np.ndarray
    bounds: Rect

    def __len__(self) -> int:
        return len(self.points)

    def as_tuples(self, decimals: int = 9) -> set[tuple[float, float]]:
        rounded = np.round(self.points, decimals) + 0.0  # +0.0 folds -0.0
        return {(float(x), float(y)) for x, y in rounded}


# -----------------------------------------------------------------------------
# Operations
# -----------------------------------------------------------------------------
def reciprocal_basis(basis: Basis2D) -> Basis2D:
    """Columns of ``Q^{-T}``: ``a.a_bar = b.b_bar = 1``, ``a.b_bar = b.a_bar = 0``."""
    basis.require_nondegenerate()
    return Basis2D.from_matrix(np.linalg.inv(basis.matrix).T)


def fundamental_area(basis: Basis2D) -> float:
    """Area ``|det Q|`` of the fundamental parallelogram."""
    basis.require_nondegenerate()
    return abs(basis.det)


def lattice_points(basis: Basis2D, bounds: Rect) -> PointSet2D:
    """Every ``n1*a + n2*b`` inside ``bounds`` (closed, 1e-9 tolerance)."""
    basis.require_nondegenerate()
    q = basis.matrix
    # Integer ranges: the bounds' corners in lattice coordinates enclose every candidate.
    coeffs = np.linalg.solve(q, bounds.corners().T)
    lo = np.floor(coeffs.min(axis=1)).astype(int) - 1
    hi = np.ceil(coeffs.max(axis=1)).astype(int) + 1
    n1, n2 = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    ints = np.stack([n1.ravel(), n2.ravel()])
    pts = (q @ ints).T
    pts = pts[bounds.contains(pts)]
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    return PointSet2D(points=pts[order], bounds=bounds)


def same_lattice(first: Basis2D, second: Basis2D, tol: float = 1e-9) -> bool:
    """True when both bases generate the same lattice.

    ``Q1^{-1} Q2`` must be an integer matrix with determinant +-1.
    """
    first.require_nondegenerate()
    second.require_nondegenerate()
    m = np.linalg.solve(first.matrix, second.matrix)
    if not np.allclose(m, np.round(m), atol=tol):
        return False
    return round(abs(np.linalg.det(np.round(m)))) == 1


def _extended_gcd(x: int, y: int) -> tuple[int, int, int]:
    if y == 0:
        return (abs(x), 1 if x >= 0 else -1, 0)
    g, s, t = _extended_gcd(y, x % y)
    return g, t, s - (x // y) * t


def _horizontal_coefficients(basis: Basis2D, tol_deg: float) -> tuple[int, int] | None:
    """Primitive ``(i, j)`` whose vector ``i*a + j*b`` is shortest among near-horizontal ones."""
    a = np.array(basis.a)
    b = np.array(basis.b)
    if a[1] == 0.0:
        return (1, 0)
    if b[1] == 0.0:
        return (0, 1)
    # Exact rational ratio first, then a bounded search inside the tolerance.
    ratio = Fraction(-a[1] / b[1]).limit_denominator(CANONICAL_SEARCH_LIMIT)
    candidates = [(ratio.denominator, ratio.numerator)]
    span = range(-CANONICAL_SEARCH_LIMIT, CANONICAL_SEARCH_LIMIT + 1)
    candidates += [(i, j) for i in span for j in span if (i, j) != (0, 0) and math.gcd(i, j) == 1]
    best: tuple[float, tuple[int, int]] | None = None
    tol = math.radians(tol_deg)
    for i, j in candidates:
        if math.gcd(i, j) != 1:
            continue
        v = i * a + j * b
        length = math.hypot(*v)
        if length == 0.0:
            continue
        tilt = abs(math.atan2(v[1], v[0]))
        tilt = min(tilt, math.pi - tilt)
        if tilt <= tol and (best is None or length < best[0] - 1e-12):
            best = (length, (i, j))
    return best[1] if best else None


def canonicalize(basis: Basis2D, tol_deg: float = CANONICAL_ANGLE_TOLERANCE_DEG) -> Basis2D:
    """Equivalent basis with ``a`` horizontal (``a_x > 0``) and ``0 < theta <= 90`` degrees.

    Uses an integer unimodular change of basis plus sign flips, so the output
    generates exactly the same lattice. ``a`` is the shortest lattice vector
    within ``tol_deg`` of the horizontal; it is exactly horizontal whenever the
    lattice contains an exactly horizontal vector.
    """
    basis.require_nondegenerate()
    coeffs = _horizontal_coefficients(basis, tol_deg)
    if coeffs is None:
        raise NoCanonicalFormError(
            f"no lattice vector within {tol_deg} degrees of the horizontal",
            a=list(basis.a),
            b=list(basis.b),
        )
    i, j = coeffs
    a = np.array(basis.a)
    b = np.array(basis.b)
    new_a = i * a + j * b
    # Complete (i, j) to a unimodular matrix: i*l - j*k = 1.
    _, s, t = _extended_gcd(i, -j)
    l, k = s, t
    new_b = k * a + l * b
    if new_a[0] < 0:
        new_a = -new_a
    if new_b[1] < 0 or (new_b[1] == 0 and new_b[0] < 0):
        new_b = -new_b
    # Shift b by multiples of a so that 0 <= b_x < a_x (theta <= 90 degrees).
    shift = math.floor(new_b[0] / new_a[0] + 1e-12)
    new_b = new_b - shift * new_a
    return Basis2D.from_vectors(new_a, new_b)
