"""Tests for lattice algebra: reciprocal bases, point sets, canonical form."""

import math

import numpy as np
import pytest

from canvas_psd.errors import DegenerateBasisError, NoCanonicalFormError
from canvas_psd.lattice import (
    Basis2D,
    Rect,
    canonicalize,
    fundamental_area,
    lattice_points,
    reciprocal_basis,
    same_lattice,
)


def _random_bases(count: int, seed: int = 7) -> list[Basis2D]:
    rng = np.random.default_rng(seed)
    bases = []
    while len(bases) < count:
        q = rng.uniform(-2.0, 2.0, size=(2, 2))
        if abs(np.linalg.det(q)) > 0.2:
            bases.append(Basis2D.from_matrix(q))
    return bases


# -----------------------------------------------------------------------------
# reciprocal_basis
# -----------------------------------------------------------------------------
def test_reciprocal_of_identity():
    """The unit square lattice is its own reciprocal."""
    recip = reciprocal_basis(Basis2D.from_vectors((1, 0), (0, 1)))
    assert recip.a == pytest.approx((1.0, 0.0))
    assert recip.b == pytest.approx((0.0, 1.0))


def test_reciprocal_of_diagonal_basis():
    """Diagonal Q inverts elementwise."""
    recip = reciprocal_basis(Basis2D.from_vectors((2, 0), (0, 1)))
    assert recip.a == pytest.approx((0.5, 0.0))
    assert recip.b == pytest.approx((0.0, 1.0))


def test_reciprocal_of_sheared_basis():
    """a=[2,0], b=[1,1]: |a_bar| = 1/(|a| sin 45) and the cross products vanish."""
    basis = Basis2D.from_vectors((2, 0), (1, 1))
    recip = reciprocal_basis(basis)
    a, b = np.array(basis.a), np.array(basis.b)
    a_bar, b_bar = np.array(recip.a), np.array(recip.b)
    assert np.linalg.norm(a_bar) == pytest.approx(1 / (2 * math.sin(math.radians(45))))
    assert a_bar @ b == pytest.approx(0.0, abs=1e-12)
    assert b_bar @ a == pytest.approx(0.0, abs=1e-12)
    expected = np.linalg.inv(basis.matrix).T
    assert np.allclose(recip.matrix, expected)


def test_reciprocal_identities_hold_for_random_bases():
    """Orthogonality, unit products and the length law on many bases."""
    for basis in _random_bases(100):
        recip = reciprocal_basis(basis)
        a, b = np.array(basis.a), np.array(basis.b)
        a_bar, b_bar = np.array(recip.a), np.array(recip.b)
        assert abs(a @ b_bar) < 1e-10
        assert abs(b @ a_bar) < 1e-10
        assert a @ a_bar == pytest.approx(1.0, abs=1e-10)
        assert b @ b_bar == pytest.approx(1.0, abs=1e-10)
        sin_theta = math.sin(basis.angle)
        assert np.linalg.norm(a_bar) == pytest.approx(1 / (np.linalg.norm(a) * sin_theta), rel=1e-10)
        assert np.linalg.norm(b_bar) == pytest.approx(1 / (np.linalg.norm(b) * sin_theta), rel=1e-10)


def test_double_reciprocal_is_the_same_lattice():
    """Taking the reciprocal twice gives back the original point set."""
    window = Rect.square(5.0)
    for basis in _random_bases(100, seed=11):
        twice = reciprocal_basis(reciprocal_basis(basis))
        assert same_lattice(basis, twice)
        original = lattice_points(basis, window).points
        again = lattice_points(twice, window).points
        assert original.shape == again.shape
        assert np.allclose(original, again, atol=1e-9)


def test_reciprocal_is_rotated_and_scaled_lattice():
    """The reciprocal lattice is the original turned 90 degrees and scaled by 1/det."""
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    for basis in _random_bases(20, seed=3):
        recip = reciprocal_basis(basis)
        rotated = Basis2D.from_matrix(rot @ basis.matrix / basis.det)
        assert same_lattice(recip, rotated)


def test_degenerate_basis_rejected():
    """Parallel vectors raise DegenerateBasisError."""
    with pytest.raises(DegenerateBasisError):
        reciprocal_basis(Basis2D.from_vectors((1, 1), (2, 2)))
    with pytest.raises(DegenerateBasisError):
        fundamental_area(Basis2D.from_vectors((1, 0), (0, 0)))


@pytest.mark.parametrize(
    ("a", "b"),
    [((1, 0), (0, 0)), ((0, 0), (0, 3)), ((0, 0), (0, 0))],
)
@pytest.mark.parametrize("operation", [reciprocal_basis, fundamental_area, canonicalize])
def test_zero_length_vector_is_degenerate(a, b, operation):
    basis = Basis2D.from_vectors(a, b)
    assert basis.is_degenerate()
    with pytest.raises(DegenerateBasisError):
        operation(basis)


def test_zero_length_vector_has_no_lattice_points():
    with pytest.raises(DegenerateBasisError):
        lattice_points(Basis2D.from_vectors((1, 0), (0, 0)), Rect.square(2.0))


def test_degeneracy_is_scale_invariant():
    """A tiny but well-shaped basis is not degenerate."""
    assert not Basis2D.from_vectors((1e-8, 0), (0, 1e-8)).is_degenerate()


# -----------------------------------------------------------------------------
# lattice_points / fundamental_area
# -----------------------------------------------------------------------------
def test_unit_lattice_points():
    """3 x 3 integer grid inside [-1.5, 1.5]^2."""
    assert len(lattice_points(Basis2D.from_vectors((1, 0), (0, 1)), Rect.square(1.5))) == 9


def test_rectangular_lattice_points():
    """a=[2,0], b=[0,1] in [0,4] x [0,2] gives {0,2,4} x {0,1,2}."""
    pts = lattice_points(Basis2D.from_vectors((2, 0), (0, 1)), Rect(0, 4, 0, 2))
    assert pts.as_tuples() == {(float(x), float(y)) for x in (0, 2, 4) for y in (0, 1, 2)}


def test_sheared_lattice_points_match_brute_force():
    """a=[2,0], b=[1,1] in [0,4] x [0,2] equals enumeration over n1, n2 in [-5, 5]."""
    bounds = Rect(0, 4, 0, 2)
    brute = set()
    for n1 in range(-5, 6):
        for n2 in range(-5, 6):
            x, y = 2 * n1 + n2, n2
            if 0 <= x <= 4 and 0 <= y <= 2:
                brute.add((float(x), float(y)))
    pts = lattice_points(Basis2D.from_vectors((2, 0), (1, 1)), bounds)
    assert pts.as_tuples() == brute
    assert {(0.0, 0.0), (2.0, 0.0), (4.0, 0.0), (1.0, 1.0), (3.0, 1.0), (2.0, 2.0), (0.0, 2.0), (4.0, 2.0)} <= brute
    assert len(pts) == len(brute)


def test_fundamental_area():
    """|det Q| and its reciprocity with the reciprocal lattice."""
    assert fundamental_area(Basis2D.from_vectors((1, 0), (0, 1))) == 1.0
    assert fundamental_area(Basis2D.from_vectors((2, 0), (0, 3))) == 6.0
    for basis in _random_bases(50, seed=5):
        product = fundamental_area(basis) * fundamental_area(reciprocal_basis(basis))
        assert product == pytest.approx(1.0, abs=1e-12)


# -----------------------------------------------------------------------------
# canonicalize
# -----------------------------------------------------------------------------
@pytest.mark.parametrize(
    ("a", "b", "expected_a", "expected_b"),
    [
        ((0, 1), (2, 0), (2, 0), (0, 1)),
        ((2, 0), (-1, 1), (2, 0), (1, 1)),
        ((1, 0), (0, 1), (1, 0), (0, 1)),
    ],
)
def test_canonicalize_examples(a, b, expected_a, expected_b):
    """Swap, shift and identity cases."""
    canon = canonicalize(Basis2D.from_vectors(a, b))
    assert canon.a == pytest.approx(expected_a)
    assert canon.b == pytest.approx(expected_b)


def test_canonicalize_keeps_lattice_and_form():
    """Unimodular mixes of a horizontal basis come back horizontal with theta <= 90."""
    base = Basis2D.from_vectors((0.3, 0.0), (0.1, 0.25))
    for mix in ([[1, 2], [1, 3]], [[2, 1], [1, 1]], [[-1, 0], [3, -1]], [[0, 1], [1, 0]]):
        mixed = Basis2D.from_matrix(base.matrix @ np.array(mix, dtype=float))
        canon = canonicalize(mixed)
        assert same_lattice(canon, base)
        assert canon.a[1] == pytest.approx(0.0, abs=1e-12)
        assert canon.a[0] > 0
        assert 0 < canon.angle <= math.pi / 2 + 1e-12


def test_canonicalize_without_horizontal_vector():
    """A square lattice turned by atan(1/16) has no short near-horizontal vector."""
    tilt = math.atan(1 / 16)
    basis = Basis2D.from_vectors((math.cos(tilt), math.sin(tilt)), (-math.sin(tilt), math.cos(tilt)))
    with pytest.raises(NoCanonicalFormError):
        canonicalize(basis)
