"""Tests for the weave model: pattern bases, triangles and image synthesis."""

import numpy as np
import pytest

from canvas_psd.counting import detect_peaks
from canvas_psd.errors import AliasingError, PatternError
from canvas_psd.lattice import Rect, lattice_points, reciprocal_basis
from canvas_psd.weave import (
    BasicShape,
    DegradationSpec,
    ShapeKind,
    WeaveKind,
    WeavePattern,
    pattern_basis,
    predicted_peaks,
    spatial_triangle,
    spectral_triangle,
    synthesize_image,
)


# -----------------------------------------------------------------------------
# WeavePattern
# -----------------------------------------------------------------------------
def test_pattern_kinds():
    """Plain is (2, 1, 1); simple twills have n of 1 or m - 1."""
    assert WeavePattern.plain(10, 10).kind is WeaveKind.PLAIN
    assert WeavePattern.twill(5, 10, 10).kind is WeaveKind.TWILL
    assert WeavePattern.twill(4, 10, 10, n=3).kind is WeaveKind.TWILL
    assert WeavePattern(m=5, n=2, p=1, d_v=0.1, d_h=0.1).kind is WeaveKind.OTHER
    assert WeavePattern(m=3, n=2, p=2, d_v=0.1, d_h=0.05).kind is WeaveKind.OTHER


@pytest.mark.parametrize(
    "kwargs",
    [
        {"m": 2, "n": 2, "p": 1, "d_v": 0.1, "d_h": 0.1},
        {"m": 3, "n": -1, "p": 1, "d_v": 0.1, "d_h": 0.1},
        {"m": 0, "n": 0, "p": 1, "d_v": 0.1, "d_h": 0.1},
        {"m": 2, "n": 1, "p": 0, "d_v": 0.1, "d_h": 0.1},
        {"m": 2, "n": 1, "p": 1, "d_v": 0.0, "d_h": 0.1},
    ],
)
def test_invalid_patterns_rejected(kwargs):
    """0 <= n < m, positive p and spacings."""
    with pytest.raises(PatternError):
        WeavePattern(**kwargs)


def test_twill_constructor_rejects_non_simple_twill():
    with pytest.raises(PatternError):
        WeavePattern.twill(5, 10, 10, n=2)


def test_pattern_dict_round_trip():
    pattern = WeavePattern(m=3, n=2, p=2, d_v=0.1, d_h=0.05)
    assert WeavePattern.from_dict(pattern.to_dict()) == pattern


# -----------------------------------------------------------------------------
# pattern_basis
# -----------------------------------------------------------------------------
@pytest.mark.parametrize(
    ("pattern", "a", "b"),
    [
        (WeavePattern(m=2, n=1, p=1, d_v=0.1, d_h=0.1), (0.2, 0.0), (0.1, 0.1)),
        (WeavePattern(m=5, n=1, p=1, d_v=0.1, d_h=0.1), (0.5, 0.0), (0.1, 0.1)),
        (WeavePattern(m=3, n=2, p=2, d_v=0.1, d_h=0.05), (0.3, 0.0), (0.2, 0.1)),
    ],
)
def test_pattern_basis(pattern, a, b):
    """a = [m d_v, 0], b = [n d_v, p d_h]."""
    basis = pattern_basis(pattern)
    assert basis.a == pytest.approx(a)
    assert basis.b == pytest.approx(b)


def test_reciprocal_of_pattern_basis():
    """a_bar = (f_v/m, -n f_h/(m p)), b_bar = (0, f_h/p)."""
    pattern = WeavePattern(m=3, n=2, p=2, d_v=0.1, d_h=0.05)
    recip = reciprocal_basis(pattern_basis(pattern))
    assert recip.a == pytest.approx((10 / 3, -2 * 20 / (3 * 2)))
    assert recip.b == pytest.approx((0.0, 20 / 2))


# -----------------------------------------------------------------------------
# Triangles
# -----------------------------------------------------------------------------
@pytest.mark.parametrize(
    ("pattern", "legs", "m", "n"),
    [
        (WeavePattern(m=2, n=1, p=1, d_v=0.1, d_h=0.1), (10.0, 10.0), 2, 1),
        (WeavePattern(m=5, n=1, p=1, d_v=0.1, d_h=0.1), (10.0, 10.0), 5, 1),
        (WeavePattern(m=3, n=2, p=2, d_v=0.1, d_h=0.05), (10.0, 20.0), 3, 2),
    ],
)
def test_spectral_triangle(pattern, legs, m, n):
    """Legs f_v and n f_h / p; m hypotenuse segments, n on the f_y leg."""
    tri = spectral_triangle(pattern)
    assert tri.legs == pytest.approx(legs)
    assert tri.hypotenuse_segments == m
    assert tri.leg_segments == n
    assert tri.right_vertex() == 0
    assert tri.hypotenuse_segments * tri.segment_length == pytest.approx(tri.hypotenuse_length, abs=1e-10)


def test_spectral_hypotenuse_steps_are_reciprocal_vectors():
    """Walking the hypotenuse from (0, L2) in steps of a_bar lands on (L1, 0)."""
    pattern = WeavePattern(m=3, n=2, p=2, d_v=0.1, d_h=0.05)
    tri = spectral_triangle(pattern)
    a_bar = np.array(reciprocal_basis(pattern_basis(pattern)).a)
    end = np.array(tri.vertices[2]) + pattern.m * a_bar
    assert end == pytest.approx(np.array(tri.vertices[1]))


def test_spectral_triangle_degenerates_for_n_zero():
    tri = spectral_triangle(WeavePattern(m=2, n=0, p=1, d_v=0.1, d_h=0.1))
    assert tri.degenerate
    assert tri.leg_segments == 0


def test_spatial_triangle_is_similar_to_spectral():
    """Right angle at n*a; the two triangles have the same leg ratio up to a swap."""
    pattern = WeavePattern(m=5, n=1, p=1, d_v=0.1, d_h=0.1)
    spatial = spatial_triangle(pattern)
    assert spatial.right_vertex() == 1
    s1, s2 = spatial.legs
    f1, f2 = spectral_triangle(pattern).legs
    assert sorted([s1 / s2, s2 / s1]) == pytest.approx(sorted([f1 / f2, f2 / f1]))


def test_predicted_peaks_upper_half_plane():
    """Plain 10 x 7: first ring holds the diagonals, axis peaks follow."""
    peaks = predicted_peaks(WeavePattern.plain(10, 7), f_max=10.0)
    assert all(fy > 0 or (fy == pytest.approx(0) and fx > 0) for fx, fy in peaks)
    as_set = {(round(fx, 6), round(fy, 6)) for fx, fy in peaks}
    assert {(5.0, 3.5), (-5.0, 3.5), (0.0, 7.0), (10.0, 0.0)} <= as_set
    assert (10.0, 7.0) not in as_set
    radii = np.hypot(peaks[:, 0], peaks[:, 1])
    assert np.all(np.diff(radii) >= -1e-9)


# -----------------------------------------------------------------------------
# Synthesis
# -----------------------------------------------------------------------------
def test_plain_weave_row_profile_period():
    """10 threads/cm at 200 px/cm: 800 x 800 px, row averages repeat every 20 px."""
    image = synthesize_image(WeavePattern.plain(10, 10), size=(4, 4), resolution=200)
    assert image.shape == (800, 800)
    profile = image.pixels.mean(axis=1)
    assert profile.max() > profile.min()
    assert np.allclose(profile[20:], profile[:-20])
    assert not np.allclose(profile[10:], profile[:-10])


def test_undegraded_image_is_lattice_periodic():
    """Shifting by a (40 px) or b (20, 20 px) reproduces the interior exactly."""
    pixels = synthesize_image(WeavePattern.plain(10, 10), size=(2, 2), resolution=200).pixels
    assert np.array_equal(pixels[:, 40:], pixels[:, :-40])
    assert np.array_equal(pixels[20:, 20:], pixels[:-20, :-20])
    assert not np.array_equal(pixels[:, 20:], pixels[:, :-20])


def test_twill_image_is_lattice_periodic():
    """Twill m=3, n=1 at 10 threads/cm: a = 60 px, b = (20, 20) px."""
    pixels = synthesize_image(WeavePattern.twill(3, 10, 10), size=(2, 2), resolution=200).pixels
    assert np.array_equal(pixels[:, 60:], pixels[:, :-60])
    assert np.array_equal(pixels[20:, 20:], pixels[:-20, :-20])


def test_zero_amplitude_gives_zero_image():
    pattern = WeavePattern.plain(10, 10)
    shape = BasicShape(width=0.18, height=0.09, amplitude=0.0)
    assert not synthesize_image(pattern, shape, size=(1, 1)).pixels.any()


def test_synthesis_is_deterministic():
    """Same seed, same bits; a different seed changes degraded output."""
    pattern = WeavePattern.twill(4, 12, 10)
    spec = DegradationSpec(jitter=0.005, rotation=3.0, blur=1.0, noise=0.05, seed=4)
    first = synthesize_image(pattern, size=(1, 1), degradation=spec).pixels
    second = synthesize_image(pattern, size=(1, 1), degradation=spec).pixels
    assert np.array_equal(first, second)
    other = synthesize_image(pattern, size=(1, 1), degradation=spec.model_copy(update={"seed": 5})).pixels
    assert not np.array_equal(first, other)
    clean = synthesize_image(pattern, size=(1, 1)).pixels
    assert np.array_equal(clean, synthesize_image(pattern, size=(1, 1)).pixels)


def test_aliasing_refused():
    """Thread spacing under two pixels raises AliasingError."""
    with pytest.raises(AliasingError):
        synthesize_image(WeavePattern.plain(60, 10), size=(1, 1), resolution=100)


def test_oversized_shape_adds():
    """A shape wider than its cell overlaps its neighbours; intensities add."""
    pattern = WeavePattern.plain(10, 10)
    shape = BasicShape(width=0.3, height=0.05)
    image = synthesize_image(pattern, shape, size=(1, 1), resolution=200)
    assert image.pixels.max() == pytest.approx(2.0)


def test_raised_cosine_shape_profile():
    """Flat top, zero outside, smooth ramp in between."""
    shape = BasicShape(kind=ShapeKind.RAISED_COSINE, width=0.2, height=0.2, taper=0.5)
    u = np.array([0.0, 0.04, 0.075, 0.1, 0.2])
    values = shape.profile(u, np.zeros_like(u))
    assert values[0] == 1.0
    assert values[1] == 1.0
    assert 0.0 < values[2] < 1.0
    assert values[3] == pytest.approx(0.0)
    assert values[4] == 0.0


def test_rectangle_default_fill():
    """Default shape covers 90% of the m vertical and p horizontal threads."""
    shape = BasicShape.default(WeavePattern(m=3, n=2, p=2, d_v=0.1, d_h=0.05))
    assert shape.width == pytest.approx(0.27)
    assert shape.height == pytest.approx(0.09)


def test_synthesis_keeps_intensities_nonnegative():
    """Strong noise is offset rather than clipped."""
    spec = DegradationSpec(noise=1.0, seed=2)
    image = synthesize_image(WeavePattern.plain(10, 10), size=(0.5, 0.5), degradation=spec)
    assert image.pixels.min() == pytest.approx(0.0)


def test_spectrum_peaks_sit_on_reciprocal_lattice(smooth_plain_psd):
    """Every strong detected peak is within one bin of a reciprocal-lattice point."""
    plain_peaks = detect_peaks(smooth_plain_psd)
    recip = reciprocal_basis(pattern_basis(WeavePattern.plain(10, 7)))
    lattice = lattice_points(recip, Rect.square(40.0)).points
    strong = plain_peaks.freqs[plain_peaks.magnitudes >= 1e-3 * plain_peaks.magnitudes.max()]
    strong = strong[np.hypot(strong[:, 0], strong[:, 1]) <= 30.0]
    assert len(strong) >= 6
    for freq in strong:
        assert np.min(np.linalg.norm(lattice - freq, axis=1)) <= plain_peaks.bin_width
