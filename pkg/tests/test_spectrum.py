"""Tests for windows, segmentation, periodograms and the averaged periodogram."""

import numpy as np
import pytest

from canvas_psd.errors import ImageTooSmallError
from canvas_psd.spectrum import (
    ImageGrid,
    SegmentationPlan,
    averaged_periodogram,
    extract_segments,
    iter_segments,
    make_window,
    periodogram,
    plan_preset,
    segment_count,
    segment_offsets,
    window_1d,
)


def _noise(shape, seed=0):
    return ImageGrid(np.random.default_rng(seed).random(shape), resolution=100.0)


# -----------------------------------------------------------------------------
# Plans and windows
# -----------------------------------------------------------------------------
def test_plan_ordering_enforced():
    """0 < D <= N <= N_DFT."""
    with pytest.raises(ValueError):
        SegmentationPlan(n=400, d=500, n_dft=2048)
    with pytest.raises(ValueError):
        SegmentationPlan(n=400, d=100, n_dft=256)


def test_overlap_ratio():
    assert SegmentationPlan(n=400, d=100).overlap_ratio == 3


def test_plan_presets():
    assert plan_preset("standard") == SegmentationPlan()
    assert plan_preset("twill").d == 50
    with pytest.raises(ValueError):
        plan_preset("satin")


def test_rectangular_window_is_ones():
    w = make_window(SegmentationPlan(n=4, d=4, window="rectangular", n_dft=4))
    assert np.array_equal(w, np.ones((4, 4)))


def test_hann_three_points():
    assert window_1d("hann", 3) == pytest.approx([0.0, 1.0, 0.0], abs=1e-15)


def test_blackman_harris_closed_form():
    """Endpoint a0 - a1 + a2 - a3, symmetric, peak in the middle."""
    w = window_1d("blackman-harris", 65)
    assert w[0] == pytest.approx(0.35875 - 0.48829 + 0.14128 - 0.01168, abs=1e-12)
    assert w[0] == pytest.approx(6e-5, abs=1e-5)
    assert np.allclose(w, w[::-1])
    assert np.argmax(w) == 32
    assert w[32] == pytest.approx(1.0)


def test_window_is_separable():
    plan = SegmentationPlan(n=16, d=16, window="hann", n_dft=16)
    w1 = window_1d("hann", 16)
    assert np.allclose(make_window(plan), np.outer(w1, w1))


# -----------------------------------------------------------------------------
# Segmentation
# -----------------------------------------------------------------------------
def test_single_segment():
    """400 x 400 image, N=400: K = 1."""
    plan = SegmentationPlan(n=400, d=100)
    assert segment_count((400, 400), plan) == 1
    assert segment_offsets((400, 400), plan) == [(0, 0)]


def test_three_by_three_segments():
    """600 x 600 image, N=400, D=100: offsets {0, 100, 200} on both axes."""
    plan = SegmentationPlan(n=400, d=100)
    offsets = segment_offsets((600, 600), plan)
    assert len(offsets) == segment_count((600, 600), plan) == 9
    assert {r for r, _ in offsets} == {0, 100, 200}
    assert offsets[:3] == [(0, 0), (0, 100), (0, 200)]


def test_partial_segments_discarded():
    plan = SegmentationPlan(n=4, d=3, window="rectangular", n_dft=4)
    assert segment_offsets((10, 8), plan) == [(0, 0), (0, 3), (3, 0), (3, 3), (6, 0), (6, 3)]


def test_image_too_small():
    with pytest.raises(ImageTooSmallError):
        extract_segments(_noise((300, 500)), SegmentationPlan(n=400, d=100))


def test_segments_are_windowed_crops():
    image = _noise((12, 12))
    plan = SegmentationPlan(n=8, d=4, window="hann", n_dft=8)
    segments = extract_segments(image, plan)
    assert len(segments) == 4
    assert np.allclose(segments[3], image.pixels[4:12, 4:12] * make_window(plan))


# -----------------------------------------------------------------------------
# periodogram
# -----------------------------------------------------------------------------
def test_zero_segment():
    assert not periodogram(np.zeros((8, 8)), 16).values.any()


def test_constant_segment_is_a_dc_spike():
    """Constant c: DC value (c N^2)^2 / N, nothing elsewhere."""
    c, n = 0.7, 8
    spec = periodogram(np.full((n, n), c), n)
    centre = spec.center
    assert spec.values[centre, centre] == pytest.approx((c * n * n) ** 2 / n)
    rest = spec.values.copy()
    rest[centre, centre] = 0.0
    assert rest.max() < 1e-20


def test_cosine_at_exact_bin():
    """Two symmetric peaks at +-(kx, ky), zero elsewhere within 1e-9 relative."""
    n, kx, ky = 32, 5, 3
    rows, cols = np.indices((n, n))
    segment = np.cos(2 * np.pi * (kx * cols + ky * rows) / n)
    spec = periodogram(segment, n)
    c = spec.center
    peak = spec.values[c + ky, c + kx]
    assert spec.values[c - ky, c - kx] == pytest.approx(peak)
    rest = spec.values.copy()
    rest[c + ky, c + kx] = rest[c - ky, c - kx] = 0.0
    assert rest.max() < 1e-9 * peak


def test_parseval():
    """Rectangular window, N = N_DFT: bins sum to N times the pixel energy."""
    segment = np.random.default_rng(3).random((16, 16))
    spec = periodogram(segment, 16)
    # sum |X|^2 = N^2 sum x^2, and each bin is divided by N.
    assert spec.values.sum() == pytest.approx(16 * np.sum(segment**2), rel=1e-6)


def test_frequency_axis_in_threads_per_cm():
    spec = periodogram(np.zeros((8, 8)), 64, resolution=128.0)
    assert spec.bin_width == 2.0
    assert spec.freqs[spec.center] == 0.0
    assert spec.to_freq(spec.center + 1, spec.center + 3) == (6.0, 2.0)
    assert spec.to_index((6.0, 2.0)) == (spec.center + 1, spec.center + 3)


def test_segment_larger_than_transform():
    with pytest.raises(ValueError):
        periodogram(np.zeros((16, 16)), 8)


# -----------------------------------------------------------------------------
# averaged_periodogram
# -----------------------------------------------------------------------------
def test_single_segment_average_equals_periodogram():
    image = _noise((32, 32))
    plan = SegmentationPlan(n=32, d=8, window="hann", n_dft=64)
    avg = averaged_periodogram(image, plan)
    single = periodogram(extract_segments(image, plan)[0], 64, image.resolution, window="hann")
    assert avg.segment_count == 1
    assert np.array_equal(avg.values, single.values)


def test_identical_tiles_average_to_one_periodogram():
    tile = np.random.default_rng(1).random((8, 8))
    image = ImageGrid(np.tile(tile, (3, 3)), resolution=10.0)
    plan = SegmentationPlan(n=8, d=8, window="rectangular", n_dft=16)
    avg = averaged_periodogram(image, plan)
    assert avg.segment_count == 9
    assert np.allclose(avg.values, periodogram(tile, 16, 10.0).values)


def test_average_is_mean_of_segments_bitwise():
    """Summation in segment index order gives the same bits as a plain loop."""
    image = _noise((48, 40), seed=5)
    plan = SegmentationPlan(n=16, d=8, window="blackman-harris", n_dft=32)
    total = np.zeros((32, 32))
    segments = extract_segments(image, plan)
    for seg in segments:
        total += periodogram(seg, 32, image.resolution).values
    avg = averaged_periodogram(image, plan)
    assert np.array_equal(avg.values, total / len(segments))


def test_worker_count_does_not_change_bits():
    image = _noise((64, 64), seed=9)
    plan = SegmentationPlan(n=16, d=8, window="hann", n_dft=32)
    serial = averaged_periodogram(image, plan, workers=1).values
    for workers in (2, 3, 8):
        assert np.array_equal(averaged_periodogram(image, plan, workers=workers).values, serial)


def test_iter_segments_matches_extract_segments():
    image = _noise((48, 40), seed=6)
    plan = SegmentationPlan(n=16, d=8, window="hann", n_dft=32)
    lazy = iter_segments(image, plan)
    assert not isinstance(lazy, list)
    for got, expected in zip(lazy, extract_segments(image, plan), strict=True):
        assert np.array_equal(got, expected)


@pytest.mark.parametrize("workers", [1, 3])
def test_segments_are_cropped_as_they_are_transformed(monkeypatch, workers):
    """Only the current chunk of segments is held, never the whole image's worth."""
    import canvas_psd.spectrum as spectrum

    image = _noise((64, 64), seed=3)
    plan = SegmentationPlan(n=16, d=8, window="hann", n_dft=32)
    k = segment_count(image.shape, plan)
    crops: list[int] = []
    seen: list[int] = []
    original_crop = ImageGrid.crop
    original_periodogram = spectrum.periodogram

    def counting_crop(self, *args):
        crops.append(1)
        return original_crop(self, *args)

    def recording_periodogram(*args, **kwargs):
        seen.append(len(crops))
        return original_periodogram(*args, **kwargs)

    monkeypatch.setattr(ImageGrid, "crop", counting_crop)
    monkeypatch.setattr(spectrum, "periodogram", recording_periodogram)
    averaged_periodogram(image, plan, workers=workers)

    assert len(crops) == k == 49
    assert len(seen) == k
    # A chunk of `workers` segments is the most ever cropped ahead of its transform.
    assert max(seen) == k
    assert all(count <= (i // workers + 1) * workers for i, count in enumerate(sorted(seen)))


def test_conjugate_symmetry_and_nonnegativity():
    """S(f) = S(-f) for real input; odd N_DFT keeps the mirror on the grid."""
    image = _noise((40, 40), seed=2)
    spec = averaged_periodogram(image, SegmentationPlan(n=20, d=10, window="hann", n_dft=41)).values
    assert np.all(spec >= 0)
    assert np.allclose(spec, spec[::-1, ::-1], rtol=1e-9, atol=1e-12 * spec.max())


def test_conjugate_symmetry_even_transform():
    """Even N_DFT: the mirror of bin k is bin -k, one row and column short."""
    image = _noise((40, 40), seed=4)
    spec = averaged_periodogram(image, SegmentationPlan(n=20, d=10, window="hann", n_dft=40)).values
    inner = spec[1:, 1:]
    assert np.allclose(inner, inner[::-1, ::-1], rtol=1e-9, atol=1e-12 * inner.max())


def test_plain_weave_psd_metadata(plain_psd):
    """Default plan on an 800 x 800 image: K = 25, 2048 bins of 200/2048 threads/cm."""
    assert plain_psd.segment_count == 25
    assert plain_psd.n_dft == 2048
    assert plain_psd.bin_width == pytest.approx(200 / 2048)
    assert plain_psd.mainlobe_bins == pytest.approx(4 * 2048 / 400)


def test_variance_falls_as_one_over_k():
    """White noise, rectangular window, N = D = 8: var(S) * K is constant within 20%."""
    rng = np.random.default_rng(12)
    plan = SegmentationPlan(n=8, d=8, window="rectangular", n_dft=8)
    realizations = 4000
    scaled = []
    for side, k in ((8, 1), (16, 4), (32, 16)):
        samples = np.empty(realizations)
        for i in range(realizations):
            image = ImageGrid(rng.random((side, side)), resolution=8.0)
            samples[i] = averaged_periodogram(image, plan).values[4 + 1, 4 + 2]
        scaled.append(samples.var() * k)
    assert scaled[1] == pytest.approx(scaled[0], rel=0.2)
    assert scaled[2] == pytest.approx(scaled[0], rel=0.2)


def test_segment_count_matches_enumeration():
    """Every top-left corner that keeps a whole segment inside the image, on the D grid."""
    rng = np.random.default_rng(30)
    for _ in range(20):
        n = int(rng.integers(4, 40))
        d = int(rng.integers(1, n + 1))
        shape = (int(rng.integers(n, 4 * n)), int(rng.integers(n, 4 * n)))
        plan = SegmentationPlan(n=n, d=d, window="rectangular", n_dft=n)
        corners = [
            (r, c)
            for r in range(shape[0])
            for c in range(shape[1])
            if r % d == 0 and c % d == 0 and r + n <= shape[0] and c + n <= shape[1]
        ]
        assert segment_count(shape, plan) == len(corners), (shape, n, d)
        assert segment_offsets(shape, plan) == corners
