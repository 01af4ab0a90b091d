"""Pytest configuration and fixtures."""

import os

import pytest

from canvas_psd.counting import detect_peaks
from canvas_psd.logging import configure_logging
from canvas_psd.spectrum import SegmentationPlan, averaged_periodogram
from canvas_psd.weave import BasicShape, ShapeKind, WeavePattern, synthesize_image

# 2048-point DFT at 204.8 px/cm puts every multiple of 0.1 threads/cm on a bin.
EXACT_RESOLUTION = 204.8


def pytest_addoption(parser):
    """Add custom command line options."""
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="Run the slow synthesis round trips (also CANVAS_PSD_RUN_SLOW=1)",
    )


def pytest_configure(config):
    """Register custom markers."""
    config.addinivalue_line("markers", "slow: synthesis round trips over many patterns")


def pytest_collection_modifyitems(config, items):
    """Skip slow tests unless asked for."""
    if config.getoption("--run-slow") or os.environ.get("CANVAS_PSD_RUN_SLOW") == "1":
        return

    skip_slow = pytest.mark.skip(reason="slow test (run with --run-slow)")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    """Keep per-segment debug events out of test output."""
    configure_logging("WARNING")


# -----------------------------------------------------------------------------
# Synthetic weaves shared across modules
# -----------------------------------------------------------------------------
@pytest.fixture(scope="session")
def plain_pattern():
    """Plain weave, 10 vertical and 7 horizontal threads per cm."""
    return WeavePattern.plain(10.0, 7.0)


@pytest.fixture(scope="session")
def plain_image(plain_pattern):
    """Clean 4 cm x 4 cm rendering at 200 px/cm (800 x 800 px)."""
    return synthesize_image(plain_pattern, size=(4.0, 4.0), resolution=200.0)


@pytest.fixture(scope="session")
def plain_psd(plain_image):
    return averaged_periodogram(plain_image, SegmentationPlan())


@pytest.fixture(scope="session")
def plain_peaks(plain_psd):
    return detect_peaks(plain_psd)


@pytest.fixture(scope="session")
def smooth_plain_image():
    """Raised-cosine plain weave, 10 x 7 threads/cm, on exact DFT bins (600 x 600 px)."""
    pattern = WeavePattern.plain(10.0, 7.0)
    side = 600 / EXACT_RESOLUTION
    return synthesize_image(
        pattern,
        BasicShape.default(pattern, kind=ShapeKind.RAISED_COSINE),
        size=(side, side),
        resolution=EXACT_RESOLUTION,
    )


@pytest.fixture(scope="session")
def smooth_plain_psd(smooth_plain_image):
    return averaged_periodogram(smooth_plain_image, SegmentationPlan())
