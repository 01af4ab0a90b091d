"""End-to-end tests of the analysis pipelines on synthetic radiographs."""

import json

import numpy as np
import pytest
from PIL import Image

from canvas_psd.config import AnalysisConfig
from canvas_psd.errors import InsufficientDataError, MissingResolutionError, ReportError
from canvas_psd.features import Verdict
from canvas_psd.io import read_report, read_swatch_csv
from canvas_psd.io.report import meta_path
from canvas_psd.pipeline import run_compare, run_count, run_fingerprint, run_psd, run_synth
from canvas_psd.weave import ShapeKind, WeavePattern


@pytest.fixture(scope="module")
def scan(tmp_path_factory):
    """3 cm x 3 cm plain 10 x 7 radiograph with its sidecar."""
    path = tmp_path_factory.mktemp("scans") / "plain.png"
    run_synth(WeavePattern.plain(10.0, 7.0), path, size=(3.0, 3.0), resolution=200.0)
    return path


def test_synth_writes_ground_truth(tmp_path):
    path = tmp_path / "twill.pgm"
    image, sidecar = run_synth(
        WeavePattern.twill(3, 12.0, 12.0),
        path,
        size=(1.0, 1.5),
        resolution=100.0,
        shape_kind=ShapeKind.RAISED_COSINE,
    )
    assert image.shape == (150, 100)
    on_disk = json.loads((tmp_path / "twill.pgm.json").read_text())
    assert on_disk == sidecar
    assert sidecar["pattern"]["m"] == 3
    assert sidecar["resolution"] == 100.0
    assert sidecar["shape"]["kind"] == "raised-cosine-rectangle"
    assert sidecar["spectral_triangle"]["vertices"][1] == pytest.approx([12.0, 0.0])
    assert any(np.allclose(peak, [12.0, 0.0]) for peak in sidecar["predicted_peaks"])


def test_psd_recovers_counts(scan):
    report = run_psd(scan, workers=2)
    fit = report.triangle_fit
    assert (fit.m, fit.n, fit.p) == (2, 1, 1)
    assert fit.f_v == pytest.approx(10.0, abs=0.1)
    assert fit.f_h == pytest.approx(7.0, abs=0.1)
    assert report.fit_error is None
    assert report.spectrum["segment_count"] == 9
    assert report.source["resolution"] == 200.0
    assert len(report.source["sha256"]) == 64


def test_report_independent_of_workers(scan, tmp_path):
    one = run_psd(scan, out=tmp_path / "one.json", workers=1)
    four = run_psd(scan, out=tmp_path / "four.json", workers=4)
    assert one.to_json() == four.to_json()
    assert (tmp_path / "one.json").read_bytes() == (tmp_path / "four.json").read_bytes()
    assert json.loads(meta_path(tmp_path / "four.json").read_text())["workers"] == 4


def test_count_report_and_csv(scan, tmp_path):
    report = run_count(scan, out=tmp_path / "count.json", csv=tmp_path / "maps.csv")
    stats = report.count_statistics
    assert stats.vertical.mode == pytest.approx(10.0, abs=200 / 1024)
    assert stats.horizontal.mode == pytest.approx(7.0, abs=200 / 1024)
    assert stats.total == 25
    assert read_swatch_csv(tmp_path / "maps.csv").height == 25
    assert read_report(tmp_path / "count.json").count_statistics == stats


def test_fingerprint_and_self_compare(scan, tmp_path):
    out = tmp_path / "fp.json"
    report = run_fingerprint(scan, out=out, contour=tmp_path / "psd.txt")
    assert report.fingerprint.f_v == pytest.approx(10.0, abs=0.1)
    assert (tmp_path / "psd.txt").exists()
    result = run_compare(out, out)
    assert result.verdict is Verdict.MATCH
    assert result.pairing == "direct"


def test_compare_needs_fingerprints(scan, tmp_path):
    out = run_psd(scan, out=tmp_path / "psd.json")
    assert out.fingerprint is None
    with pytest.raises(ReportError):
        run_compare(tmp_path / "psd.json", tmp_path / "psd.json")


def test_failed_fit_is_recorded(tmp_path):
    path = tmp_path / "noise.png"
    rng = np.random.default_rng(2)
    Image.fromarray(rng.integers(0, 65535, size=(400, 400), dtype=np.uint16)).save(path)
    report = run_psd(path, resolution=200.0)
    assert report.triangle_fit is None
    assert report.fit_error["error"] == "fit-failed"


def test_resolution_override(tmp_path):
    path = tmp_path / "bare.pgm"
    Image.fromarray(np.zeros((400, 400), dtype=np.uint8)).save(path)
    with pytest.raises(MissingResolutionError):
        run_count(path)
    # Loads with the override, then finds nothing to count in a blank image.
    with pytest.raises(InsufficientDataError):
        run_count(path, AnalysisConfig(resolution_override=200.0))


def test_report_files_hold_plain_json_types(scan, tmp_path):
    """Fit flags and counts reach the report file as JSON booleans and numbers."""
    out = tmp_path / "fp.json"
    run_fingerprint(scan, out=out)
    fit = json.loads(out.read_text())["triangle_fit"]
    assert fit["accepted"] is True
    assert fit["degenerate"] is False
    assert isinstance(fit["m"], int)
    assert isinstance(fit["coverage"], float)
    assert read_report(out).triangle_fit.accepted


def test_failed_fit_report_file_is_written(tmp_path):
    path = tmp_path / "noise.png"
    rng = np.random.default_rng(2)
    Image.fromarray(rng.integers(0, 65535, size=(400, 400), dtype=np.uint16)).save(path)
    out = tmp_path / "noise.json"
    run_psd(path, out=out, resolution=200.0)
    error = json.loads(out.read_text())["fit_error"]
    assert error["error"] == "fit-failed"
    assert error["best"] is None or error["best"]["accepted"] is False


def test_resolution_flag_beats_sidecar(scan):
    """The sidecar says 200 px/cm; an explicit resolution takes precedence."""
    assert run_psd(scan).source["resolution"] == 200.0
    assert run_psd(scan, resolution=400.0).source["resolution"] == 400.0
    assert run_psd(scan, AnalysisConfig(resolution_override=300.0)).source["resolution"] == 300.0
    assert run_psd(scan, AnalysisConfig(resolution_override=300.0), resolution=400.0).source["resolution"] == 400.0
