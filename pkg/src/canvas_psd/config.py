"""
Configuration management for canvas_psd.

Two layers:

- :class:`Settings` (pydantic-settings) holds process-level knobs read from
  ``CANVAS_PSD_*`` environment variables or ``.env``: log level, worker count
  and the default analysis-config path (``CANVAS_PSD_CONFIG``).
- :class:`AnalysisConfig` (pydantic) is the analysis configuration proper. It is
  loaded from a JSON file, echoed verbatim into every report, and is enough to
  reproduce a report bit-identically from the same input image.

Every detector and classifier threshold lives here with its default so the
categorical outputs stay reproducible from the stored metrics.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from canvas_psd.errors import ConfigError
from canvas_psd.spectrum import SegmentationPlan
from canvas_psd.weave import DegradationSpec


class Settings(BaseSettings):
    """Process settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="CANVAS_PSD_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO",
        description="Logging level",
    )
    config: Path | None = Field(
        default=None,
        description="Default analysis config file used when --config is not given",
    )
    workers: int = Field(
        default=4,
        ge=1,
        description="Thread-pool size for segment periodograms and swatch maps",
    )


# -----------------------------------------------------------------------------
# Analysis configuration
# -----------------------------------------------------------------------------
class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SwatchConfig(_Section):
    """Standard sliding-swatch counting."""

    size_cm: float = Field(default=1.0, gt=0, description="Swatch side (cm)")
    overlap_fraction: float = Field(default=0.5, ge=0, lt=1, description="Overlap between neighbouring swatches")
    n_dft: int = Field(default=1024, ge=8, description="DFT size per swatch")
    min_confidence: float = Field(default=0.5, gt=0, le=1, description="Confidence needed to enter statistics")
    bin_width: float | None = Field(
        default=None,
        gt=0,
        description="Histogram bin width (threads/cm); default is one swatch DFT bin",
    )


class PeakDetectorConfig(_Section):
    """Local-maximum detection on the averaged periodogram."""

    dc_radius: float = Field(default=3.0, gt=0, description="DC exclusion radius (threads/cm)")
    min_separation: float = Field(default=1.0, gt=0, description="Minimum distance between peaks (threads/cm)")
    rel_threshold: float = Field(default=4.0, gt=0, description="Peak threshold as a multiple of the off-DC median")
    floor: float = Field(
        default=1e-6,
        gt=0,
        lt=1,
        description="Dynamic-range floor relative to the strongest off-DC value",
    )
    max_peaks: int = Field(default=200, ge=2, description="Keep at most this many peaks (strongest first)")


class TriangleFitConfig(_Section):
    """Lattice-first spectral-triangle search."""

    spacing_tolerance: float = Field(default=0.05, gt=0, lt=0.5, description="Relative tolerance of peak spacing")
    min_coverage: float = Field(
        default=0.8,
        gt=0,
        le=1,
        description="Magnitude-weighted fraction of detected peaks the lattice must explain",
    )
    max_residual: float = Field(
        default=0.1,
        gt=0,
        description="Largest RMS residual, as a fraction of the shortest reciprocal basis vector",
    )
    max_m: int = Field(default=8, ge=2, description="Largest hypotenuse segment count searched")
    axis_window_deg: float = Field(default=20.0, gt=0, lt=45, description="Angular window around each axis")
    right_angle_tolerance_deg: float = Field(default=3.0, gt=0, description="Allowed deviation from 90 degrees")
    basis_peaks: int = Field(default=12, ge=2, description="Strongest peaks whose pairs span candidate lattices")
    strong_fraction: float = Field(
        default=0.1,
        gt=0,
        le=1,
        description="Peaks above this fraction of the strongest must be explained by the chosen lattice",
    )
    min_extra_peaks: int = Field(
        default=2,
        ge=1,
        description="A finer lattice beats a coarser one only when it explains this many more peaks",
    )


class ClassifierConfig(_Section):
    """Thresholds of the four fingerprint features."""

    elongation: float = Field(default=2.0, gt=1, description="Cross when the median far-peak elongation exceeds this")
    far_factor: float = Field(default=1.3, gt=1, description="Far peaks lie beyond this multiple of the first radius")
    ridge: float = Field(default=0.25, gt=0, lt=1, description="Diagonal connection when the ridge ratio exceeds this")
    prominence: float = Field(default=0.2, gt=0, lt=1, description="Plain centre below this prominence")
    dip: float = Field(default=0.05, gt=0, lt=1, description="O centre when an interior dip reaches this depth")
    axis_ratio: float = Field(default=3.0, gt=1, description="Axis emphasis above this median ratio")
    diagonal_min_angle_deg: float = Field(
        default=10.0, gt=0, lt=45, description="Diagonal peaks stay this far off axes"
    )


class AnalysisConfig(_Section):
    """Full analysis configuration; echoed into every report."""

    plan: SegmentationPlan = Field(default_factory=SegmentationPlan)
    swatch: SwatchConfig = Field(default_factory=SwatchConfig)
    p: int = Field(default=1, ge=1, description="Horizontal threads per basic shape (never inferred)")
    resolution_override: float | None = Field(default=None, gt=0, description="Pixels per cm, overrides sidecars")
    detector: PeakDetectorConfig = Field(default_factory=PeakDetectorConfig)
    fit: TriangleFitConfig = Field(default_factory=TriangleFitConfig)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    degradation: DegradationSpec = Field(
        default_factory=DegradationSpec,
        description="Synthesis degradations, read by synth only",
    )
    seed: int = Field(default=0, ge=0, description="Synthesis seed when the degradation section sets none")

    @model_validator(mode="before")
    @classmethod
    def _seed_degradation(cls, data: Any) -> Any:
        """A top-level ``seed`` seeds synthesis unless ``degradation`` names its own."""
        if not isinstance(data, dict) or "seed" not in data:
            return data
        degradation = data.get("degradation", {})
        if isinstance(degradation, DegradationSpec):
            if "seed" in degradation.model_fields_set:
                return data
            degradation = degradation.model_dump(exclude_unset=True)
        elif not isinstance(degradation, dict) or "seed" in degradation:
            return data
        return {**data, "degradation": {**degradation, "seed": data["seed"]}}

    def validate_consistency(self) -> list[str]:
        """Return cross-field problems that field constraints cannot express."""
        errors: list[str] = []
        if self.detector.min_separation >= self.detector.dc_radius * 4:
            errors.append(
                f"detector.min_separation={self.detector.min_separation} is large against "
                f"dc_radius={self.detector.dc_radius}; nearby lattice peaks would be merged"
            )
        if self.swatch.bin_width is not None and self.swatch.bin_width > self.detector.dc_radius:
            errors.append(f"swatch.bin_width={self.swatch.bin_width} exceeds the DC exclusion radius")
        return errors

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")


def load_config(path: Path | str | None = None) -> AnalysisConfig:
    """Load an AnalysisConfig from JSON.

    Resolution order: explicit ``path``, then ``settings.config``
    (``CANVAS_PSD_CONFIG``), then built-in defaults.
    """
    source = Path(path) if path is not None else settings.config
    if source is None:
        return AnalysisConfig()
    try:
        raw = json.loads(Path(source).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {source}: {exc}", path=str(source)) from exc
    try:
        config = AnalysisConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid config {source}: {exc}", path=str(source)) from exc
    if problems := config.validate_consistency():
        raise ConfigError("inconsistent config: " + "; ".join(problems), path=str(source))
    return config


# Global settings instance
settings = Settings()
