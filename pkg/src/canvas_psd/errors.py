"""
Error hierarchy for canvas_psd.

Every error carries a machine-readable ``category`` and the CLI exit code used
when it escapes a command. ``context`` holds whatever locates the failure
(input path, swatch coordinates, plan parameters) so the CLI can surface it
without parsing the message.
"""

from __future__ import annotations

from typing import Any, ClassVar


class CanvasPsdError(RuntimeError):
    """Base class for all canvas_psd failures."""

    category: ClassVar[str] = "error"
    exit_code: ClassVar[int] = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context: dict[str, Any] = context

    def to_dict(self) -> dict[str, Any]:
        return {"error": self.category, "message": str(self), "context": self.context}


# -----------------------------------------------------------------------------
# Geometry
# -----------------------------------------------------------------------------
class DegenerateBasisError(CanvasPsdError):
    """The two basis vectors are (numerically) linearly dependent."""

    category = "degenerate-basis"
    exit_code = 5


class NoCanonicalFormError(CanvasPsdError):
    """The lattice has no horizontal vector within the angular tolerance."""

    category = "no-canonical-form"
    exit_code = 5


class PatternError(CanvasPsdError):
    """Weave pattern parameters violate the (m, n, p, d_v, d_h) model."""

    category = "invalid-pattern"
    exit_code = 4


class AliasingError(CanvasPsdError):
    """Thread spacing below two pixels: the raster cannot represent the weave."""

    category = "aliasing"
    exit_code = 5


# -----------------------------------------------------------------------------
# Analysis
# -----------------------------------------------------------------------------
class ImageTooSmallError(CanvasPsdError):
    """Image smaller than one segment or swatch."""

    category = "image-too-small"
    exit_code = 5


class InsufficientDataError(CanvasPsdError):
    """No confident swatch measurement to build statistics from."""

    category = "insufficient-data"
    exit_code = 5


class FitFailedError(CanvasPsdError):
    """No spectral triangle explains the peak set well enough.

    ``best`` is the highest-scoring candidate that was rejected (or None when
    no candidate could even be formed).
    """

    category = "fit-failed"
    exit_code = 6

    def __init__(self, message: str, best: Any = None, **context: Any):
        super().__init__(message, **context)
        self.best = best

    def to_dict(self) -> dict[str, Any]:
        out = super().to_dict()
        out["best"] = self.best.to_dict() if self.best is not None else None
        return out


# -----------------------------------------------------------------------------
# Input / output
# -----------------------------------------------------------------------------
class ImageLoadError(CanvasPsdError):
    """The image file cannot be read or has an unsupported pixel format."""

    category = "unreadable-image"
    exit_code = 3


class MissingResolutionError(CanvasPsdError):
    """Neither a sidecar nor a flag provides the pixels-per-cm resolution."""

    category = "missing-resolution"
    exit_code = 3


class MultiFrameError(CanvasPsdError):
    """The image container holds more than one frame."""

    category = "multi-frame"
    exit_code = 3


class ReportError(CanvasPsdError):
    """A report file does not match the report schema."""

    category = "invalid-report"
    exit_code = 3


class ConfigError(CanvasPsdError):
    """The analysis configuration is invalid."""

    category = "invalid-config"
    exit_code = 4
