"""
Image ingestion and synthetic-image output.

Radiographs come as 8- or 16-bit single-channel PGM/PNG (RGB is reduced to
luminance). Intensities are mapped to [0, 1]. The pixels-per-cm resolution is
mandatory: an explicit override wins, then a sidecar ``<image>.json`` with a
``resolution`` key, otherwise :class:`MissingResolutionError`.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image, UnidentifiedImageError

from canvas_psd.errors import ImageLoadError, MissingResolutionError, MultiFrameError
from canvas_psd.logging import get_logger
from canvas_psd.spectrum import ImageGrid

log = get_logger("canvas_psd.io.images")

LUMINANCE = (0.2126, 0.7152, 0.0722)
_FULL_SCALE = {"L": 255.0, "I;16": 65535.0, "I;16B": 65535.0, "I;16L": 65535.0, "I": 65535.0}


def sidecar_path(path: Path | str) -> Path:
    """``scan.png`` -> ``scan.png.json``."""
    path = Path(path)
    return path.with_name(path.name + ".json")


def read_sidecar(path: Path | str) -> dict[str, Any] | None:
    side = sidecar_path(path)
    if not side.exists():
        return None
    try:
        return json.loads(side.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ImageLoadError(f"cannot read sidecar {side}: {exc}", path=str(side)) from exc


def write_sidecar(path: Path | str, data: dict[str, Any]) -> Path:
    side = sidecar_path(path)
    side.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return side


def _to_array(img: Image.Image, path: Path) -> np.ndarray:
    mode = img.mode
    if mode == "P":
        img, mode = img.convert("RGB"), "RGB"
    elif mode == "LA":
        img, mode = img.convert("L"), "L"
    elif mode == "RGBA":
        img, mode = img.convert("RGB"), "RGB"
    if mode == "RGB":
        rgb = np.asarray(img, dtype=np.float64) / 255.0
        return rgb @ np.array(LUMINANCE)
    if mode in _FULL_SCALE:
        return np.asarray(img, dtype=np.float64) / _FULL_SCALE[mode]
    raise ImageLoadError(f"unsupported pixel format {mode!r}", path=str(path), mode=mode)


def load_image(path: Path | str, resolution: float | None = None) -> ImageGrid:
    """Read a radiograph into an ImageGrid with intensities in [0, 1]."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            if getattr(img, "n_frames", 1) > 1:
                raise MultiFrameError(f"{path} holds {img.n_frames} frames", path=str(path), frames=img.n_frames)
            pixels = _to_array(img, path)
    except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
        raise ImageLoadError(f"cannot read image {path}: {exc}", path=str(path)) from exc

    if resolution is None:
        meta = read_sidecar(path) or {}
        resolution = meta.get("resolution")
    if resolution is None:
        raise MissingResolutionError(
            f"no resolution for {path}: pass --resolution or add {sidecar_path(path).name}",
            path=str(path),
        )
    pixels = np.clip(pixels, 0.0, 1.0)
    log.debug("image.loaded", path=str(path), shape=list(pixels.shape), resolution=resolution)
    return ImageGrid(pixels=pixels, resolution=float(resolution), origin_label=str(path))


def save_image(image: ImageGrid, path: Path | str) -> Path:
    """Write ``image`` scaled to its maximum: 16-bit PNG, or 8-bit for ``.pgm``."""
    path = Path(path)
    peak = float(image.pixels.max())
    scaled = image.pixels / peak if peak > 0 else image.pixels
    if path.suffix.lower() == ".pgm":
        Image.fromarray(np.round(scaled * 255).astype(np.uint8)).save(path)
    else:
        Image.fromarray(np.round(scaled * 65535).astype(np.uint16)).save(path)
    return path
