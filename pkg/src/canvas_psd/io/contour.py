"""
Plain-text contour export of a spectrum, for plotting outside this package.

Layout::

    # canvas-psd contour n_dft=2048 bin_width=0.0977 segments=25 window=blackman-harris scale=linear
    fx <f_x of column 0> <f_x of column 1> ...
    <f_y of row 0> <value> <value> ...
    ...

Rows run from the most negative f_y to the most positive; both axes are
monotone and symmetric about 0 (up to the extra bin of an even N_DFT).
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import numpy as np

from canvas_psd.spectrum import Spectrum2D


def write_contour(psd: Spectrum2D, path: Path | str, scale: Literal["linear", "log10"] = "linear") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = psd.values
    if scale == "log10":
        positive = values[values > 0]
        floor = positive.min() if positive.size else 1.0
        values = np.log10(np.maximum(values, floor))
    freqs = psd.freqs
    header = (
        f"canvas-psd contour n_dft={psd.n_dft} bin_width={psd.bin_width:.10g} "
        f"segments={psd.segment_count} window={psd.window} scale={scale}"
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        fh.write("fx " + " ".join(f"{f:.10g}" for f in freqs) + "\n")
        np.savetxt(fh, np.column_stack([freqs, values]), fmt="%.10g")
    return path


def read_contour(path: Path | str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fx, fy, values) from a contour file."""
    with open(path, encoding="utf-8") as fh:
        fh.readline()
        fx = np.array([float(v) for v in fh.readline().split()[1:]])
        body = np.loadtxt(fh, ndmin=2)
    return fx, body[:, 0], body[:, 1:]
