#!/usr/bin/env python
"""
Sweep synthetic weaves through the averaged-periodogram pipeline.

Renders each pattern of the oracle matrix (plain and simple twills, clean and
degraded), fits the spectral triangle, fingerprints the spectrum and records
recovered against true parameters. Use it to check that threshold changes in
the analysis config keep the synthetic cases intact.

Usage:
    uv run python scripts/oracle_sweep.py
    uv run python scripts/oracle_sweep.py --config my-config.json --out sweep.json
    uv run python scripts/oracle_sweep.py --degraded
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from rich.console import Console
from rich.table import Table

from canvas_psd.config import load_config
from canvas_psd.counting import detect_peaks, fit_spectral_triangle
from canvas_psd.errors import CanvasPsdError
from canvas_psd.features import fingerprint_spectrum
from canvas_psd.logging import configure_logging
from canvas_psd.spectrum import averaged_periodogram
from canvas_psd.weave import BasicShape, DegradationSpec, ShapeKind, WeavePattern, synthesize_image

console = Console()

# (m, n, f_v, f_h)
PATTERNS = [
    (2, 1, 10.0, 7.0),
    (2, 1, 8.0, 12.0),
    (2, 1, 14.0, 9.0),
    (3, 1, 12.0, 12.0),
    (3, 2, 12.0, 12.0),
    (4, 1, 12.0, 10.0),
    (4, 3, 12.0, 10.0),
    (5, 1, 10.0, 10.0),
    (5, 4, 12.0, 10.0),
]

DEGRADATIONS = {
    "clean": DegradationSpec(),
    "jitter+blur+10dB": DegradationSpec(jitter=0.005, blur=1.0, snr_db=10.0, seed=1),
    "thread jitter": DegradationSpec(thread_jitter_v=0.003, thread_jitter_h=0.003, seed=2),
    "merged pairs": DegradationSpec(merge_sigma=0.4),
    "rotated 3deg": DegradationSpec(rotation=3.0),
}


def run_sweep(config_path: Path | None, degraded: bool, resolution: float, size: float) -> list[dict]:
    config = load_config(config_path)
    det = config.detector
    variants = DEGRADATIONS if degraded else {"clean": DEGRADATIONS["clean"]}
    rows: list[dict] = []
    for m, n, f_v, f_h in PATTERNS:
        pattern = WeavePattern(m=m, n=n, p=1, d_v=1 / f_v, d_h=1 / f_h)
        shape = BasicShape.default(pattern, kind=ShapeKind.RAISED_COSINE)
        for name, degradation in variants.items():
            console.print(f"[dim]-> m={m} n={n} {f_v:g}x{f_h:g}  |  {name}[/]")
            start = time.time()
            row = {"m": m, "n": n, "f_v": f_v, "f_h": f_h, "degradation": name, "fit": None, "error": None}
            try:
                image = synthesize_image(pattern, shape, (size, size), resolution, degradation)
                psd = averaged_periodogram(image, config.plan, workers=4)
                peaks = detect_peaks(psd, det.dc_radius, det.min_separation, det.rel_threshold, det.floor, det.max_peaks)
                fit = fit_spectral_triangle(peaks, p=1, config=config.fit)
                fp = fingerprint_spectrum(psd, peaks, fit, det, config.classifier)
                row["fit"] = fit.to_dict()
                row["fingerprint"] = fp.to_dict()
            except CanvasPsdError as e:
                row["error"] = e.to_dict()
            row["latency_s"] = round(time.time() - start, 1)
            rows.append(row)
    return rows


def _recovered(row: dict) -> bool:
    fit = row["fit"]
    if fit is None:
        return False
    return (
        (fit["m"], fit["n"]) == (row["m"], row["n"])
        and abs(fit["f_v"] - row["f_v"]) <= 0.05 * row["f_v"]
        and abs(fit["f_h"] - row["f_h"]) <= 0.05 * row["f_h"]
    )


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", type=Path, default=None)
    ap.add_argument("--degraded", action="store_true", help="Also run every degradation variant")
    ap.add_argument("--resolution", type=float, default=200.0)
    ap.add_argument("--size", type=float, default=4.0, help="Image side (cm)")
    ap.add_argument("--out", default="oracle_sweep.json")
    args = ap.parse_args()

    configure_logging("WARNING")
    rows = run_sweep(args.config, args.degraded, args.resolution, args.size)

    Path(args.out).write_text(json.dumps(rows, indent=2), encoding="utf-8")

    table = Table(title="Synthetic oracle sweep")
    table.add_column("Pattern", style="cyan")
    table.add_column("Degradation")
    table.add_column("m,n", justify="right")
    table.add_column("f_v", justify="right")
    table.add_column("f_h", justify="right")
    table.add_column("Edge / Diag / Centre / Axes")
    table.add_column("OK", justify="center")
    for r in rows:
        fit = r["fit"]
        fp = r.get("fingerprint")
        table.add_row(
            f"{r['m']},{r['n']} {r['f_v']:g}x{r['f_h']:g}",
            r["degradation"],
            f"{fit['m']},{fit['n']}" if fit else "-",
            f"{fit['f_v']:.2f}" if fit else "-",
            f"{fit['f_h']:.2f}" if fit else "-",
            " / ".join(fp[k] for k in ("edge_shape", "diagonal_connection", "center_shape", "axis_emphasis"))
            if fp
            else r["error"]["error"],
            "[green]y[/]" if _recovered(r) else "[red]n[/]",
        )
    console.print(table)
    console.print(f"[dim]Full results written to {args.out}[/]")


if __name__ == "__main__":
    main()
