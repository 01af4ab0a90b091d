"""
Command-line interface for canvas_psd.

Commands:
- synth: Render a synthetic weave radiograph plus a ground-truth sidecar
- count: Standard swatch counting (density/angle maps, histogram statistics)
- psd: Averaged periodogram -> peaks -> spectral triangle (m, n, f_v, f_h)
- fingerprint: Triangle fit plus the four-feature PSD fingerprint
- compare: Compare the fingerprints of two reports
- config show / validate: Inspect analysis configs
- doctor: Print the active settings and library versions

Failures exit nonzero with a JSON error object on stderr:
``{"error": <category>, "message": ..., "context": {...}}``.
"""

from __future__ import annotations

import json
import sys
from enum import StrEnum
from pathlib import Path

import typer
from rich.console import Console
from rich.table import Table

from canvas_psd.errors import CanvasPsdError

app = typer.Typer(
    name="canvas-psd",
    help="Canvas thread counting and weave fingerprints from radiographs",
    no_args_is_help=True,
)

config_app = typer.Typer(name="config", help="Inspect and validate analysis configs", no_args_is_help=True)
app.add_typer(config_app)

console = Console()


class PatternKind(StrEnum):
    PLAIN = "plain"
    TWILL = "twill"
    CUSTOM = "custom"


def _fail(exc: CanvasPsdError) -> typer.Exit:
    sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True, default=str) + "\n")
    return typer.Exit(code=exc.exit_code)


def _load_config(path: Path | None):
    from canvas_psd.config import load_config

    return load_config(path)


def _emit(report, out: Path | None) -> None:
    """Report JSON to stdout when not written to a file, a summary otherwise."""
    if out is None:
        typer.echo(report.to_json(), nl=False)
        return
    console.print(f"[green]Wrote[/] {out}")


def _fit_table(report) -> Table:
    table = Table(title="Spectral triangle")
    for column in ("m", "n", "p", "f_v", "f_h", "residual", "coverage"):
        table.add_column(column, justify="right")
    fit = report.triangle_fit
    table.add_row(
        str(fit.m),
        str(fit.n),
        str(fit.p),
        f"{fit.f_v:.2f}",
        f"{fit.f_h:.2f}",
        f"{fit.residual:.3g}",
        f"{fit.coverage:.2f}",
    )
    return table


@app.callback()
def main(
    log_level: str = typer.Option(None, "--log-level", help="DEBUG|INFO|WARNING|ERROR (default from settings)"),
):
    """Configure logging before any command runs."""
    from canvas_psd.config import settings
    from canvas_psd.logging import configure_logging

    configure_logging(log_level or settings.log_level)


@app.command()
def synth(
    out: Path = typer.Argument(..., help="Output image (.png 16-bit, .pgm 8-bit)"),
    pattern: PatternKind = typer.Option(PatternKind.PLAIN, "--pattern", help="plain|twill|custom"),
    fv: float = typer.Option(10.0, "--fv", help="Vertical threads per cm"),
    fh: float = typer.Option(10.0, "--fh", help="Horizontal threads per cm"),
    m: int = typer.Option(3, "--m", help="Vertical threads per basic shape (twill/custom)"),
    n: int = typer.Option(1, "--n", help="Shift of the basic shape in vertical threads (twill/custom)"),
    p: int = typer.Option(1, "--p", help="Horizontal threads per basic shape (custom)"),
    width: float = typer.Option(4.0, "--width", help="Image width (cm)"),
    height: float = typer.Option(4.0, "--height", help="Image height (cm)"),
    resolution: float = typer.Option(200.0, "--resolution", "-r", help="Pixels per cm"),
    raised_cosine: bool = typer.Option(False, "--raised-cosine", help="Taper the basic shape edges"),
    jitter: float = typer.Option(None, "--jitter", help="Per-shape jitter sigma (cm)"),
    thread_jitter_v: float = typer.Option(None, "--thread-jitter-v", help="Vertical thread spacing jitter (cm)"),
    thread_jitter_h: float = typer.Option(None, "--thread-jitter-h", help="Horizontal thread spacing jitter (cm)"),
    rotation: float = typer.Option(None, "--rotation", help="Rotation (degrees)"),
    blur: float = typer.Option(None, "--blur", help="Gaussian blur sigma (px)"),
    merge: float = typer.Option(None, "--merge", help="Horizontal thread-merging blur (fraction of d_v)"),
    noise: float = typer.Option(None, "--noise", help="White noise sigma"),
    snr_db: float = typer.Option(None, "--snr-db", help="White noise from a signal-to-noise ratio (dB)"),
    seed: int = typer.Option(None, "--seed", help="Random seed (default: the config's)"),
    config: Path = typer.Option(
        None, "--config", "-c", help="Take degradations and seed from a config; flags override it"
    ),
):
    """Render a synthetic weave radiograph and its ground-truth sidecar."""
    from pydantic import ValidationError

    from canvas_psd.errors import ConfigError, PatternError
    from canvas_psd.pipeline import run_synth
    from canvas_psd.weave import DegradationSpec, ShapeKind, WeavePattern

    try:
        if fv <= 0 or fh <= 0:
            raise PatternError(f"thread densities must be positive (fv={fv}, fh={fh})", fv=fv, fh=fh)
        if pattern is PatternKind.PLAIN:
            weave = WeavePattern.plain(fv, fh)
        elif pattern is PatternKind.TWILL:
            weave = WeavePattern.twill(m, fv, fh, n=n)
        else:
            weave = WeavePattern(m=m, n=n, p=p, d_v=1.0 / fv, d_h=1.0 / fh)
        flags = {
            "jitter": jitter,
            "thread_jitter_v": thread_jitter_v,
            "thread_jitter_h": thread_jitter_h,
            "rotation": rotation,
            "blur": blur,
            "merge_sigma": merge,
            "noise": noise,
            "snr_db": snr_db,
            "seed": seed,
        }
        # Only flags given on the command line override the config, whatever their value.
        base = _load_config(config).degradation
        overrides = {name: value for name, value in flags.items() if value is not None}
        degradation = DegradationSpec.model_validate({**base.model_dump(), **overrides})
        kind = ShapeKind.RAISED_COSINE if raised_cosine else ShapeKind.RECTANGLE
        image, sidecar = run_synth(weave, out, (width, height), resolution, kind, degradation)
    except ValidationError as exc:
        raise _fail(ConfigError(f"invalid degradation: {exc}")) from exc
    except CanvasPsdError as exc:
        raise _fail(exc) from exc
    pat = sidecar["pattern"]
    console.print(
        f"[green]Wrote[/] {out} ({image.shape[1]}x{image.shape[0]} px)  "
        f"m={pat['m']} n={pat['n']} p={pat['p']} f_v={pat['f_v']:.2f} f_h={pat['f_h']:.2f}"
    )


@app.command()
def count(
    image: Path = typer.Argument(..., help="Radiograph (PNG/PGM)"),
    config: Path = typer.Option(None, "--config", "-c", help="Analysis config JSON (default: CANVAS_PSD_CONFIG)"),
    resolution: float = typer.Option(None, "--resolution", "-r", help="Pixels per cm (overrides sidecar)"),
    out: Path = typer.Option(None, "--out", "-o", help="Write the report here instead of stdout"),
    csv: Path = typer.Option(None, "--csv", help="Write per-swatch measurements as CSV"),
    workers: int = typer.Option(None, "--workers", "-w", help="Worker threads"),
):
    """Standard swatch counting: mode, mean and std per thread direction."""
    from canvas_psd.pipeline import run_count

    try:
        report = run_count(image, _load_config(config), out=out, csv=csv, resolution=resolution, workers=workers)
    except CanvasPsdError as exc:
        raise _fail(exc) from exc
    _emit(report, out)
    if out is not None:
        stats = report.count_statistics
        table = Table(title="Swatch counts (threads/cm)")
        for column in ("direction", "mode", "mean", "std", "angle"):
            table.add_column(column, justify="right")
        for name, block in (("vertical", stats.vertical), ("horizontal", stats.horizontal)):
            table.add_row(name, f"{block.mode:.2f}", f"{block.mean:.2f}", f"{block.std:.2f}", f"{block.angle_mean:.1f}")
        console.print(table)


def _spectral_command(runner, image, config, resolution, out, contour, workers) -> None:
    from canvas_psd.errors import FitFailedError

    try:
        report = runner(image, _load_config(config), out=out, contour=contour, resolution=resolution, workers=workers)
    except CanvasPsdError as exc:
        raise _fail(exc) from exc
    _emit(report, out)
    if report.triangle_fit is None:
        error = report.fit_error or {}
        sys.stderr.write(json.dumps(error, sort_keys=True, default=str) + "\n")
        raise typer.Exit(code=FitFailedError.exit_code)
    if out is not None:
        console.print(_fit_table(report))


@app.command()
def psd(
    image: Path = typer.Argument(..., help="Radiograph (PNG/PGM)"),
    config: Path = typer.Option(None, "--config", "-c", help="Analysis config JSON (default: CANVAS_PSD_CONFIG)"),
    resolution: float = typer.Option(None, "--resolution", "-r", help="Pixels per cm (overrides sidecar)"),
    out: Path = typer.Option(None, "--out", "-o", help="Write the report here instead of stdout"),
    contour: Path = typer.Option(None, "--contour", help="Export the averaged PSD as a text grid"),
    workers: int = typer.Option(None, "--workers", "-w", help="Worker threads"),
):
    """Count threads from the spectral triangle of the averaged periodogram."""
    from canvas_psd.pipeline import run_psd

    _spectral_command(run_psd, image, config, resolution, out, contour, workers)


@app.command()
def fingerprint(
    image: Path = typer.Argument(..., help="Radiograph (PNG/PGM)"),
    config: Path = typer.Option(None, "--config", "-c", help="Analysis config JSON (default: CANVAS_PSD_CONFIG)"),
    resolution: float = typer.Option(None, "--resolution", "-r", help="Pixels per cm (overrides sidecar)"),
    out: Path = typer.Option(None, "--out", "-o", help="Write the report here instead of stdout"),
    contour: Path = typer.Option(None, "--contour", help="Export the averaged PSD as a text grid"),
    workers: int = typer.Option(None, "--workers", "-w", help="Worker threads"),
):
    """Triangle fit plus edge, diagonal, centre and axis features of the PSD."""
    from canvas_psd.pipeline import run_fingerprint

    _spectral_command(run_fingerprint, image, config, resolution, out, contour, workers)


@app.command()
def compare(
    first: Path = typer.Argument(..., help="Fingerprint report of the first canvas"),
    second: Path = typer.Argument(..., help="Fingerprint report of the second canvas"),
    tolerance: float = typer.Option(1.0, "--tolerance", help="Count agreement tolerance (threads/cm)"),
    out: Path = typer.Option(None, "--out", "-o", help="Write the match report here instead of stdout"),
):
    """Compare two canvases by thread counts and PSD features."""
    from canvas_psd.pipeline import run_compare

    try:
        result = run_compare(first, second, tolerance=tolerance)
    except CanvasPsdError as exc:
        raise _fail(exc) from exc
    text = json.dumps(result.to_dict(), sort_keys=True, indent=2) + "\n"
    if out is None:
        typer.echo(text, nl=False)
        return
    out.write_text(text, encoding="utf-8")
    console.print(f"[bold]{result.verdict.value}[/] ({result.pairing} pairing, {result.equal_features}/4 features)")


@config_app.command("show")
def config_show(
    path: Path = typer.Argument(None, help="Config file (default: CANVAS_PSD_CONFIG or built-in defaults)"),
):
    """Print the effective analysis config as JSON."""
    try:
        cfg = _load_config(path)
    except CanvasPsdError as exc:
        raise _fail(exc) from exc
    typer.echo(json.dumps(cfg.to_dict(), sort_keys=True, indent=2))


@config_app.command("validate")
def config_validate(path: Path = typer.Argument(..., help="Config file to check")):
    """Validate a config file (exits non-zero on failure)."""
    try:
        _load_config(path)
    except CanvasPsdError as exc:
        raise _fail(exc) from exc
    console.print(f"[green]Config OK[/] {path}")


@app.command()
def doctor():
    """Print the active settings and library versions."""
    from importlib.metadata import PackageNotFoundError, version

    from canvas_psd import __version__
    from canvas_psd.config import AnalysisConfig, settings

    console.print(f"[bold]canvas-psd[/] {__version__}")
    console.print(f"[bold]log level:[/] {settings.log_level}  [bold]workers:[/] {settings.workers}")
    console.print(f"[bold]config:[/] {settings.config or '(built-in defaults)'}")
    for package in ("numpy", "scipy", "pillow", "polars", "pydantic"):
        try:
            console.print(f"  {package} {version(package)}")
        except PackageNotFoundError:
            console.print(f"  [red]{package} missing[/]")
    try:
        cfg = _load_config(None)
    except CanvasPsdError as exc:
        console.print(f"[bold red]Config error:[/] {exc}")
        raise typer.Exit(code=exc.exit_code) from exc
    if problems := cfg.validate_consistency():
        for problem in problems:
            console.print(f"  [red]- {problem}[/]")
    elif cfg == AnalysisConfig():
        console.print("[green]Config OK[/] (defaults)")
    else:
        console.print("[green]Config OK[/]")
