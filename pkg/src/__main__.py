import json
import sys
from functools import wraps
from typing import Any, Callable, Optional, ParamSpec, TypeVar

import click
import pydantic
import rich.progress
import rich.table

from src.console import configure_logging, console
from src.errors import CalibrationError, ConfigError
from src.io.config import load_config
from src.pipeline import Command, RunContext, StageResult, run_pipeline

P = ParamSpec("P")
T = TypeVar("T")

ERROR_EXIT_CODE = 2


def reports_errors(function: Callable[P, T]) -> Callable[P, T]:
    """Turn toolkit errors into one JSON record on stdout and exit code 2."""

    @wraps(function)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
        try:
            return function(*args, **kwargs)
        except CalibrationError as error:
            record = error.to_record()
        except pydantic.ValidationError as error:
            record = ConfigError(
                str(error.title),
                [f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in error.errors()],
            ).to_record()
        if "violations" not in record:
            record["violations"] = []
        click.echo(json.dumps(record, sort_keys=True))
        sys.exit(ERROR_EXIT_CODE)

    return wrapper


def _context(ctx: click.Context) -> RunContext:
    options = ctx.obj
    config = load_config(options["config"])
    overrides: dict[str, Any] = {}
    if options["seed"] is not None:
        overrides["seed"] = options["seed"]
    if options["workers"] is not None:
        overrides["workers"] = options["workers"]
    if overrides:
        config = config.model_copy(update=overrides)
    return RunContext(config, options["out"], options["reproducible"])


def _flatten(prefix: str, value: Any) -> list[tuple[str, str]]:
    if isinstance(value, dict):
        return [
            row
            for key, item in value.items()
            for row in _flatten(f"{prefix}.{key}" if prefix else str(key), item)
        ]
    if isinstance(value, float):
        return [(prefix, f"{value:.6g}")]
    if isinstance(value, (int, str, bool)) or value is None:
        return [(prefix, str(value))]
    return []


def _show(title: str, stage: StageResult) -> None:
    table = rich.table.Table(title=title)
    table.add_column("quantity", style="info")
    table.add_column("value")
    for key, value in _flatten("", stage.results):
        table.add_row(key, value)
    console.print(table)
    console.print(f"[success]wrote {len(stage.outputs)} file(s)[/success]")


def _run(ctx: click.Context, command: Command, **inputs: Any) -> StageResult:
    context = _context(ctx)
    with console.status(f"running {command}"):
        stage = run_pipeline(command, context, **inputs)
    _show(command, stage)
    return stage


@click.group()
@click.option("--config", "config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the configured seed")
@click.option(
    "--out", type=click.Path(file_okay=False), default="out", show_default=True
)
@click.option("--workers", type=click.IntRange(min=1), default=None)
@click.option("--reproducible", is_flag=True, help="Omit timestamps from reports")
@click.option("--verbose", "-v", count=True)
@click.pass_context
def cli(
    ctx: click.Context,
    config: Optional[str],
    seed: Optional[int],
    out: str,
    workers: Optional[int],
    reproducible: bool,
    verbose: int,
) -> None:
    configure_logging(verbose)
    ctx.obj = {
        "config": config,
        "seed": seed,
        "out": out,
        "workers": workers,
        "reproducible": reproducible,
    }


@cli.command()
@click.argument(
    "kind", type=click.Choice(["fringes", "probe-stacks", "tof", "beam", "rf"])
)
@click.pass_context
@reports_errors
def simulate(ctx: click.Context, kind: str) -> None:
    """Write a synthetic dataset with its ground truth."""
    _run(ctx, "simulate", kind=kind)


@cli.command("calibrate-nsat")
@click.option("--input", "-i", "input_dir", type=click.Path(exists=True))
@click.pass_context
@reports_errors
def calibrate_nsat(ctx: click.Context, input_dir: Optional[str]) -> None:
    """Joint N_sat fit over a fringe campaign."""
    _run(ctx, "calibrate-nsat", input_dir=input_dir)


@cli.command("map-intensity")
@click.option("--input", "-i", "input_dir", type=click.Path(exists=True))
@click.option("--fringes", "-f", "fringes_dir", type=click.Path(exists=True))
@click.pass_context
@reports_errors
def map_intensity(
    ctx: click.Context, input_dir: Optional[str], fringes_dir: Optional[str]
) -> None:
    """Pixel-by-pixel probe intensity at the atoms from time-of-flight shots."""
    _run(ctx, "map-intensity", input_dir=input_dir, fringes_dir=fringes_dir)


@cli.command("calibrate-sensor")
@click.option("--input", "-i", "input_dir", type=click.Path(exists=True))
@click.option("--compare-highpass", is_flag=True)
@click.pass_context
@reports_errors
def calibrate_sensor(
    ctx: click.Context, input_dir: Optional[str], compare_highpass: bool
) -> None:
    """Photon-transfer calibration of the conversion factor and read noise."""
    _run(
        ctx, "calibrate-sensor", input_dir=input_dir, compare_highpass=compare_highpass
    )


@cli.command()
@click.option(
    "--triplet",
    type=(float, float, float),
    default=None,
    help="N_ADU C N_ph measured directly",
)
@click.option("--input", "-i", "input_dir", type=click.Path(exists=True))
@click.pass_context
@reports_errors
def qe(
    ctx: click.Context,
    triplet: Optional[tuple[float, float, float]],
    input_dir: Optional[str],
) -> None:
    """Quantum efficiency and total system efficiency."""
    _run(ctx, "qe", triplet=triplet, input_dir=input_dir)


@cli.command()
@click.pass_context
@reports_errors
def snr(ctx: click.Context) -> None:
    """Absorption-imaging SNR against probe counts."""
    _run(ctx, "snr")


@cli.command("rf-phase")
@click.option("--input", "-i", "input_dir", type=click.Path(exists=True))
@click.option("--traces", "-n", type=click.IntRange(min=1), default=1)
@click.pass_context
@reports_errors
def rf_phase(ctx: click.Context, input_dir: Optional[str], traces: int) -> None:
    """Realized probe phase step from RF traces."""
    _run(ctx, "rf-phase", input_dir=input_dir, traces=traces)


@cli.command()
@click.pass_context
@reports_errors
def report(ctx: click.Context) -> None:
    """Run every stage on simulated data and write report.json with plots."""
    context = _context(ctx)
    with rich.progress.Progress(console=console, transient=True) as progress:
        stage = run_pipeline("report", context, progress=progress)
    _show("report", stage)


if __name__ == "__main__":
    cli()
