import logging
import sys
from typing import Any, Callable, Dict, Optional

import click
from click.core import Context

from polarity_lab import __version__
from polarity_lab.commands import execute
from polarity_lab.core.exceptions import PolarityLabError
from polarity_lab.core.typedefs import Model
from polarity_lab.utils.configuration.loading import parse_config, read_config


@click.group(invoke_without_command=True)
@click.version_option(version=__version__)
@click.option(
    "--log-level",
    default="WARNING",
    type=click.Choice(["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"]),
    help="The minimum level of severity for a log message to be printed to the console",
)
@click.pass_context
def main(ctx: Context, log_level: str):
    """The command line argument root, allowing for log level configuration.

    Args:
        ctx (Context): The click context.
        log_level (str): The minimum logging level to be displayed.
    """
    logging.basicConfig(level=log_level)

    if ctx.invoked_subcommand is None:
        click.echo(main.get_help(ctx))


def common_options(with_model: bool) -> Callable[[Callable], Callable]:
    """Adds the --config, --output and --seed options, and --model if wanted."""

    def decorate(command: Callable) -> Callable:
        if with_model:
            command = click.option(
                "--model",
                type=click.Choice([m.value for m in Model]),
                default=None,
                help="The coupled (full) or non-local (reduced) system",
            )(command)
        command = click.option(
            "--seed", type=int, default=None, help="Overrides the configured seed"
        )(command)
        command = click.option(
            "--output",
            type=click.Path(file_okay=False),
            default=None,
            help="The directory artifacts are written to",
        )(command)
        command = click.option(
            "--config",
            "config_path",
            type=click.Path(dir_okay=False),
            default=None,
            help="A JSON or YAML configuration document",
        )(command)
        return command

    return decorate


def run(
    name: str,
    config_path: Optional[str],
    output: Optional[str],
    seed: Optional[int],
    model: Optional[str] = None,
) -> None:
    """Loads the configuration, runs a command and reports errors on one line.

    Args:
        name (str): The command to run.
        config_path (Optional[str]): The configuration file; defaults if None.
        output (Optional[str]): Overrides the configured output directory.
        seed (Optional[int]): Overrides the configured seed.
        model (Optional[str]): Overrides the configured model.
    """
    overrides: Dict[str, Any] = {"output_dir": output, "seed": seed, "model": model}
    try:
        if config_path is None:
            cfg = parse_config("", overrides)
        else:
            cfg = read_config(config_path, overrides)
        digests = execute(name, cfg)
    except PolarityLabError as exc:
        click.echo(f"polarity-lab: {exc.one_line()}", err=True)
        sys.exit(exc.exit_code)
    for file_name, digest in digests.items():
        click.echo(f"{digest}  {cfg.output_dir / file_name}")


@main.command(help="list the homogeneous equilibria and their Jacobians")
@common_options(with_model=False)
def equilibrium(config_path: Optional[str], output: Optional[str], seed: Optional[int]):
    """Writes equilibria.csv."""
    run("equilibrium", config_path, output, seed)


@main.command(help="decide the linear stability of each spherical-harmonic degree")
@common_options(with_model=True)
def stability(
    config_path: Optional[str],
    output: Optional[str],
    seed: Optional[int],
    model: Optional[str],
):
    """Writes stability.csv."""
    run("stability", config_path, output, seed, model)


@main.command(help="sample the dispersion function of one degree")
@common_options(with_model=True)
def dispersion(
    config_path: Optional[str],
    output: Optional[str],
    seed: Optional[int],
    model: Optional[str],
):
    """Writes dispersion.csv."""
    run("dispersion", config_path, output, seed, model)


@main.command(name="growth-curve", help="growth rates over the sphere spectrum")
@common_options(with_model=True)
def growth_curve(
    config_path: Optional[str],
    output: Optional[str],
    seed: Optional[int],
    model: Optional[str],
):
    """Writes growth_curve.csv."""
    run("growth-curve", config_path, output, seed, model)


@main.command(help="map the stability verdict over a parameter sweep")
@common_options(with_model=True)
def scan(
    config_path: Optional[str],
    output: Optional[str],
    seed: Optional[int],
    model: Optional[str],
):
    """Writes scan.csv; set POLARITY_LAB_THREADS to cap the worker threads."""
    run("scan", config_path, output, seed, model)


@main.command(help="integrate the reaction-diffusion system in time")
@common_options(with_model=True)
def simulate(
    config_path: Optional[str],
    output: Optional[str],
    seed: Optional[int],
    model: Optional[str],
):
    """Writes snapshots.csv, diagnostics.csv and health.csv."""
    run("simulate", config_path, output, seed, model)


@main.command(help="convert between dimensional and nondimensional parameters")
@common_options(with_model=False)
def nondim(config_path: Optional[str], output: Optional[str], seed: Optional[int]):
    """Writes nondim.csv or dimensional.csv."""
    run("nondim", config_path, output, seed)
