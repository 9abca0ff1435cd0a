import subprocess
from pathlib import Path
from typing import Iterable

import pytest
from click.testing import CliRunner, Result
from mock import Mock, patch

from polarity_lab import __version__
from polarity_lab.cli import main
from polarity_lab.core.exceptions import BracketFailure, OutputError
from polarity_lab.core.typedefs import Model


def test_cli_version():
    cmd = ["polarity-lab", "--version"]
    assert (
        subprocess.check_output(cmd).decode().strip()
        == f"polarity-lab, version {__version__}"
    )


@pytest.fixture
def patch_logging() -> Iterable[Mock]:
    with patch("polarity_lab.cli.logging", autospec=True) as mock:
        yield mock


@pytest.fixture
def patch_execute() -> Iterable[Mock]:
    with patch("polarity_lab.cli.execute", autospec=True) as mock:
        mock.return_value = {"stability.csv": "ab12", "summary.json": "cd34"}
        yield mock


def test_cli_set_logging_level(patch_logging: Mock):
    runner: CliRunner = CliRunner()
    result: Result = runner.invoke(main, args=["--log-level", "INFO"])
    assert result.exit_code == 0
    patch_logging.basicConfig.assert_called_with(level="INFO")


def test_cli_without_a_command_prints_help():
    result = CliRunner().invoke(main, args=[])
    assert result.exit_code == 0
    assert "growth-curve" in result.output


def test_stability_command_with_defaults(patch_execute: Mock):
    result = CliRunner().invoke(main, args=["stability"])
    assert result.exit_code == 0
    name, cfg = patch_execute.call_args.args
    assert name == "stability"
    assert cfg.model is Model.FULL
    assert "ab12  polarity-lab-output/stability.csv" in result.output


def test_command_line_overrides(patch_execute: Mock, tmp_path: Path):
    config = tmp_path / "run.yaml"
    config.write_text("seed: 1\nparams:\n  D: 50\n")
    result = CliRunner().invoke(
        main,
        args=[
            "simulate",
            "--config",
            str(config),
            "--output",
            str(tmp_path / "out"),
            "--seed",
            "8",
            "--model",
            "reduced",
        ],
    )
    assert result.exit_code == 0
    _, cfg = patch_execute.call_args.args
    assert cfg.seed == 8
    assert cfg.model is Model.REDUCED
    assert cfg.params.D == 50.0
    assert cfg.output_dir == tmp_path / "out"


@pytest.mark.parametrize(
    "command",
    ["equilibrium", "stability", "dispersion", "growth-curve", "scan", "simulate"],
)
def test_every_command_reaches_execute(patch_execute: Mock, command: str):
    result = CliRunner().invoke(main, args=[command])
    assert result.exit_code == 0
    assert patch_execute.call_args.args[0] == command


def test_nondim_has_no_model_option(patch_execute: Mock):
    result = CliRunner().invoke(main, args=["nondim", "--model", "full"])
    assert result.exit_code == 2
    patch_execute.assert_not_called()


def test_numerical_errors_exit_with_code_3(patch_execute: Mock):
    patch_execute.side_effect = BracketFailure("no sign change\nbelow the cap")
    result = CliRunner().invoke(main, args=["stability"])
    assert result.exit_code == 3
    assert (
        "polarity-lab: error[bracket]: no sign change below the cap\n" in result.output
    )


def test_output_errors_exit_with_code_4(patch_execute: Mock):
    patch_execute.side_effect = OutputError("out/x.csv", "read-only")
    result = CliRunner().invoke(main, args=["equilibrium"])
    assert result.exit_code == 4


def test_invalid_config_exits_with_code_2(tmp_path: Path):
    config = tmp_path / "run.json"
    config.write_text('{"l_max": 0}')
    result = CliRunner().invoke(
        main, args=["stability", "--config", str(config)]
    )
    assert result.exit_code == 2
    assert "polarity-lab: error[validation]: l_max" in result.output


def test_malformed_config_exits_with_code_2(tmp_path: Path):
    config = tmp_path / "run.yaml"
    config.write_text("seed: 1\nparams: gamma: 4\n")
    result = CliRunner().invoke(
        main, args=["equilibrium", "--config", str(config)]
    )
    assert result.exit_code == 2
    assert "error[parse]" in result.output
    assert "line 2" in result.output


def test_equilibrium_end_to_end(tmp_path: Path):
    result = CliRunner().invoke(main, args=["equilibrium", "--output", str(tmp_path)])
    assert result.exit_code == 0
    assert (tmp_path / "equilibria.csv").exists()
    assert (tmp_path / "summary.json").exists()


def test_coupled_model_without_finite_diffusion_exits_with_code_2(tmp_path: Path):
    config = tmp_path / "run.json"
    config.write_text('{"params": {"D": "Infinity"}}')
    result = CliRunner().invoke(
        main, args=["stability", "--config", str(config), "--model", "full"]
    )
    assert result.exit_code == 2
    assert "finite cytosolic diffusion" in result.output
