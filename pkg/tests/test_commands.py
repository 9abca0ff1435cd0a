import csv
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import pytest
from mock import patch

from polarity_lab import __version__
from polarity_lab.commands import (
    STABILITY_HEADER,
    THREADS_VARIABLE,
    cmd_dispersion,
    cmd_equilibrium,
    cmd_growth_curve,
    cmd_nondim,
    cmd_scan,
    cmd_simulate,
    cmd_stability,
    execute,
    run_scan,
    scan_threads,
    select_equilibrium,
)
from polarity_lab.core.exceptions import (
    ConfigValidationError,
    DomainError,
    NumericalError,
)
from polarity_lab.core.kinetics import KineticParams
from polarity_lab.core.linstab_full import stability_report
from polarity_lab.core.linstab_reduced import reduced_stability
from polarity_lab.core.typedefs import EquilibriumSearch, Verdict
from polarity_lab.utils.configuration.loading import parse_config
from polarity_lab.utils.configuration.run_config import RunConfig
from polarity_lab.utils.output import SUMMARY_FILE


def config(
    document: Optional[Dict[str, Any]] = None, output_dir: Optional[Path] = None
) -> RunConfig:
    overrides = {"output_dir": None if output_dir is None else str(output_dir)}
    return parse_config(json.dumps(document or {}), overrides)


def read_rows(path: Path) -> List[Dict[str, str]]:
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


SHORT_SIM = {"N_theta": 32, "dt": 1e-4, "t_end": 0.01, "snapshot_stride": 10}


def test_select_equilibrium_prefers_strict_sign_conditions(base_equilibrium):
    assert select_equilibrium(KineticParams()) == base_equilibrium


def test_select_equilibrium_needs_a_state():
    empty = EquilibriumSearch((), 1.0, 10_000, bracket_overflow=True)
    with patch(
        "polarity_lab.commands.equilibrium_search", autospec=True, return_value=empty
    ):
        with pytest.raises(NumericalError, match="no homogeneous equilibrium"):
            select_equilibrium(KineticParams())


def test_equilibrium_command_lists_the_reference_state(base_equilibrium):
    outcome = cmd_equilibrium(config())
    table = outcome.tables["equilibria.csv"]
    assert len(table.rows) == 1
    assert table.rows[0][0] == base_equilibrium.u_star
    assert table.header[-1] == "kink"
    assert outcome.result == {
        "count": 1,
        "no_equilibrium": False,
        "bracket_overflow": False,
    }


def test_stability_of_the_coupled_reference_system():
    outcome = cmd_stability(config())
    table = outcome.tables["stability.csv"]
    assert tuple(table.header) == STABILITY_HEADER
    assert len(table.rows) == 10
    assert outcome.result["verdict"] == "Unstable"
    assert outcome.result["case"] == "Case2"
    assert 1 in outcome.result["unstable_modes"]


def test_stability_of_the_non_local_reference_system():
    outcome = cmd_stability(config({"model": "reduced", "l_max": 5}))
    assert outcome.result["unstable_modes"] == [1, 2]
    rows = outcome.tables["stability.csv"].rows
    assert [row[3] for row in rows] == [Verdict.UNSTABLE] * 2 + [Verdict.STABLE] * 3
    assert rows[2][2] is None


def test_coupled_verdict_aggregates_the_stability_report():
    with patch(
        "polarity_lab.commands.stability_report",
        autospec=True,
        side_effect=stability_report,
    ) as report:
        outcome = cmd_stability(config({"l_max": 2}))
    report.assert_called_once()
    assert report.call_args.kwargs == {"report_up_to": 2}
    expected = stability_report(*report.call_args.args)
    assert expected.l_cut > 2
    assert outcome.result["verdict"] == expected.verdict.value
    assert len(outcome.tables["stability.csv"].rows) == 2


def test_non_local_verdict_comes_from_reduced_stability():
    with patch(
        "polarity_lab.commands.reduced_stability",
        autospec=True,
        side_effect=reduced_stability,
    ) as decide:
        outcome = cmd_stability(config({"model": "reduced", "l_max": 5}))
    decide.assert_called_once()
    verdict, classification = reduced_stability(*decide.call_args.args)
    assert outcome.result["verdict"] == verdict.value
    assert outcome.result["case"] == classification.case.value


def test_slow_cytosol_is_stable_in_every_degree():
    outcome = cmd_stability(config({"params": {"D": 1.0}, "l_max": 4}))
    assert outcome.result["verdict"] == "Stable"
    assert outcome.result["unstable_modes"] == []


def test_dispersion_of_the_first_degree():
    rows = cmd_dispersion(config()).tables["dispersion.csv"].rows
    assert len(rows) == 201
    assert rows[0][0] == 0.0
    assert rows[0][1] < 0
    assert rows[-1][1] > 0


def test_homogeneous_dispersion_vanishes_at_zero():
    rows = cmd_dispersion(config({"dispersion": {"l": 0}})).tables["dispersion.csv"]
    assert rows.rows[0][1] == 0.0
    assert rows.rows[1][1] > 0


def test_non_local_dispersion_has_no_degree_zero():
    with pytest.raises(DomainError):
        cmd_dispersion(config({"model": "reduced", "dispersion": {"l": 0}}))


def test_growth_curve_adds_the_coupled_root():
    full = cmd_growth_curve(config({"l_max": 3})).tables["growth_curve.csv"]
    assert full.header[-1] == "omega_full"
    assert full.rows[0][4] is not None
    assert full.rows[2][2] is None
    reduced = cmd_growth_curve(config({"model": "reduced", "l_max": 3}))
    assert reduced.tables["growth_curve.csv"].header[-1] == "s"
    assert reduced.result["most_unstable_mu"] == 2.0


def test_scan_threads_reads_the_environment(monkeypatch):
    monkeypatch.setenv(THREADS_VARIABLE, "3")
    assert scan_threads() == 3
    monkeypatch.delenv(THREADS_VARIABLE)
    assert scan_threads() == (os.cpu_count() or 1)


@pytest.mark.parametrize("raw", ["0", "-2", "many"])
def test_scan_threads_rejects_bad_values(monkeypatch, raw: str):
    monkeypatch.setenv(THREADS_VARIABLE, raw)
    with pytest.raises(ConfigValidationError) as excinfo:
        scan_threads()
    assert excinfo.value.fields == [THREADS_VARIABLE]


@pytest.mark.asyncio
async def test_run_scan_keeps_scan_order():
    cfg = config(
        {
            "model": "reduced",
            "l_max": 2,
            "scan": {"param": "gamma", "lower": 40, "upper": 400, "count": 2},
        }
    )
    rows = await run_scan(cfg, threads=2)
    assert [row[0] for row in rows] == [40.0, 400.0]
    assert rows[0][-3] is Verdict.STABLE
    assert rows[1][-3] is Verdict.UNSTABLE


def test_scan_over_cytosolic_diffusion(monkeypatch):
    monkeypatch.setenv(THREADS_VARIABLE, "2")
    cfg = config(
        {
            "l_max": 2,
            "scan": {
                "param": "D",
                "lower": 1,
                "upper": 1000,
                "count": 4,
                "scale": "log",
            },
        }
    )
    outcome = cmd_scan(cfg)
    table = outcome.tables["scan.csv"]
    assert tuple(table.header) == (
        "D",
        "equilibrium",
        "S",
        "verdict_l1",
        "verdict_l2",
        "verdict",
        "case",
        "error",
    )
    assert table.rows[0][5] is Verdict.STABLE
    assert table.rows[-1][5] is Verdict.UNSTABLE
    assert outcome.result == {"points": 4, "failures": 0, "threads": 2}


def test_failed_scan_points_are_recorded(monkeypatch, caplog):
    monkeypatch.setenv(THREADS_VARIABLE, "1")
    cfg = config(
        {
            "l_max": 1,
            "scan": {"param": "a1", "lower": 100, "upper": 200, "count": 2},
        }
    )
    with caplog.at_level(logging.ERROR):
        outcome = cmd_scan(cfg)
    last = outcome.tables["scan.csv"].rows[-1]
    assert last[0] == 200.0
    assert "a1 must be smaller than a3" in last[-1]
    assert outcome.result["failures"] >= 1
    assert "Scan point a1 = 200.0 failed" in caplog.text


def test_scan_needs_a_scan_block():
    with pytest.raises(ConfigValidationError, match="scan block"):
        cmd_scan(config())


def test_simulate_writes_snapshots_and_diagnostics():
    outcome = cmd_simulate(config({"model": "reduced", "sim": SHORT_SIM}))
    snapshots = outcome.tables["snapshots.csv"]
    assert tuple(snapshots.header) == ("t", "theta", "u", "v")
    assert len(snapshots.rows) == 11 * 32
    diagnostics = outcome.tables["diagnostics.csv"]
    assert tuple(diagnostics.header)[-5:] == ("a0", "a1", "a2", "a3", "a4")
    assert len(diagnostics.rows) == 11
    assert tuple(outcome.tables["health.csv"].header) == (
        "t",
        "negative_cells",
        "V_trace_min",
        "V_trace_max",
    )
    assert outcome.result["steps"] == 100
    assert outcome.result["mass_drift"] < 1e-12


def test_simulate_the_coupled_system_reports_the_membrane_cytosol():
    sim = {"N_theta": 16, "N_r": 16, "dt": 1e-4, "t_end": 1e-3}
    outcome = cmd_simulate(config({"model": "full", "sim": sim}))
    assert outcome.tables["snapshots.csv"].header[-1] == "V_trace"


def test_nondim_maps_dimensional_constants(base_dimensional):
    document = {"dimensional": base_dimensional.dict(by_alias=True)}
    outcome = cmd_nondim(config(document))
    values = dict(outcome.tables["nondim.csv"].rows)
    assert values["gamma"] == pytest.approx(400.0)
    assert outcome.result == {"direction": "nondimensionalize"}


def test_nondim_maps_back_with_anchors(base_dimensional):
    anchors = {
        "du_m2_per_s": 1.0,
        "c_max_mol_per_m2": 0.5,
        "vol_B_m3": base_dimensional.vol_B,
        "area_Gamma_m2": base_dimensional.area_Gamma,
        "k1_m2_per_mol_s": 2.0,
    }
    outcome = cmd_nondim(config({"anchors": anchors}))
    values = dict(outcome.tables["dimensional.csv"].rows)
    assert values["R_m"] == pytest.approx(20.0)
    assert values["k2_m2_per_mol_s"] == pytest.approx(16000.0)


def test_nondim_needs_a_direction():
    with pytest.raises(ConfigValidationError):
        cmd_nondim(config())


def test_execute_writes_artifacts_and_summary(tmp_path: Path):
    digests = execute("stability", config({"l_max": 3}, tmp_path))
    assert set(digests) == {"stability.csv", SUMMARY_FILE}
    rows = read_rows(tmp_path / "stability.csv")
    assert [row["l"] for row in rows] == ["1", "2", "3"]
    assert rows[0]["verdict"] == "Unstable"
    summary = json.loads((tmp_path / SUMMARY_FILE).read_text())
    assert summary["command"] == "stability"
    assert summary["version"] == __version__
    assert summary["model"] == "full"
    assert summary["config"]["l_max"] == 3
    assert summary["digests"]["stability.csv"] == digests["stability.csv"]
    assert summary["result"]["verdict"] == "Unstable"


def test_execute_is_reproducible(tmp_path: Path):
    first = execute("equilibrium", config(output_dir=tmp_path / "a"))
    second = execute("equilibrium", config(output_dir=tmp_path / "b"))
    assert first["equilibria.csv"] == second["equilibria.csv"]


def test_execute_echoes_infinite_parameters_as_text(tmp_path: Path):
    cfg = config({"params": {"D": "Infinity"}, "l_max": 2}, tmp_path)
    execute("stability", cfg)
    summary = json.loads((tmp_path / SUMMARY_FILE).read_text())
    assert summary["config"]["params"]["D"] == "inf"
    assert summary["model"] == "reduced"


def test_execute_reports_invalid_simulation_settings(tmp_path: Path):
    cfg = config({"params": {"gamma": 1e7}}, tmp_path)
    with pytest.raises(ConfigValidationError, match="explicit stability bound"):
        execute("simulate", cfg)
