import asyncio
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic.v1 import ValidationError

from polarity_lab import __version__
from polarity_lab.core.exceptions import (
    ConfigValidationError,
    DomainError,
    NumericalError,
    PolarityLabError,
)
from polarity_lab.core.kinetics import (
    KineticParams,
    equilibrium_search,
    stability_value_S,
    verify_sign_conditions,
)
from polarity_lab.core.linstab_full import (
    dispersion_G,
    dispersion_G0_tilde,
    mode_instability,
    stability_report,
)
from polarity_lab.core.linstab_reduced import (
    SpectrumSpec,
    growth_rate_curve,
    most_unstable_mode,
    quadratic_dispersion_roots,
    reduced_dispersion,
    reduced_stability,
)
from polarity_lab.core.nondim import nondimensionalize, redimensionalize
from polarity_lab.core.typedefs import Case, Equilibrium, ModeIndex, Model, Verdict
from polarity_lab.simulation.diagnostics import relative_variation, spot_count
from polarity_lab.simulation.runner import run_simulation
from polarity_lab.utils.configuration.loading import validation_violations
from polarity_lab.utils.configuration.run_config import RunConfig
from polarity_lab.utils.output import Table, columns, emit_outputs

LOGGER = logging.getLogger(__name__)

#: Environment variable capping the number of scan worker threads
THREADS_VARIABLE = "POLARITY_LAB_THREADS"

STABILITY_HEADER = ("l", "G0", "root_omega", "verdict", "case")


@dataclass
class CommandResult:
    """The artifacts of one command and the digest recorded in summary.json."""

    tables: Dict[str, Table]
    result: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ModeRow:
    """The stability of one degree, in the layout of stability.csv."""

    l: int
    G0: float
    root_omega: Optional[float]
    verdict: Verdict
    case: Case

    def row(self) -> Tuple[Any, ...]:  # noqa: D102
        return (self.l, self.G0, self.root_omega, self.verdict, self.case)


def select_equilibrium(p: KineticParams) -> Equilibrium:
    """The equilibrium the stability commands examine.

    This is the first state, by increasing u*, at which the strict sign
    conditions hold; failing that, the first state found.

    Raises:
        NumericalError: If there is no homogeneous equilibrium.
    """
    equilibria = equilibrium_search(p).equilibria
    if not equilibria:
        raise NumericalError("no homogeneous equilibrium with u in [0, 1]")
    for eq in equilibria:
        if verify_sign_conditions(eq).strict:
            return eq
    return equilibria[0]


def mode_rows(
    eq: Equilibrium, p: KineticParams, model: Model, l_max: int
) -> Tuple[List[ModeRow], Verdict, Case]:
    """Per-degree stability for l = 1 ... l_max and the aggregate verdict.

    The coupled system reports G_l(0) and the root of G_l; the non-local system
    reports the constant term and the positive root of its quadratic. The
    verdict and case come from stability_report and reduced_stability.
    """
    if model is Model.FULL:
        report = stability_report(eq, p, report_up_to=l_max)
        rows = [
            ModeRow(m.l, m.G_at_zero, m.root_omega, m.verdict, m.case)
            for m in report.modes[:l_max]
        ]
        return rows, report.verdict, report.modes[0].case

    spec = SpectrumSpec.sphere(l_max)
    verdict, classification = reduced_stability(eq, p, spec)
    rows = []
    for l, mu in enumerate(spec.eigenvalues, start=1):
        roots = quadratic_dispersion_roots(mu, eq, p)
        if verdict is Verdict.NOT_APPLICABLE:
            row_verdict = Verdict.NOT_APPLICABLE
        elif roots.positive_root is not None:
            row_verdict = Verdict.UNSTABLE
        else:
            row_verdict = Verdict.STABLE
        rows.append(
            ModeRow(
                l, roots.constant, roots.positive_root, row_verdict, classification.case
            )
        )
    return rows, verdict, classification.case


def cmd_equilibrium(cfg: RunConfig) -> CommandResult:
    """Lists every homogeneous equilibrium with its Jacobian."""
    search = equilibrium_search(cfg.params)
    table = Table(
        (
            "u_star",
            "v_star",
            "V_star",
            "f_u",
            "f_v",
            "q_u",
            "q_v",
            "q_V",
            "S",
            "residual_f",
            "residual_q",
            "kink",
        )
    )
    for eq in search.equilibria:
        table.rows.append(
            (
                eq.u_star,
                eq.v_star,
                eq.V_star,
                eq.f_u,
                eq.f_v,
                eq.q_u,
                eq.q_v,
                eq.q_V,
                stability_value_S(eq),
                eq.residual_f,
                eq.residual_q,
                eq.jacobian.kink,
            )
        )
    return CommandResult(
        {"equilibria.csv": table},
        {
            "count": len(search.equilibria),
            "no_equilibrium": search.no_equilibrium,
            "bracket_overflow": search.bracket_overflow,
        },
    )


def cmd_stability(cfg: RunConfig) -> CommandResult:
    """Decides the stability of each degree l = 1 ... l_max."""
    eq = select_equilibrium(cfg.params)
    rows, verdict, case = mode_rows(eq, cfg.params, cfg.model, cfg.l_max)
    table = Table(STABILITY_HEADER, [row.row() for row in rows])
    return CommandResult(
        {"stability.csv": table},
        {
            "u_star": eq.u_star,
            "S": stability_value_S(eq),
            "verdict": verdict.value,
            "case": case.value,
            "unstable_modes": [r.l for r in rows if r.verdict is Verdict.UNSTABLE],
        },
    )


def cmd_dispersion(cfg: RunConfig) -> CommandResult:
    """Samples the dispersion function of one degree on a growth-rate grid."""
    eq = select_equilibrium(cfg.params)
    l = cfg.dispersion.l
    G: Callable[[float], float]
    if cfg.model is Model.REDUCED:
        if l == 0:
            raise DomainError("the non-local system has no degree-0 dispersion")
        mu = l * (l + 1.0)
        G = lambda omega: reduced_dispersion(mu, omega, eq, cfg.params)  # noqa: E731
    elif l == 0:
        G = lambda omega: (  # noqa: E731
            omega * dispersion_G0_tilde(omega, eq, cfg.params) if omega > 0 else 0.0
        )
    else:
        G = lambda omega: dispersion_G(  # noqa: E731
            ModeIndex(l), omega, eq, cfg.params
        )
    table = Table(("omega", "G"), [(w, G(w)) for w in cfg.dispersion.omegas()])
    return CommandResult({"dispersion.csv": table}, {"l": l, "u_star": eq.u_star})


def cmd_growth_curve(cfg: RunConfig) -> CommandResult:
    """The non-local growth rate over the sphere spectrum.

    With the coupled model the root of G_l is added for comparison.
    """
    eq = select_equilibrium(cfg.params)
    spec = SpectrumSpec.sphere(cfg.l_max)
    curve = growth_rate_curve(eq, cfg.params, spec.eigenvalues)
    header: Sequence[str] = ("l", "mu", "omega_plus", "s")
    if cfg.model is Model.FULL:
        header = (*header, "omega_full")
    table = Table(header)
    for l, point in enumerate(curve, start=1):
        row: Tuple[Any, ...] = (l, point.mu, point.omega_plus, point.s)
        if cfg.model is Model.FULL:
            row = (*row, mode_instability(l, eq, cfg.params).root_omega)
        table.rows.append(row)
    best = most_unstable_mode(eq, cfg.params, spec)
    return CommandResult(
        {"growth_curve.csv": table},
        {"most_unstable_mu": None if best is None else best.mu},
    )


def scan_point(cfg: RunConfig, value: float) -> Tuple[Any, ...]:
    """One row of the stability map; errors go into the last column."""
    assert cfg.scan is not None
    l_max = cfg.l_max
    LOGGER.debug(f"Scan point {cfg.scan.param} = {value} started")
    try:
        p = cfg.params.replace(**{cfg.scan.param: value})
        model = Model.REDUCED if p.reduced else cfg.model
        search = equilibrium_search(p)
        if search.no_equilibrium:
            return (value, False, None, *([None] * l_max), None, None, "")
        eq = select_equilibrium(p)
        rows, verdict, case = mode_rows(eq, p, model, l_max)
        verdicts = [row.verdict for row in rows]
        return (value, True, stability_value_S(eq), *verdicts, verdict, case, "")
    except (PolarityLabError, ValidationError) as exc:
        LOGGER.exception(f"Scan point {cfg.scan.param} = {value} failed")
        message = " ".join(str(exc).split())
        return (value, None, None, *([None] * l_max), None, None, message)
    finally:
        LOGGER.debug(f"Scan point {cfg.scan.param} = {value} finished")


def scan_threads() -> int:
    """The worker count: POLARITY_LAB_THREADS if set, else the CPU count."""
    raw = os.environ.get(THREADS_VARIABLE)
    if raw is None:
        return os.cpu_count() or 1
    try:
        threads = int(raw)
    except ValueError:
        threads = 0
    if threads < 1:
        raise ConfigValidationError(
            [(THREADS_VARIABLE, f"must be a positive integer, got {raw!r}")]
        )
    return threads


async def run_scan(cfg: RunConfig, threads: int) -> List[Tuple[Any, ...]]:
    """Evaluates every scan point on a thread pool, returning rows in scan order.

    Args:
        cfg (RunConfig): A configuration with a scan block.
        threads (int): The number of worker threads.

    Returns:
        List[Tuple[Any, ...]]: One row per point.
    """
    assert cfg.scan is not None
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        tasks = [
            loop.run_in_executor(pool, scan_point, cfg, value)
            for value in cfg.scan.points()
        ]
        return list(await asyncio.gather(*tasks))


def cmd_scan(cfg: RunConfig) -> CommandResult:
    """Maps the stability verdict over a one-parameter sweep."""
    if cfg.scan is None:
        raise ConfigValidationError([("scan", "the scan command needs a scan block")])
    threads = scan_threads()
    LOGGER.info(f"Scanning {cfg.scan.param} over {cfg.scan.count} points")
    rows = asyncio.run(run_scan(cfg, threads))
    header = (
        cfg.scan.param,
        "equilibrium",
        "S",
        *(f"verdict_l{l}" for l in range(1, cfg.l_max + 1)),
        "verdict",
        "case",
        "error",
    )
    failures = sum(1 for row in rows if row[-1])
    return CommandResult(
        {"scan.csv": Table(header, rows)},
        {"points": len(rows), "failures": failures, "threads": threads},
    )


def cmd_simulate(cfg: RunConfig) -> CommandResult:
    """Runs a simulation and writes its snapshots and diagnostics."""
    sim = cfg.simulation()
    record = run_simulation(sim)
    full = sim.model is Model.FULL
    header = ("t", "theta", "u", "v")
    snapshots = Table((*header, "V_trace") if full else header)
    for snap in record.snapshots:
        for j, theta in enumerate(record.theta):
            row: Tuple[Any, ...] = (
                snap.t,
                float(theta),
                float(snap.u[j]),
                float(snap.v[j]),
            )
            if full:
                row = (*row, float(snap.V_trace[j]))
            snapshots.rows.append(row)

    amplitudes = record.legendre_amplitudes
    diagnostics = Table(
        ("t", "mass", "u_min", "u_max", "v_min", "v_max", *columns("a", sim.l_diag + 1))
    )
    health = Table(("t", "negative_cells", "V_trace_min", "V_trace_max"))
    for k, t in enumerate(record.times):
        diagnostics.rows.append(
            (
                t,
                record.mass[k],
                record.u_min[k],
                record.u_max[k],
                record.v_min[k],
                record.v_max[k],
                *(float(a) for a in amplitudes[k]),
            )
        )
        health.rows.append(
            (t, record.negative_cells[k], record.V_trace_min[k], record.V_trace_max[k])
        )

    final_u = record.final.u
    level = 0.5 * (float(final_u.min()) + float(final_u.max()))
    return CommandResult(
        {
            "snapshots.csv": snapshots,
            "diagnostics.csv": diagnostics,
            "health.csv": health,
        },
        {
            "steps": record.steps,
            "dt": record.dt,
            "mass_drift": record.mass_drift,
            "final_spot_count": spot_count(final_u, level),
            "final_relative_variation": relative_variation(final_u),
            "simulation_wall_time": record.wall_time,
        },
    )


def cmd_nondim(cfg: RunConfig) -> CommandResult:
    """Converts between dimensional constants and the nondimensional set.

    Dimensional constants are mapped forward; otherwise anchors map the
    nondimensional parameters back to SI units.
    """
    table = Table(("name", "value"))
    if cfg.dimensional is not None:
        params = nondimensionalize(cfg.dimensional)
        table.rows.extend(params.dict().items())
        return CommandResult({"nondim.csv": table}, {"direction": "nondimensionalize"})
    if cfg.anchors is None:
        raise ConfigValidationError(
            [("dimensional", "the nondim command needs dimensional or anchors")]
        )
    dimensional = redimensionalize(cfg.params, cfg.anchors)
    table.rows.extend(dimensional.dict(by_alias=True).items())
    return CommandResult({"dimensional.csv": table}, {"direction": "redimensionalize"})


COMMANDS: Dict[str, Callable[[RunConfig], CommandResult]] = {
    "equilibrium": cmd_equilibrium,
    "stability": cmd_stability,
    "dispersion": cmd_dispersion,
    "growth-curve": cmd_growth_curve,
    "scan": cmd_scan,
    "simulate": cmd_simulate,
    "nondim": cmd_nondim,
}


def execute(name: str, cfg: RunConfig) -> Dict[str, str]:
    """Runs a command and emits its artifacts into the configured directory.

    Args:
        name (str): The command name, a key of COMMANDS.
        cfg (RunConfig): The validated configuration.

    Returns:
        Dict[str, str]: The digest of every file written.
    """
    started = time.perf_counter()
    try:
        outcome = COMMANDS[name](cfg)
    except ValidationError as exc:
        raise validation_violations(exc) from exc
    summary = {
        "command": name,
        "version": __version__,
        "seed": cfg.seed,
        "model": cfg.model.value,
        "wall_time": time.perf_counter() - started,
        "config": _echo(cfg),
        "result": outcome.result,
    }
    return emit_outputs(outcome.tables, cfg.output_dir, summary)


def _echo(cfg: RunConfig) -> Dict[str, Any]:
    document = cfg.dict(exclude_none=True)
    document["output_dir"] = str(cfg.output_dir)
    return _finite_or_text(document)


def _finite_or_text(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _finite_or_text(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_text(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value
