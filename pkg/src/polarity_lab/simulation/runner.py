import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Set

import numpy as np
from pydantic.v1 import BaseModel, Extra, root_validator, validator
from typing_extensions import TypedDict

from polarity_lab.core.exceptions import NonFiniteState, NumericalError
from polarity_lab.core.kinetics import KineticParams, find_equilibria
from polarity_lab.core.specfun import legendre_p
from polarity_lab.core.typedefs import Model, SimTime
from polarity_lab.simulation.grid import MIN_CELLS, BulkGrid, Field, surface_grid
from polarity_lab.simulation.steppers import FullStepper, ReducedStepper, State, Stepper
from polarity_lab.utils.rng import seeded_uniform

LOGGER = logging.getLogger(__name__)

#: Explicit Euler is stable for decay rates below 2 / dt
STABILITY_BOUND = 2.0
#: Fraction of a step within which a snapshot time counts as already passed
SNAPSHOT_SLACK = 1e-6


class InitialCondition(str, Enum):
    """How the membrane fields are initialised."""

    #: u and v i.i.d. uniform on [0, ic_amplitude) per cell
    RANDOM = "random"
    #: u and v constant at ic_amplitude / 2
    DETERMINISTIC = "deterministic"
    #: The first nonzero equilibrium plus ic_amplitude * P_l(cos theta) in u
    PERTURBED_EQUILIBRIUM = "perturbed_equilibrium"


def stiffest_rate(params: KineticParams, model: Model, n_r: int) -> float:
    """An upper estimate of the fastest decay rate of the explicit terms."""
    rate = params.gamma * (
        params.a4 / params.a5 + params.a_m6 + params.a6 * params.V_init
    )
    if model is Model.FULL:
        # The membrane flux drains the outer bulk cells, of depth 1 / N_r.
        rate += params.gamma * params.a6 * 1.5 * n_r
    return rate


class SimConfig(BaseModel):
    """The settings of one simulation run."""

    class Config:
        allow_mutation = False
        extra = Extra.forbid

    model: Model = Model.REDUCED
    N_theta: int = 128
    N_r: int = 32
    dt: float = 1e-4
    t_end: float = 5.0
    seed: int = 0
    ic_mode: InitialCondition = InitialCondition.RANDOM
    ic_amplitude: float = 2e-4
    ic_degree: int = 1
    snapshot_stride: int = 100
    field_snapshots: int = 11
    l_diag: int = 4
    params: KineticParams = KineticParams()

    @validator("N_theta", "N_r")
    def enough_cells(cls, v: int) -> int:
        if v < MIN_CELLS:
            raise ValueError(f"must be at least {MIN_CELLS}")
        return v

    @validator("dt", "t_end")
    def positive(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0):
            raise ValueError("must be finite and strictly positive")
        return v

    @validator("snapshot_stride")
    def stride_at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @validator("field_snapshots")
    def at_least_two_snapshots(cls, v: int) -> int:
        if v < 2:
            raise ValueError("must be at least 2")
        return v

    @validator("ic_degree", "l_diag")
    def nonnegative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("must be nonnegative")
        return v

    @root_validator(skip_on_failure=True)
    def stable_time_step(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        params, model = values["params"], values["model"]
        if model is Model.FULL and params.reduced:
            raise ValueError("the coupled model needs a finite cytosolic diffusion D")
        rate = stiffest_rate(params, model, values["N_r"])
        if values["dt"] * rate >= STABILITY_BOUND:
            raise ValueError(
                f"dt = {values['dt']} exceeds the explicit stability bound "
                f"{STABILITY_BOUND / rate:.3g} for the stiffest rate {rate:.4g}"
            )
        return values


@dataclass(frozen=True)
class Snapshot:
    """The membrane fields at one time, with the cytosol at the membrane."""

    t: SimTime
    u: Field
    v: Field
    V_trace: Field


@dataclass
class SimRecord:
    """Time series of diagnostics and field snapshots of one run.

    Args:
        config: The settings of the run.
        theta: The polar angles of the membrane cells.
        baseline: Legendre amplitudes of the homogeneous reference state.
    """

    config: SimConfig
    theta: Field
    baseline: Field
    times: List[float] = field(default_factory=list)
    mass: List[float] = field(default_factory=list)
    u_min: List[float] = field(default_factory=list)
    u_max: List[float] = field(default_factory=list)
    v_min: List[float] = field(default_factory=list)
    v_max: List[float] = field(default_factory=list)
    V_trace_min: List[float] = field(default_factory=list)
    V_trace_max: List[float] = field(default_factory=list)
    negative_cells: List[int] = field(default_factory=list)
    amplitudes: List[Field] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    steps: int = 0
    dt: float = 0.0
    wall_time: float = 0.0

    @property
    def legendre_amplitudes(self) -> Field:
        """The amplitudes as a (time, l) matrix."""
        return np.vstack(self.amplitudes)

    @property
    def mass_drift(self) -> float:
        """The largest relative deviation of the mass from its initial value."""
        mass = np.asarray(self.mass)
        return float(np.max(np.abs(mass - mass[0])) / abs(mass[0]))

    @property
    def final(self) -> Snapshot:
        """The last snapshot."""
        return self.snapshots[-1]


class InitialMembrane(TypedDict):
    """Membrane fields at t = 0 and the homogeneous reference value of u."""

    u: Field
    v: Field
    reference: Field


def initial_membrane(cfg: SimConfig) -> InitialMembrane:
    """The membrane fields at t = 0 and the reference state of the amplitudes."""
    grid = surface_grid(cfg.N_theta)
    n = cfg.N_theta
    if cfg.ic_mode is InitialCondition.RANDOM:
        draws = np.array(seeded_uniform(cfg.seed, 2 * n, cfg.ic_amplitude))
        u, v = draws[:n], draws[n:]
        reference = float(grid.weights @ u) / grid.area
    elif cfg.ic_mode is InitialCondition.DETERMINISTIC:
        u = np.full(n, cfg.ic_amplitude / 2.0)
        v = np.full(n, cfg.ic_amplitude / 2.0)
        reference = cfg.ic_amplitude / 2.0
    else:
        nonzero = [eq for eq in find_equilibria(cfg.params) if eq.u_star > 0]
        if not nonzero:
            raise NumericalError("no nonzero homogeneous equilibrium to perturb")
        eq = nonzero[0]
        profile = legendre_p(cfg.ic_degree, grid.cos_theta)
        u = eq.u_star + cfg.ic_amplitude * profile
        v = np.full(n, eq.v_star)
        reference = eq.u_star
    return InitialMembrane(u=u, v=v, reference=np.full(n, reference))


def build_stepper(cfg: SimConfig, dt: float) -> Stepper:
    """The stepper for the configured model."""
    surface = surface_grid(cfg.N_theta)
    if cfg.model is Model.FULL:
        return FullStepper(BulkGrid(cfg.N_r, surface), cfg.params, dt)
    return ReducedStepper(surface, cfg.params, dt)


def _snapshot_steps(
    cfg: SimConfig, step: int, t: float, dt: float, n_steps: int
) -> Set[int]:
    """The steps after step nearest to the snapshot times still ahead of t."""
    count = cfg.field_snapshots
    ahead = (k * cfg.t_end / (count - 1) for k in range(count))
    return {
        min(n_steps, max(step + 1, step + round((target - t) / dt)))
        for target in ahead
        if target > t + SNAPSHOT_SLACK * dt
    }


def _record(
    record: SimRecord,
    stepper: Stepper,
    state: State,
    t: float,
    projector: Field,
    keep_fields: bool,
) -> None:
    trace = stepper.membrane_cytosol(state)
    record.times.append(t)
    record.mass.append(stepper.mass(state))
    record.u_min.append(float(state.u.min()))
    record.u_max.append(float(state.u.max()))
    record.v_min.append(float(state.v.min()))
    record.v_max.append(float(state.v.max()))
    record.V_trace_min.append(float(trace.min()))
    record.V_trace_max.append(float(trace.max()))
    record.negative_cells.append(int(np.count_nonzero((state.u < 0) | (state.v < 0))))
    record.amplitudes.append(projector @ state.u)
    if keep_fields:
        record.snapshots.append(
            Snapshot(SimTime(t), state.u.copy(), state.v.copy(), trace.copy())
        )
    LOGGER.debug(
        f"t = {t:.6g}: mass {record.mass[-1]:.17g}, "
        f"u in [{record.u_min[-1]:.6g}, {record.u_max[-1]:.6g}]"
    )


def run_simulation(cfg: SimConfig) -> SimRecord:
    """Integrates the configured model from its initial data to t_end.

    Diagnostics are recorded every snapshot_stride steps and at the end; full
    fields are kept at field_snapshots evenly spaced steps. A non-finite state
    halves dt and restarts from the last finite state once; a second failure
    aborts.

    Args:
        cfg (SimConfig): The run settings.

    Returns:
        SimRecord: The diagnostics and snapshots.

    Raises:
        NonFiniteState: If the fields blow up after the retry.
    """
    started = time.perf_counter()
    grid = surface_grid(cfg.N_theta)
    projector = grid.legendre_projector(cfg.l_diag)
    membrane = initial_membrane(cfg)
    dt = cfg.dt
    stepper = build_stepper(cfg, dt)
    state = stepper.initial_state(membrane["u"], membrane["v"])
    record = SimRecord(
        config=cfg, theta=grid.theta, baseline=projector @ membrane["reference"]
    )
    LOGGER.info(
        f"Starting {cfg.model.value} simulation: N_theta={cfg.N_theta}, dt={dt}, "
        f"t_end={cfg.t_end}, initial cytosol {float(np.mean(state.V)):.17g}"
    )

    n_steps = max(1, math.ceil(cfg.t_end / dt - 1e-9))
    keep = _snapshot_steps(cfg, 0, 0.0, dt, n_steps)
    _record(record, stepper, state, 0.0, projector, keep_fields=True)
    step, t, retried = 0, 0.0, False
    while step < n_steps:
        candidate = stepper.advance(state)
        if not candidate.finite():
            if retried:
                LOGGER.error(
                    f"Non-finite fields at t = {t}: u in [{state.u.min()}, "
                    f"{state.u.max()}], v in [{state.v.min()}, {state.v.max()}]"
                )
                raise NonFiniteState(f"fields became non-finite at t = {t}")
            LOGGER.warning(f"Non-finite fields at t = {t}, halving dt to {dt / 2}")
            retried = True
            dt /= 2.0
            stepper = build_stepper(cfg, dt)
            n_steps = step + math.ceil((cfg.t_end - t) / dt - 1e-9)
            keep = {s for s in keep if s <= step} | _snapshot_steps(
                cfg, step, t, dt, n_steps
            )
            continue
        state, step = candidate, step + 1
        t = cfg.t_end if step == n_steps else t + dt
        if step % cfg.snapshot_stride == 0 or step == n_steps or step in keep:
            _record(record, stepper, state, t, projector, keep_fields=step in keep)

    record.steps, record.dt = step, dt
    record.wall_time = time.perf_counter() - started
    LOGGER.info(
        f"Finished after {step} steps in {record.wall_time:.2f} s, "
        f"relative mass drift {record.mass_drift:.3g}"
    )
    return record


def mean_cytosol(record: SimRecord) -> Optional[float]:
    """The area-weighted mean cytosol at the membrane at the end of a run."""
    if not record.snapshots:
        return None
    grid = surface_grid(len(record.theta))
    return float(grid.weights @ record.final.V_trace) / grid.area
