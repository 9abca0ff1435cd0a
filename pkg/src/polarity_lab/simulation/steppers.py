"""Implicit-explicit time steppers for the membrane and bulk-membrane systems.

Lateral and bulk diffusion are taken implicitly; reactions, the non-local
cytosol and the membrane flux are evaluated at the old time level.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as sparse_linalg

from polarity_lab.core.exceptions import LinearSolveFailure, SolverFailure
from polarity_lab.core.kinetics import (
    SPHERE_MASS_FACTOR,
    KineticParams,
    f_react,
    q_sorp,
)
from polarity_lab.simulation.grid import BulkGrid, Field, SurfaceGrid, surface_grid

LOGGER = logging.getLogger(__name__)

#: Relative residual required of the bulk solve
BULK_RTOL = 1e-10
#: Drop tolerance of the incomplete LU preconditioner
ILU_DROP_TOL = 1e-6


@dataclass(frozen=True)
class State:
    """The fields of a simulation at one instant.

    Args:
        u: Active membrane concentration per surface cell.
        v: Inactive membrane concentration per surface cell.
        V: Cytosolic concentration; a single value for the non-local system and
            an (N_r, N_theta) array for the coupled system.
    """

    u: Field
    v: Field
    V: Field

    def finite(self) -> bool:
        """Whether every value is finite."""
        return bool(
            np.all(np.isfinite(self.u))
            and np.all(np.isfinite(self.v))
            and np.all(np.isfinite(self.V))
        )


class SurfaceDiffusion:
    """Solves (I - dt coeff Laplace-Beltrami) x = b on the membrane grid.

    Args:
        grid (SurfaceGrid): The membrane grid.
        coeff (float): The nonnegative diffusion coefficient.
        dt (float): The time step.
    """

    def __init__(self, grid: SurfaceGrid, coeff: float, dt: float) -> None:
        self.identity = coeff == 0
        lower, diag, upper = grid.laplacian_bands(coeff)
        self.bands = np.zeros((3, grid.n_theta))
        self.bands[0, 1:] = -dt * upper
        self.bands[1] = 1.0 - dt * diag
        self.bands[2, :-1] = -dt * lower

    def solve(self, rhs: Field) -> Field:
        """Returns the solution for one right-hand side.

        Raises:
            SolverFailure: If the tridiagonal system is singular.
        """
        if self.identity:
            return rhs.copy()
        try:
            return linalg.solve_banded((1, 1), self.bands, rhs)
        except (linalg.LinAlgError, ValueError) as exc:
            raise SolverFailure(f"tridiagonal diffusion solve failed: {exc}") from exc


class Stepper(ABC):
    """One-step integrators of the cell fields sharing the membrane update.

    Args:
        surface (SurfaceGrid): The membrane grid.
        params (KineticParams): The kinetic parameters.
        dt (float): The time step.
    """

    def __init__(self, surface: SurfaceGrid, params: KineticParams, dt: float) -> None:
        self.surface = surface
        self.params = params
        self.dt = dt
        self._u_solver = SurfaceDiffusion(surface, 1.0, dt)
        self._v_solver = SurfaceDiffusion(surface, params.d, dt)

    def cytosol(self, u: Field, v: Field) -> float:
        """The cytosolic concentration V[u + v] left over by the membrane mass."""
        mean = float(self.surface.weights @ (u + v)) / self.surface.area
        return self.params.V_init - SPHERE_MASS_FACTOR * mean

    def surface_step(self, u: Field, v: Field, V: Field) -> Tuple[Field, Field]:
        """Advances u and v with the cytosol at the membrane held at V."""
        p, dt = self.params, self.dt
        f = f_react(u, v, p)
        q = q_sorp(u, v, V, p)
        u_new = self._u_solver.solve(u + dt * p.gamma * f)
        v_new = self._v_solver.solve(v + dt * p.gamma * (q - f))
        return u_new, v_new

    @abstractmethod
    def advance(self, state: State) -> State:
        """Advances the state by one time step."""

    @abstractmethod
    def mass(self, state: State) -> float:
        """The discrete total amount of GTPase in the cell."""

    @abstractmethod
    def initial_state(self, u: Field, v: Field) -> State:
        """Completes membrane fields with the cytosol given by the mass budget."""

    @abstractmethod
    def membrane_cytosol(self, state: State) -> Field:
        """The cytosolic concentration seen by each membrane cell."""


class ReducedStepper(Stepper):
    """Semi-implicit Euler for the non-local membrane system.

    The cytosol is V = V_init - 3 mean(u + v) with the area-weighted mean, so
    constant states that solve the kinetics are exact fixed points.

    Args:
        surface (SurfaceGrid): The membrane grid.
        params (KineticParams): The kinetic parameters.
        dt (float): The time step.
    """

    def advance(self, state: State) -> State:  # noqa: D102
        u, v = self.surface_step(state.u, state.v, state.V)
        return State(u, v, np.array([self.cytosol(u, v)]))

    def mass(self, state: State) -> float:  # noqa: D102
        bulk_volume = self.surface.area / SPHERE_MASS_FACTOR
        membrane = float(self.surface.weights @ (state.u + state.v))
        return bulk_volume * self.cytosol(state.u, state.v) + membrane

    def initial_state(self, u: Field, v: Field) -> State:  # noqa: D102
        return State(u, v, np.array([self.cytosol(u, v)]))

    def membrane_cytosol(self, state: State) -> Field:  # noqa: D102
        return np.full(self.surface.n_theta, state.V[0])


class FullStepper(Stepper):
    """Semi-implicit Euler for the coupled bulk-membrane system.

    The membrane flux gamma q(u, v, V_trace) leaves the outermost bulk cells and
    enters v with the same weights. After the iterative bulk solve a constant is
    added to V so that the discrete bulk mass balance holds exactly.

    Args:
        bulk (BulkGrid): The ball grid; its angular grid is the membrane grid.
        params (KineticParams): The kinetic parameters with finite D.
        dt (float): The time step.
    """

    def __init__(self, bulk: BulkGrid, params: KineticParams, dt: float) -> None:
        super().__init__(bulk.surface, params, dt)
        self.bulk = bulk
        self._volumes = bulk.volumes.ravel()
        self._system = (
            sparse.diags(self._volumes) + dt * bulk.stiffness(params.D)
        ).tocsc()
        ilu = sparse_linalg.spilu(
            self._system,
            drop_tol=ILU_DROP_TOL,
            fill_factor=20,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
        )
        self._preconditioner = sparse_linalg.LinearOperator(
            self._system.shape, matvec=ilu.solve
        )
        self._maxiter = int(10 * math.sqrt(bulk.size))

    def bulk_step(self, V: Field, q: Field) -> Field:
        """Advances the bulk with the membrane flux gamma q leaving through r = 1.

        Raises:
            LinearSolveFailure: If conjugate gradients miss the tolerance.
        """
        source = np.zeros(self.bulk.shape)
        source[-1] = -self.params.gamma * q * self.surface.weights
        rhs = self._volumes * V.ravel() + self.dt * source.ravel()
        solution, info = sparse_linalg.cg(
            self._system,
            rhs,
            x0=V.ravel(),
            rtol=BULK_RTOL,
            atol=0.0,
            maxiter=self._maxiter,
            M=self._preconditioner,
        )
        if info != 0:
            raise LinearSolveFailure(
                f"bulk conjugate gradients stopped with code {info}, "
                f"iteration cap {self._maxiter}"
            )
        # A constant lies in the kernel of the stiffness matrix.
        defect = float(rhs.sum()) - float(self._volumes @ solution)
        solution += defect / float(self._volumes.sum())
        return solution.reshape(self.bulk.shape)

    def advance(self, state: State) -> State:  # noqa: D102
        trace = self.bulk.trace(state.V)
        q = q_sorp(state.u, state.v, trace, self.params)
        u, v = self.surface_step(state.u, state.v, trace)
        return State(u, v, self.bulk_step(state.V, q))

    def mass(self, state: State) -> float:  # noqa: D102
        membrane = float(self.surface.weights @ (state.u + state.v))
        return self.bulk.integral(state.V) + membrane

    def initial_state(self, u: Field, v: Field) -> State:  # noqa: D102
        return State(u, v, np.full(self.bulk.shape, self.cytosol(u, v)))

    def membrane_cytosol(self, state: State) -> Field:  # noqa: D102
        return self.bulk.trace(state.V)


def step_reduced(
    u: Field, v: Field, p: KineticParams, dt: float
) -> Tuple[Field, Field]:
    """One semi-implicit Euler step of the non-local membrane system.

    Args:
        u (Field): Active membrane concentration per cell.
        v (Field): Inactive membrane concentration per cell.
        p (KineticParams): The kinetic parameters.
        dt (float): The time step.

    Returns:
        Tuple[Field, Field]: The updated u and v.
    """
    stepper = ReducedStepper(surface_grid(len(u)), p, dt)
    state = stepper.advance(stepper.initial_state(u, v))
    return state.u, state.v


def step_full(
    u: Field, v: Field, V: Field, p: KineticParams, dt: float
) -> Tuple[Field, Field, Field]:
    """One semi-implicit Euler step of the coupled bulk-membrane system.

    Args:
        u (Field): Active membrane concentration per cell.
        v (Field): Inactive membrane concentration per cell.
        V (Field): Cytosolic concentration, shape (N_r, N_theta).
        p (KineticParams): The kinetic parameters with finite D.
        dt (float): The time step.

    Returns:
        Tuple[Field, Field, Field]: The updated u, v and V.
    """
    stepper = FullStepper(BulkGrid(V.shape[0], surface_grid(len(u))), p, dt)
    state = stepper.advance(State(u, v, V))
    return state.u, state.v, state.V
