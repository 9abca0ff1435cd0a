"""Reaction kinetics of the GTPase cycle and its homogeneous steady states."""

import logging
import math
from typing import Any, Dict, List, Union

import numpy as np
import numpy.typing as npt
from pydantic.v1 import BaseModel, Extra, root_validator, validator
from scipy import optimize

from polarity_lab.core.typedefs import (
    Equilibrium,
    EquilibriumSearch,
    Jacobian,
    SignConditionReport,
)

LOGGER = logging.getLogger(__name__)

#: Area of the unit sphere times the normalising constant of the mass relation
SPHERE_MASS_FACTOR = 3.0
#: Distance from the saturation line u + v = 1 treated as the kink
KINK_TOLERANCE = 1e-12
#: Equilibria closer than this in u are merged
MERGE_TOLERANCE = 1e-8
#: Absolute tolerance of the equilibrium bisection
BISECTION_XTOL = 1e-14

Scalar = Union[float, npt.NDArray[np.float64]]


class KineticParams(BaseModel):
    """The nondimensional constants of the model.

    Defaults are the reference parameter set in which the model polarizes to a
    single spot, with a finite cytosolic diffusion ratio D = 100.
    """

    class Config:
        allow_mutation = False
        frozen = True
        extra = Extra.forbid

    d: float = 1.0
    gamma: float = 400.0
    a1: float = 0.02
    a2: float = 20.0
    a3: float = 160.0
    a4: float = 1.0
    a5: float = 0.5
    a6: float = 0.36
    a_m6: float = 5.0
    D: float = 100.0
    V_init: float = 5.1

    @validator("a1", "a2", "a3", "a4", "a5", "a6", "a_m6", "gamma")
    def positive_and_finite(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0):
            raise ValueError("must be finite and strictly positive")
        return v

    @validator("d", "V_init")
    def nonnegative_and_finite(cls, v: float) -> float:
        if not (math.isfinite(v) and v >= 0):
            raise ValueError("must be finite and nonnegative")
        return v

    @validator("D")
    def positive_or_infinite(cls, v: float) -> float:
        if math.isnan(v) or v <= 0:
            raise ValueError("must be strictly positive or Infinity")
        return v

    @root_validator(skip_on_failure=True)
    def attachment_rate_increases(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if not values["a1"] < values["a3"]:
            raise ValueError("a1 must be smaller than a3")
        return values

    @property
    def reduced(self) -> bool:
        """Whether the cytosolic diffusion ratio is infinite."""
        return math.isinf(self.D)

    def replace(self, **changes: float) -> "KineticParams":
        """Returns a validated copy with some parameters changed.

        Args:
            changes: The parameters to change.

        Returns:
            KineticParams: The new parameter set.
        """
        return KineticParams(**{**self.dict(), **changes})


def f_react(u: Scalar, v: Scalar, p: KineticParams) -> Scalar:
    """The net activation rate f of the membrane GTPase.

    Args:
        u: Active membrane concentration.
        v: Inactive membrane concentration.
        p: The kinetic parameters.

    Returns:
        Scalar: (a1 + (a3 - a1) u / (a2 + u)) v - a4 u / (a5 + u).
    """
    return (p.a1 + (p.a3 - p.a1) * u / (p.a2 + u)) * v - p.a4 * u / (p.a5 + u)


def q_sorp(u: Scalar, v: Scalar, V: Scalar, p: KineticParams) -> Scalar:
    """The net attachment rate q from the cytosol to the membrane.

    Args:
        u: Active membrane concentration.
        v: Inactive membrane concentration.
        V: Cytosolic concentration at the membrane.
        p: The kinetic parameters.

    Returns:
        Scalar: a6 V max(1 - u - v, 0) - a_m6 v.
    """
    return p.a6 * V * np.maximum(1.0 - u - v, 0.0) - p.a_m6 * v


def jacobian(u: float, v: float, V: float, p: KineticParams) -> Jacobian:
    """The analytic partial derivatives of f_react and q_sorp.

    Above the saturation line u + v = 1 the attachment term is clamped and its
    derivatives vanish. On the line itself the unclamped branch is used and the
    result carries a kink flag.

    Args:
        u (float): Active membrane concentration.
        v (float): Inactive membrane concentration.
        V (float): Cytosolic concentration.
        p (KineticParams): The kinetic parameters.

    Returns:
        Jacobian: f_u, f_v, q_u, q_v and q_V.
    """
    f_u = (p.a3 - p.a1) * p.a2 / (p.a2 + u) ** 2 * v - p.a4 * p.a5 / (p.a5 + u) ** 2
    f_v = p.a1 + (p.a3 - p.a1) * u / (p.a2 + u)
    free = 1.0 - u - v
    kink = abs(free) < KINK_TOLERANCE
    if kink:
        LOGGER.warning(f"Jacobian evaluated on the saturation kink u + v = {u + v}")
    if free > 0 or kink:
        return Jacobian(
            f_u=f_u,
            f_v=f_v,
            q_u=-p.a6 * V,
            q_v=-p.a6 * V - p.a_m6,
            q_V=p.a6 * free,
            kink=kink,
        )
    return Jacobian(f_u=f_u, f_v=f_v, q_u=0.0, q_v=-p.a_m6, q_V=0.0)


def verify_sign_conditions(eq: Union[Equilibrium, Jacobian]) -> SignConditionReport:
    """Checks the natural sign conditions of the model at a state.

    Args:
        eq (Union[Equilibrium, Jacobian]): The state or its Jacobian.

    Returns:
        SignConditionReport: Each weak and strict condition.
    """
    jac = eq.jacobian if isinstance(eq, Equilibrium) else eq
    return SignConditionReport(
        f_v_nonneg=jac.f_v >= 0,
        q_v_nonpos=jac.q_v <= 0,
        q_v_le_q_u=jac.q_v <= jac.q_u,
        q_V_nonneg=jac.q_V >= 0,
        f_v_pos=jac.f_v > 0,
        q_v_neg=jac.q_v < 0,
        q_V_pos=jac.q_V > 0,
    )


def v_nullcline(u: Scalar, p: KineticParams) -> Scalar:
    """The inactive concentration v for which f(u, v) = 0."""
    return p.a4 * u / ((p.a5 + u) * (p.a1 + (p.a3 - p.a1) * u / (p.a2 + u)))


def mass_residual(u: Scalar, p: KineticParams) -> Scalar:
    """The attachment rate along the nullcline with the cytosol fixed by mass."""
    v = v_nullcline(u, p)
    return q_sorp(u, v, p.V_init - SPHERE_MASS_FACTOR * (u + v), p)


def equilibrium_at(u: float, p: KineticParams) -> Equilibrium:
    """Builds the homogeneous state on the nullcline at a given u.

    Args:
        u (float): Active membrane concentration.
        p (KineticParams): The kinetic parameters.

    Returns:
        Equilibrium: The state, its Jacobian and its residuals.
    """
    v = float(v_nullcline(u, p))
    V = p.V_init - SPHERE_MASS_FACTOR * (u + v)
    return Equilibrium(
        u_star=u,
        v_star=v,
        V_star=V,
        jacobian=jacobian(u, v, V, p),
        residual_f=float(f_react(u, v, p)),
        residual_q=float(q_sorp(u, v, V, p)),
    )


def equilibrium_search(
    p: KineticParams, u_max: float = 1.0, n_grid: int = 10_000
) -> EquilibriumSearch:
    """Finds every homogeneous steady state with u in [0, u_max].

    The mass residual is sampled on a uniform grid; every sign change is refined
    by bisection and grid points with an exact zero are kept as they are.

    Args:
        p (KineticParams): The kinetic parameters.
        u_max (float): The upper end of the searched interval.
        n_grid (int): The number of grid points.

    Returns:
        EquilibriumSearch: The states found and the search metadata.
    """
    grid = np.linspace(0.0, u_max, n_grid)
    g = mass_residual(grid, p)
    roots: List[float] = [float(u) for u in grid[g == 0.0]]
    for i in np.nonzero(g[:-1] * g[1:] < 0)[0]:
        root = optimize.bisect(
            lambda u: float(mass_residual(u, p)),
            grid[i],
            grid[i + 1],
            xtol=BISECTION_XTOL,
        )
        LOGGER.debug(f"Refined equilibrium u* = {root} in [{grid[i]}, {grid[i + 1]}]")
        roots.append(root)

    merged: List[float] = []
    for root in sorted(roots):
        if not merged or root - merged[-1] > MERGE_TOLERANCE:
            merged.append(root)

    equilibria = tuple(
        eq for eq in (equilibrium_at(u, p) for u in merged) if eq.V_star >= 0
    )
    bracket_overflow = bool(g[-1] > 0)
    if bracket_overflow:
        LOGGER.warning(
            f"Mass residual still positive at u_max = {u_max}, "
            "equilibria may lie beyond the searched range"
        )
    return EquilibriumSearch(equilibria, u_max, n_grid, bracket_overflow)


def find_equilibria(
    p: KineticParams, u_max: float = 1.0, n_grid: int = 10_000
) -> List[Equilibrium]:
    """Lists the homogeneous steady states on the unit sphere, sorted by u*.

    Args:
        p (KineticParams): The kinetic parameters.
        u_max (float): The upper end of the searched interval.
        n_grid (int): The number of grid points used for bracketing.

    Returns:
        List[Equilibrium]: The states; empty if none exist.
    """
    return list(equilibrium_search(p, u_max, n_grid).equilibria)


def stability_value_S(eq: Union[Equilibrium, Jacobian]) -> float:
    """S = (f_u q_v - f_v q_u) / 3 + q_V (f_v - f_u).

    The homogeneous state is stable against spatially constant perturbations if
    and only if S > 0.
    """
    jac = eq.jacobian if isinstance(eq, Equilibrium) else eq
    return jac.determinant / 3.0 + jac.q_V * (jac.f_v - jac.f_u)
