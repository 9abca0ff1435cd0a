import math
from typing import Callable

import pytest

from polarity_lab.core.kinetics import (
    KineticParams,
    find_equilibria,
    verify_sign_conditions,
)
from polarity_lab.core.nondim import DimensionalParams
from polarity_lab.core.typedefs import Equilibrium, Jacobian


@pytest.fixture
def base_params() -> KineticParams:
    return KineticParams()


@pytest.fixture
def base_equilibrium(base_params: KineticParams) -> Equilibrium:
    return next(
        eq for eq in find_equilibria(base_params) if verify_sign_conditions(eq).strict
    )


@pytest.fixture
def oscillatory_params() -> KineticParams:
    return KineticParams(gamma=2000.0, a1=0.001, a_m6=10.3757, V_init=10.1)


@pytest.fixture
def base_dimensional() -> DimensionalParams:
    return DimensionalParams(
        k1=2.0,
        k2=16000.0,
        k3=0.5,
        k4=0.25,
        K5=0.1,
        g0=0.01,
        b6=2.16,
        b_m6=5.0,
        D_dim=100.0,
        du=1.0,
        dv=1.0,
        c_max=0.5,
        R=20.0,
        vol_B=4.0 / 3.0 * math.pi * 20.0**3,
        area_Gamma=4.0 * math.pi * 20.0**2,
        V_init=0.1275,
    )


@pytest.fixture
def synthetic_equilibrium() -> Callable[..., Equilibrium]:
    """Builds an equilibrium record around a hand-picked Jacobian."""

    def build(
        f_u: float, f_v: float, q_u: float, q_v: float, q_V: float
    ) -> Equilibrium:
        return Equilibrium(
            u_star=0.2,
            v_star=0.2,
            V_star=1.0,
            jacobian=Jacobian(f_u=f_u, f_v=f_v, q_u=q_u, q_v=q_v, q_V=q_V),
            residual_f=0.0,
            residual_q=0.0,
        )

    return build
