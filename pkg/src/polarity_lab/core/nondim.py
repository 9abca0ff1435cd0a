"""Conversion between the dimensional model and its nondimensional parameters.

Lengths are measured against a reference length of one metre, so the scale
parameter gamma is the squared membrane radius in square metres.
"""

import logging
import math
from typing import Dict, List, Optional, Tuple

from pydantic.v1 import BaseModel, Extra, Field

from polarity_lab.core.exceptions import UnitViolation
from polarity_lab.core.kinetics import KineticParams

LOGGER = logging.getLogger(__name__)

#: The reference length in metres
REFERENCE_LENGTH = 1.0
#: Relative tolerance when a supplied radius is compared with sqrt(gamma)
RADIUS_TOLERANCE = 1e-9


class DimensionalParams(BaseModel):
    """The dimensional constants of the model in SI units.

    Fields are read and written under unit-annotated names such as
    ``k1_m2_per_mol_s``; the bare names are accepted too.
    """

    class Config:
        allow_mutation = False
        allow_population_by_field_name = True
        extra = Extra.forbid

    k1: float = Field(alias="k1_m2_per_mol_s")
    k2: float = Field(alias="k2_m2_per_mol_s")
    k3: float = Field(alias="k3_mol_per_m2_s")
    k4: float = Field(alias="k4_mol_per_m2")
    K5: float = Field(alias="K5_m2_per_mol")
    g0: float = Field(alias="g0_mol_per_m2")
    b6: float = Field(alias="b6_m2_per_mol_s")
    b_m6: float = Field(alias="b_m6_per_s")
    D_dim: float = Field(alias="D_m2_per_s")
    du: float = Field(alias="du_m2_per_s")
    dv: float = Field(alias="dv_m2_per_s")
    c_max: float = Field(alias="c_max_mol_per_m2")
    R: float = Field(alias="R_m")
    vol_B: float = Field(alias="vol_B_m3")
    area_Gamma: float = Field(alias="area_Gamma_m2")
    V_init: float = Field(alias="V_init_mol_per_m3")


class NondimAnchors(BaseModel):
    """The scales fixed by hand when nondimensional parameters are redimensionalized.

    The radius is implied by gamma; if given it must agree with it.
    """

    class Config:
        allow_mutation = False
        allow_population_by_field_name = True
        extra = Extra.forbid

    du: float = Field(alias="du_m2_per_s")
    c_max: float = Field(alias="c_max_mol_per_m2")
    vol_B: float = Field(alias="vol_B_m3")
    area_Gamma: float = Field(alias="area_Gamma_m2")
    R: Optional[float] = Field(None, alias="R_m")
    k1: float = Field(1.0, alias="k1_m2_per_mol_s")


def _require_positive(values: Dict[str, Optional[float]], allow_zero=()) -> None:
    bad: List[Tuple[str, Optional[float]]] = []
    for name, value in values.items():
        if value is None:
            continue
        if math.isnan(value) or value < 0 or (value == 0 and name not in allow_zero):
            bad.append((name, value))
    if bad:
        raise UnitViolation(
            "non-positive dimensional quantities: "
            + ", ".join(f"{name}={value}" for name, value in bad)
        )


def nondimensionalize(dp: DimensionalParams) -> KineticParams:
    """Maps dimensional constants onto the nondimensional parameter set.

    Args:
        dp (DimensionalParams): The dimensional constants.

    Returns:
        KineticParams: The nondimensional parameters.

    Raises:
        UnitViolation: If any constant is non-positive.
    """
    _require_positive(dp.dict(), allow_zero=("V_init",))
    ell2 = REFERENCE_LENGTH**2
    a1 = ell2 * dp.k1 * dp.g0 / dp.du
    params = KineticParams(
        a1=a1,
        a2=1.0 / (dp.K5 * dp.c_max),
        a3=dp.k2 / dp.k1 * a1,
        a4=ell2 * dp.k3 / (dp.du * dp.c_max),
        a5=dp.k4 / dp.c_max,
        a6=ell2 * dp.b6 * dp.c_max * dp.vol_B / (dp.du * dp.area_Gamma * dp.R),
        a_m6=ell2 * dp.b_m6 / dp.du,
        d=dp.dv / dp.du,
        D=dp.D_dim / dp.du,
        gamma=(dp.R / REFERENCE_LENGTH) ** 2,
        V_init=dp.V_init * dp.R / dp.c_max,
    )
    LOGGER.debug(f"Nondimensionalized {dp} to {params}")
    return params


def redimensionalize(p: KineticParams, anchors: NondimAnchors) -> DimensionalParams:
    """Recovers dimensional constants from nondimensional ones and chosen scales.

    Args:
        p (KineticParams): The nondimensional parameters.
        anchors (NondimAnchors): The lateral diffusivity, saturation concentration,
            bulk volume, membrane area and rate k1 to anchor the inverse map.

    Returns:
        DimensionalParams: Constants that nondimensionalize back to p.

    Raises:
        UnitViolation: If an anchor is non-positive, the radius disagrees with
            gamma, or a parameter maps to a non-positive constant.
    """
    _require_positive(anchors.dict())
    R = REFERENCE_LENGTH * math.sqrt(p.gamma)
    if anchors.R is not None and not math.isclose(
        anchors.R, R, rel_tol=RADIUS_TOLERANCE
    ):
        raise UnitViolation(f"radius {anchors.R} m disagrees with gamma = {p.gamma}")
    ell2 = REFERENCE_LENGTH**2
    du, c_max = anchors.du, anchors.c_max
    dp = DimensionalParams(
        k1=anchors.k1,
        k2=anchors.k1 * p.a3 / p.a1,
        k3=p.a4 * du * c_max / ell2,
        k4=p.a5 * c_max,
        K5=1.0 / (p.a2 * c_max),
        g0=p.a1 * du / (ell2 * anchors.k1),
        b6=p.a6 * du * anchors.area_Gamma * R / (ell2 * c_max * anchors.vol_B),
        b_m6=p.a_m6 * du / ell2,
        D_dim=p.D * du,
        du=du,
        dv=p.d * du,
        c_max=c_max,
        R=R,
        vol_B=anchors.vol_B,
        area_Gamma=anchors.area_Gamma,
        V_init=p.V_init * c_max / R,
    )
    _require_positive(dp.dict(), allow_zero=("V_init",))
    return dp
