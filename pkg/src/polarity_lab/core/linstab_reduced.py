"""Linear stability of the non-local membrane system obtained as D tends to infinity.

The cytosol is then spatially constant and fixed by mass conservation, so only the
Laplace-Beltrami spectrum of the membrane enters and arbitrary cell shapes are
described by a list of eigenvalues.
"""

import cmath
import logging
import math
from typing import Iterable, List, Optional, Tuple

from pydantic.v1 import BaseModel, Extra, validator

from polarity_lab.core.exceptions import DomainError, SignConditionViolation
from polarity_lab.core.kinetics import (
    SPHERE_MASS_FACTOR,
    KineticParams,
    verify_sign_conditions,
)
from polarity_lab.core.linstab_full import classify_over_spectrum, mode_instability
from polarity_lab.core.typedefs import (
    CaseClassification,
    ConsistencyPoint,
    Eigenvalue,
    Equilibrium,
    GrowthRatePoint,
    OdeStability,
    QuadraticRoots,
    Verdict,
)

LOGGER = logging.getLogger(__name__)

#: Relative tolerance under which the determinant condition counts as zero
DEGENERATE_TOLERANCE = 1e-12


class SpectrumSpec(BaseModel):
    """The nonzero Laplace-Beltrami spectrum of a membrane and its mass factor.

    Args:
        eigenvalues: Strictly increasing positive eigenvalues.
        c_times_area: The membrane area divided by the bulk volume, 3 for the
            unit sphere.
    """

    class Config:
        allow_mutation = False
        extra = Extra.forbid

    eigenvalues: Tuple[float, ...]
    c_times_area: float = SPHERE_MASS_FACTOR

    @validator("eigenvalues")
    def positive_increasing(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v:
            raise ValueError("at least one eigenvalue is required")
        if v[0] <= 0 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("eigenvalues must be positive and strictly increasing")
        return v

    @validator("c_times_area")
    def positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be strictly positive")
        return v

    @classmethod
    def sphere(cls, l_max: int = 200) -> "SpectrumSpec":
        """The unit sphere: mu = l(l+1) for l = 1 ... l_max, mass factor 3.

        >>> SpectrumSpec.sphere(3).eigenvalues
        (2.0, 6.0, 12.0)
        """
        return cls(
            eigenvalues=tuple(l * (l + 1.0) for l in range(1, l_max + 1)),
            c_times_area=SPHERE_MASS_FACTOR,
        )


def ode_stability(eq: Equilibrium, spec: SpectrumSpec) -> OdeStability:
    """Stability of the non-local reaction system against constant perturbations.

    Args:
        eq (Equilibrium): The homogeneous state.
        spec (SpectrumSpec): The membrane spectrum, for its mass factor.

    Returns:
        OdeStability: Stable iff the trace is negative and the determinant
        positive; Degenerate if the determinant vanishes.

    Raises:
        SignConditionViolation: If the strict sign conditions fail.
    """
    if not verify_sign_conditions(eq).strict:
        raise SignConditionViolation(
            f"strict sign conditions fail at u*={eq.u_star}, v*={eq.v_star}"
        )
    slope = -spec.c_times_area
    trace = eq.f_u - eq.f_v + eq.q_v + eq.q_V * slope
    det = eq.f_u * (eq.q_v + eq.q_V * slope) - eq.f_v * (eq.q_u + eq.q_V * slope)
    scale = max(
        abs(eq.f_u * eq.q_v), abs(eq.f_v * eq.q_u), abs(eq.q_V * slope * eq.f_v)
    )
    if abs(det) <= DEGENERATE_TOLERANCE * scale:
        verdict = Verdict.DEGENERATE
    elif det > 0 and trace < 0:
        verdict = Verdict.STABLE
    else:
        verdict = Verdict.UNSTABLE
    return OdeStability(
        verdict=verdict,
        trace=trace,
        determinant=det,
        f_u_lt_f_v=eq.f_u < eq.f_v,
        determinant_implies_trace=not det > 0 or trace < 0,
    )


def _quadratic_coefficients(
    mu: float, eq: Equilibrium, p: KineticParams
) -> Tuple[float, float]:
    if mu <= 0:
        raise DomainError(f"eigenvalue {mu} must be positive")
    B = (p.d + 1.0) * mu + p.gamma * (eq.f_v - eq.f_u - eq.q_v)
    C = (
        p.d * mu**2
        + p.gamma * mu * (-p.d * eq.f_u + eq.f_v - eq.q_v)
        + p.gamma**2 * eq.jacobian.determinant
    )
    return B, C


def reduced_dispersion(
    mu: float, omega: float, eq: Equilibrium, p: KineticParams
) -> float:
    """The dispersion quadratic omega^2 + B omega + C of the eigenvalue mu."""
    B, C = _quadratic_coefficients(mu, eq, p)
    return omega**2 + B * omega + C


def quadratic_dispersion_roots(
    mu: float, eq: Equilibrium, p: KineticParams
) -> QuadraticRoots:
    """The growth rates of the eigenvalue mu in the non-local system.

    The rates solve omega^2 + B omega + C = 0 with
    B = (d+1) mu + gamma (-f_u + f_v - q_v) and
    C = d mu^2 + gamma mu (-d f_u + f_v - q_v) + gamma^2 (f_u q_v - f_v q_u).

    Args:
        mu (float): A positive Laplace-Beltrami eigenvalue.
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters.

    Returns:
        QuadraticRoots: Both roots, the positive one if any, and C.
    """
    B, C = _quadratic_coefficients(mu, eq, p)
    disc = B * B - 4.0 * C
    if disc < 0:
        sqrt_disc = cmath.sqrt(disc)
        return QuadraticRoots(((-B - sqrt_disc) / 2, (-B + sqrt_disc) / 2), None, C)
    # Avoids cancellation in the root of smaller magnitude.
    q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
    r1 = q
    r2 = C / q if q != 0 else 0.0
    largest = max(r1, r2)
    positive = largest if largest > 0 else None
    return QuadraticRoots((complex(min(r1, r2)), complex(largest)), positive, C)


def classify_case_reduced(
    eq: Equilibrium, p: KineticParams, spec: SpectrumSpec
) -> CaseClassification:
    """Classifies the instability of the non-local system over a spectrum.

    The classification is exact: the system is unstable if and only if the case
    is not Case.NONE.

    Args:
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters.
        spec (SpectrumSpec): The membrane spectrum.

    Returns:
        CaseClassification: The case and the admissible eigenvalues.
    """
    mus = list(spec.eigenvalues)
    return classify_over_spectrum(eq, p, mus, mus)


def reduced_stability(
    eq: Equilibrium, p: KineticParams, spec: SpectrumSpec
) -> Tuple[Verdict, CaseClassification]:
    """The overall verdict of the non-local system and its classification."""
    ode = ode_stability(eq, spec)
    classification = classify_case_reduced(eq, p, spec)
    if ode.verdict is not Verdict.STABLE:
        return Verdict.NOT_APPLICABLE, classification
    if classification.admissible:
        return Verdict.UNSTABLE, classification
    return Verdict.STABLE, classification


def growth_rate_curve(
    eq: Equilibrium, p: KineticParams, mu_grid: Iterable[float]
) -> List[GrowthRatePoint]:
    """The positive growth rate over a set of eigenvalues.

    For d = 1 the sum omega_+ + mu is the same for every unstable eigenvalue, so
    the growth rate falls as mu grows and the smallest eigenvalue dominates.

    Args:
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters.
        mu_grid (Iterable[float]): Positive eigenvalues.

    Returns:
        List[GrowthRatePoint]: One point per eigenvalue.
    """
    points = []
    for mu in mu_grid:
        omega = quadratic_dispersion_roots(mu, eq, p).positive_root
        s = omega + mu if omega is not None and p.d == 1 else None
        points.append(GrowthRatePoint(mu=Eigenvalue(mu), omega_plus=omega, s=s))
    return points


def most_unstable_mode(
    eq: Equilibrium, p: KineticParams, spec: SpectrumSpec
) -> Optional[GrowthRatePoint]:
    """The eigenvalue with the largest positive growth rate, if any grows."""
    curve = growth_rate_curve(eq, p, spec.eigenvalues)
    growing = [pt for pt in curve if pt.omega_plus is not None]
    if not growing:
        return None
    return max(growing, key=lambda pt: pt.omega_plus or 0.0)


def full_vs_reduced_consistency(
    eq: Equilibrium, p: KineticParams, l: int, D_list: Iterable[float]
) -> List[ConsistencyPoint]:
    """Compares full-system growth rates at finite D with the non-local limit.

    Args:
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters; D is overridden per point.
        l (int): The spherical-harmonic degree.
        D_list (Iterable[float]): The finite cytosolic diffusion ratios.

    Returns:
        List[ConsistencyPoint]: The full and reduced roots with their relative gap;
        the full root is None where the mode is stable at that D.
    """
    reduced = quadratic_dispersion_roots(l * (l + 1.0), eq, p).positive_root
    if reduced is None:
        raise DomainError(f"degree {l} does not grow in the non-local system")
    points: List[ConsistencyPoint] = []
    for D in D_list:
        full = mode_instability(l, eq, p.replace(D=D)).root_omega
        gap = abs(full - reduced) / reduced if full is not None else None
        LOGGER.debug(f"D = {D}: full root {full}, reduced root {reduced}")
        points.append(ConsistencyPoint(D, full, reduced, gap))
    return points

