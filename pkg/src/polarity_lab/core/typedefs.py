from dataclasses import dataclass, field
from enum import Enum
from typing import NewType, Optional, Tuple

#: A spherical-harmonic degree; the dispersion relation does not depend on the order
ModeIndex = NewType("ModeIndex", int)
#: A Laplace-Beltrami eigenvalue of the membrane, mu = l(l+1) on the unit sphere
Eigenvalue = NewType("Eigenvalue", float)
#: Dimensionless simulation time
SimTime = NewType("SimTime", float)


class Verdict(str, Enum):
    """The outcome of a linear stability test."""

    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"
    DEGENERATE = "Degenerate"
    NOT_APPLICABLE = "NotApplicable"


class Case(str, Enum):
    """The mechanism behind a diffusive instability."""

    CASE1 = "Case1"
    CASE2 = "Case2"
    NONE = "None"


class Model(str, Enum):
    """The system being simulated or analysed."""

    REDUCED = "reduced"
    FULL = "full"


@dataclass(frozen=True)
class BesselRatioResult:
    """The ratio r i_l'(r) / i_l(r) of a modified spherical Bessel function.

    Args:
        value: The ratio.
        converged: Whether the continued fraction met its tolerance.
        iterations: The number of continued fraction terms used.
    """

    value: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class Jacobian:
    """The partial derivatives of the reaction terms f and q.

    Args:
        f_u: Partial derivative of f in u.
        f_v: Partial derivative of f in v.
        q_u: Partial derivative of q in u.
        q_v: Partial derivative of q in v.
        q_V: Partial derivative of q in the cytosolic concentration V.
        kink: True if evaluated on the positive-part kink u + v = 1.
    """

    f_u: float
    f_v: float
    q_u: float
    q_v: float
    q_V: float
    kink: bool = False

    @property
    def determinant(self) -> float:
        """The surface determinant f_u q_v - f_v q_u."""
        return self.f_u * self.q_v - self.f_v * self.q_u


@dataclass(frozen=True)
class Equilibrium:
    """A spatially homogeneous steady state together with its Jacobian.

    Args:
        u_star: Active membrane concentration.
        v_star: Inactive membrane concentration.
        V_star: Cytosolic concentration.
        jacobian: The reaction Jacobian at the state.
        residual_f: The value of f at the state.
        residual_q: The value of q at the state.
    """

    u_star: float
    v_star: float
    V_star: float
    jacobian: Jacobian
    residual_f: float = 0.0
    residual_q: float = 0.0

    @property
    def f_u(self) -> float:  # noqa: D102
        return self.jacobian.f_u

    @property
    def f_v(self) -> float:  # noqa: D102
        return self.jacobian.f_v

    @property
    def q_u(self) -> float:  # noqa: D102
        return self.jacobian.q_u

    @property
    def q_v(self) -> float:  # noqa: D102
        return self.jacobian.q_v

    @property
    def q_V(self) -> float:  # noqa: D102
        return self.jacobian.q_V


@dataclass(frozen=True)
class SignConditionReport:
    """Which sign conditions on the Jacobian hold.

    The weak conditions are f_v >= 0, q_v <= 0, q_v <= q_u and q_V >= 0; the strict
    ones are f_v > 0, q_v < 0 and q_V > 0.
    """

    f_v_nonneg: bool
    q_v_nonpos: bool
    q_v_le_q_u: bool
    q_V_nonneg: bool
    f_v_pos: bool
    q_v_neg: bool
    q_V_pos: bool

    @property
    def weak(self) -> bool:
        """Whether every weak condition holds."""
        return (
            self.f_v_nonneg and self.q_v_nonpos and self.q_v_le_q_u and self.q_V_nonneg
        )

    @property
    def strict(self) -> bool:
        """Whether the weak conditions and every strict condition hold."""
        return self.weak and self.f_v_pos and self.q_v_neg and self.q_V_pos


@dataclass(frozen=True)
class EquilibriumSearch:
    """The record of a scan for homogeneous equilibria.

    Args:
        equilibria: The states found, sorted by u_star.
        u_max: The upper end of the searched u interval.
        n_grid: The number of grid points used for bracketing.
        bracket_overflow: True if the mass residual is still positive at u_max, so
            further roots may lie beyond the searched interval.
    """

    equilibria: Tuple[Equilibrium, ...]
    u_max: float
    n_grid: int
    bracket_overflow: bool

    @property
    def no_equilibrium(self) -> bool:
        """Whether the search found nothing."""
        return not self.equilibria


@dataclass(frozen=True)
class HomogeneousStability:
    """Stability of the homogeneous state under spatially constant perturbations."""

    verdict: Verdict
    S: float
    f_v_gt_f_u: bool


@dataclass(frozen=True)
class CaseClassification:
    """The diffusive instability mechanism available at an equilibrium.

    Args:
        case: The mechanism, or Case.NONE.
        lambda_minus: Lower root of the instability band in mu / gamma.
        lambda_plus: Upper root of the instability band in mu / gamma.
        Q: The discriminant of the band quadratic.
        admissible: Mode degrees (full model) or eigenvalues (reduced model)
            inside the band.
    """

    case: Case
    lambda_minus: Optional[float]
    lambda_plus: Optional[float]
    Q: Optional[float]
    admissible: Tuple[float, ...] = ()


@dataclass(frozen=True)
class DegenerateBranch:
    """The branch on which the bulk amplitude of a mode vanishes.

    Args:
        residual: The compatibility residual the parameters must zero.
        omega: The growth rate on the branch.
        active: Whether the residual vanishes to within tolerance.
        degenerate_jacobian: True if q_u or q_v vanish and the formulas do not apply.
    """

    residual: float
    omega: float
    active: bool = False
    degenerate_jacobian: bool = False


@dataclass(frozen=True)
class DispersionReport:
    """The stability of one spherical-harmonic degree of the coupled system."""

    l: ModeIndex
    G_at_zero: float
    root_omega: Optional[float]
    verdict: Verdict
    case: Case
    lambda_minus: Optional[float]
    lambda_plus: Optional[float]
    Q: Optional[float]
    e_coeff: float
    degenerate_branch: DegenerateBranch


@dataclass(frozen=True)
class StabilityReport:
    """Per-degree reports and their aggregate verdict over l = 1 ... l_cut."""

    homogeneous: HomogeneousStability
    modes: Tuple[DispersionReport, ...]
    l_cut: int
    verdict: Verdict
    unstable_modes: Tuple[int, ...] = field(default=())


@dataclass(frozen=True)
class GrowthRatePoint:
    """A point of the reduced growth rate curve.

    Args:
        mu: The Laplace-Beltrami eigenvalue.
        omega_plus: The positive growth rate, if any.
        s: omega_plus + mu, reported for equal lateral diffusivities only.
    """

    mu: Eigenvalue
    omega_plus: Optional[float]
    s: Optional[float] = None


@dataclass(frozen=True)
class ConsistencyPoint:
    """A comparison between full and reduced growth rates at one value of D."""

    D: float
    root_full: Optional[float]
    root_reduced: float
    gap: Optional[float]


@dataclass(frozen=True)
class OdeStability:
    """Stability of the non-local reaction system under constant perturbations.

    Args:
        verdict: Stable iff the trace is negative and the determinant positive.
        trace: f_u - f_v + q_v + q_V V1'.
        determinant: f_u (q_v + q_V V1') - f_v (q_u + q_V V1').
        f_u_lt_f_v: Whether f_u < f_v, which stability implies.
        determinant_implies_trace: Whether a positive determinant came with a
            negative trace, as the sign conditions guarantee.
    """

    verdict: Verdict
    trace: float
    determinant: float
    f_u_lt_f_v: bool
    determinant_implies_trace: bool


@dataclass(frozen=True)
class QuadraticRoots:
    """The two growth rates of one eigenvalue in the non-local system.

    Args:
        roots: Both roots, complex if the discriminant is negative.
        positive_root: The positive real root, if any.
        constant: The constant term, negative iff a positive root exists.
    """

    roots: Tuple[complex, complex]
    positive_root: Optional[float]
    constant: float
