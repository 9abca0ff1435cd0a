"""Linear stability of the coupled bulk-surface system on the unit ball.

A perturbation of degree l grows at rate omega > 0 exactly when omega is a root of
the dispersion function G_l. Homogeneous perturbations (l = 0) are decided by the
sign of S; for l >= 1 a negative G_l(0) guarantees a root, and for equal lateral
diffusivities it is also necessary.
"""

import logging
import math
from typing import Callable, List, Optional

import numpy as np
from scipy import optimize

from polarity_lab.core.exceptions import (
    BracketFailure,
    DomainError,
    InvalidOrder,
    SignConditionViolation,
)
from polarity_lab.core.kinetics import (
    KineticParams,
    stability_value_S,
    verify_sign_conditions,
)
from polarity_lab.core.specfun import MAX_ORDER, kappa, tilde_kappa
from polarity_lab.core.typedefs import (
    Case,
    CaseClassification,
    DegenerateBranch,
    DispersionReport,
    Equilibrium,
    HomogeneousStability,
    ModeIndex,
    StabilityReport,
    Verdict,
)

LOGGER = logging.getLogger(__name__)

#: Relative tolerance of the growth rate bisection
ROOT_RTOL = 1e-12
#: Absolute floor of the growth rate bisection tolerance
ROOT_XTOL = 1e-15
#: Geometric factor by which the upper root bracket grows
BRACKET_FACTOR = 4.0
#: Largest growth rate tried before the bracket is declared lost
OMEGA_CAP = 1e12
#: Number of points of the logarithmic sign scan used when d != 1
SCAN_POINTS = 512
#: Lower end of the logarithmic sign scan
SCAN_FLOOR = 1e-8
#: Relative tolerance under which S counts as zero
DEGENERATE_TOLERANCE = 1e-12
#: Relative tolerance under which the degenerate branch is active
BRANCH_TOLERANCE = 1e-10
#: Margin by which the aggregate verdict extends beyond the cutoff degree
CUTOFF_MARGIN = 2

Dispersion = Callable[[ModeIndex, float, Equilibrium, KineticParams], float]


def _require_finite_D(p: KineticParams) -> None:
    if p.reduced:
        raise DomainError("the coupled system needs a finite cytosolic diffusion D")


def _lateral_quadratic(
    mu: float, omega: float, eq: Equilibrium, p: KineticParams
) -> float:
    return (
        omega**2
        + ((p.d + 1.0) * mu + (eq.f_v - eq.f_u) * p.gamma) * omega
        + p.d * mu**2
        + p.gamma * mu * (-p.d * eq.f_u + eq.f_v)
    )


def dispersion_G(
    l: ModeIndex, omega: float, eq: Equilibrium, p: KineticParams
) -> float:
    """The dispersion function G_l(omega) of the coupled system.

    Args:
        l (ModeIndex): The spherical-harmonic degree.
        omega (float): The nonnegative growth rate.
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters, with finite D.

    Returns:
        float: G_l(omega).
    """
    _require_finite_D(p)
    mu = l * (l + 1.0)
    k = kappa(p.D, l, omega)
    quadratic = _lateral_quadratic(mu, omega, eq, p)
    g, c = p.gamma, eq.jacobian.determinant
    return (
        g * eq.q_V * quadratic
        + k * quadratic
        + k * (-g * eq.q_v * (mu + omega) + g**2 * c)
    )


def dispersion_G0_tilde(omega: float, eq: Equilibrium, p: KineticParams) -> float:
    """The homogeneous dispersion function with its trivial root removed.

    G_0(omega) = omega * dispersion_G0_tilde(omega) for omega > 0, and the
    limit at omega = 0 is gamma^2 S.

    Args:
        omega (float): The positive growth rate.
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters, with finite D.

    Returns:
        float: The reduced homogeneous dispersion function.
    """
    _require_finite_D(p)
    if omega <= 0:
        raise DomainError(f"omega = {omega} must be positive")
    g = p.gamma
    c = eq.jacobian.determinant
    return (
        tilde_kappa(math.sqrt(omega / p.D))
        * (omega**2 + g * omega * (eq.f_v - eq.f_u - eq.q_v) + g**2 * c)
        + g * eq.q_V * omega
        + g**2 * eq.q_V * (eq.f_v - eq.f_u)
    )


def homogeneous_stability(eq: Equilibrium, p: KineticParams) -> HomogeneousStability:
    """Decides stability under spatially constant perturbations.

    Args:
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters.

    Returns:
        HomogeneousStability: Stable iff S > 0, Degenerate if S vanishes.

    Raises:
        SignConditionViolation: If the strict sign conditions fail.
    """
    if not verify_sign_conditions(eq).strict:
        raise SignConditionViolation(
            f"strict sign conditions fail at u*={eq.u_star}, v*={eq.v_star}"
        )
    S = stability_value_S(eq)
    scale = max(abs(eq.jacobian.determinant) / 3.0, abs(eq.q_V * (eq.f_v - eq.f_u)))
    if abs(S) <= DEGENERATE_TOLERANCE * scale or S == 0:
        verdict = Verdict.DEGENERATE
    else:
        verdict = Verdict.STABLE if S > 0 else Verdict.UNSTABLE
    return HomogeneousStability(verdict=verdict, S=S, f_v_gt_f_u=eq.f_v > eq.f_u)


def coefficient_e(l: int, eq: Equilibrium, p: KineticParams) -> float:
    """The coefficient of D l in G_l(0); negative values mean instability at large D.

    Args:
        l (int): The spherical-harmonic degree.
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters.

    Returns:
        float: d mu^2 + gamma mu (-d f_u + f_v - q_v) + gamma^2 (f_u q_v - f_v q_u).
    """
    mu = l * (l + 1.0)
    return (
        p.d * mu**2
        + p.gamma * mu * (-p.d * eq.f_u + eq.f_v - eq.q_v)
        + p.gamma**2 * eq.jacobian.determinant
    )


def instability_band(eq: Equilibrium, p: KineticParams) -> CaseClassification:
    """The roots lambda_-, lambda_+ of d x^2 - b x + c in x = mu / gamma.

    With d = 0 the quadratic degenerates to a line and the missing root is
    replaced by the matching infinity.
    """
    b = p.d * eq.f_u - eq.f_v + eq.q_v
    c = eq.jacobian.determinant
    Q = b * b - 4.0 * p.d * c
    if p.d == 0:
        if b > 0:
            lam_minus, lam_plus = c / b, math.inf
        elif b < 0:
            lam_minus, lam_plus = -math.inf, c / b
        else:
            lam_minus, lam_plus = (-math.inf, math.inf) if c < 0 else (None, None)
    elif Q >= 0:
        root = math.sqrt(Q)
        lam_minus = (b - root) / (2.0 * p.d)
        lam_plus = (b + root) / (2.0 * p.d)
    else:
        lam_minus = lam_plus = None
    return CaseClassification(Case.NONE, lam_minus, lam_plus, Q)


def classify_over_spectrum(
    eq: Equilibrium, p: KineticParams, mus: List[float], labels: List[float]
) -> CaseClassification:
    """Classifies the instability mechanism over a list of eigenvalues.

    Args:
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters.
        mus (List[float]): Laplace-Beltrami eigenvalues.
        labels (List[float]): What to report for each admissible eigenvalue.

    Returns:
        CaseClassification: The case and the labels inside the band.
    """
    band = instability_band(eq, p)
    b = p.d * eq.f_u - eq.f_v + eq.q_v
    c = eq.jacobian.determinant
    lo, hi = band.lambda_minus, band.lambda_plus
    case, admissible = Case.NONE, ()
    if c >= 0 and b > 0 and band.Q > 0 and lo is not None and hi is not None:
        admissible = tuple(
            lab for mu, lab in zip(mus, labels) if lo < mu / p.gamma < hi
        )
        case = Case.CASE1 if admissible else Case.NONE
    elif c < 0 and hi is not None:
        admissible = tuple(lab for mu, lab in zip(mus, labels) if mu / p.gamma < hi)
        case = Case.CASE2 if admissible else Case.NONE
    return CaseClassification(case, lo, hi, band.Q, admissible)


def classify_case(
    eq: Equilibrium, p: KineticParams, l_max: int = MAX_ORDER
) -> CaseClassification:
    """Classifies the instability mechanism available for large D.

    Case 1 needs f_u q_v - f_v q_u >= 0, d f_u - f_v + q_v > 0, Q > 0 and a degree
    with lambda_- < l(l+1)/gamma < lambda_+. Case 2 needs f_u q_v - f_v q_u < 0 and a
    degree with l(l+1)/gamma < lambda_+.

    Args:
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters.
        l_max (int): The largest degree enumerated.

    Returns:
        CaseClassification: The case with the admissible degrees l >= 1.
    """
    ls = list(range(1, l_max + 1))
    mus = [l * (l + 1.0) for l in ls]
    return classify_over_spectrum(eq, p, mus, [float(l) for l in ls])


def degenerate_branch(l: int, eq: Equilibrium, p: KineticParams) -> DegenerateBranch:
    """The growth rate on the branch where the bulk amplitude of the mode vanishes.

    The branch exists only if the compatibility residual vanishes, which happens on
    a nowhere open set of parameters.

    Args:
        l (int): The spherical-harmonic degree.
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters.

    Returns:
        DegenerateBranch: The residual, the branch growth rate and whether the
        branch is active. Vanishing q_u or q_v is flagged, not raised.
    """
    if eq.q_u == 0 or eq.q_v == 0:
        return DegenerateBranch(math.nan, math.nan, degenerate_jacobian=True)
    mu = l * (l + 1.0)
    minor = -eq.f_u * eq.q_v + eq.f_v * eq.q_u
    residual = (p.d - 1.0) * mu * eq.q_u - p.gamma * minor * (eq.q_u - eq.q_v) / eq.q_v
    omega = -(p.gamma * minor + p.d * mu * eq.q_u) / eq.q_u
    scale = max(
        abs((p.d - 1.0) * mu * eq.q_u),
        abs(p.gamma * minor * (eq.q_u - eq.q_v) / eq.q_v),
        abs(p.gamma * eq.q_u * eq.f_v),
        abs(p.gamma * eq.f_u * eq.q_v),
    )
    active = abs(residual) < BRANCH_TOLERANCE * scale
    return DegenerateBranch(residual, omega, active=active)


def _bracket_root(
    G: Callable[[float], float], omega_hi: float, l: int
) -> float:
    while G(omega_hi) <= 0:
        omega_hi *= BRACKET_FACTOR
        LOGGER.debug(f"Expanding root bracket of degree {l} to {omega_hi}")
        if omega_hi > OMEGA_CAP:
            raise BracketFailure(
                f"no sign change of the dispersion function of degree {l} "
                f"below omega = {OMEGA_CAP}"
            )
    return optimize.bisect(G, 0.0, omega_hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)


def _scan_root(G: Callable[[float], float], omega_hi: float) -> Optional[float]:
    grid = np.geomspace(SCAN_FLOOR, omega_hi, SCAN_POINTS)
    values = np.array([G(w) for w in grid])
    changes = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    if not len(changes):
        return None
    i = changes[0]
    return optimize.bisect(G, grid[i], grid[i + 1], xtol=ROOT_XTOL, rtol=ROOT_RTOL)


def _mode_report(
    dispersion: Dispersion,
    l: int,
    eq: Equilibrium,
    p: KineticParams,
    positive_is_stable: bool,
) -> DispersionReport:
    if l < 1 or l > MAX_ORDER:
        raise InvalidOrder(f"degree {l} outside [1, {MAX_ORDER}]")
    _require_finite_D(p)
    band = classify_case(eq, p)
    G = lambda omega: dispersion(ModeIndex(l), omega, eq, p)  # noqa: E731
    G0 = G(0.0)
    omega_hi = max(1.0, p.gamma**2 * abs(eq.jacobian.determinant))

    root: Optional[float] = None
    homogeneous = homogeneous_stability(eq, p)
    if homogeneous.verdict is not Verdict.STABLE:
        verdict = Verdict.NOT_APPLICABLE
    elif G0 < 0:
        root = _bracket_root(G, omega_hi, l)
        verdict = Verdict.UNSTABLE
    elif positive_is_stable:
        verdict = Verdict.STABLE
    else:
        root = _scan_root(G, omega_hi)
        if root is None:
            LOGGER.warning(f"No sign change of degree {l} dispersion function found")
            verdict = Verdict.INCONCLUSIVE
        else:
            verdict = Verdict.UNSTABLE

    return DispersionReport(
        l=ModeIndex(l),
        G_at_zero=G0,
        root_omega=root,
        verdict=verdict,
        case=band.case,
        lambda_minus=band.lambda_minus,
        lambda_plus=band.lambda_plus,
        Q=band.Q,
        e_coeff=coefficient_e(l, eq, p),
        degenerate_branch=degenerate_branch(l, eq, p),
    )


def mode_instability(l: int, eq: Equilibrium, p: KineticParams) -> DispersionReport:
    """Decides the stability of one spherical-harmonic degree l >= 1.

    A negative G_l(0) guarantees a positive root, which is bracketed by geometric
    expansion and refined by bisection. For d = 1 a positive G_l(0) proves
    stability; otherwise G_l is scanned on a logarithmic grid and the verdict is
    Inconclusive when no sign change shows up.

    Args:
        l (int): The degree.
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters, with finite D.

    Returns:
        DispersionReport: The verdict, the root if any and the case data. The
        verdict is NotApplicable unless the state is homogeneously stable.

    Raises:
        BracketFailure: If no sign change is found below the overflow-safe cap.
    """
    return _mode_report(dispersion_G, l, eq, p, positive_is_stable=p.d == 1)


def zero_lateral_dispersion(
    l: ModeIndex, omega: float, eq: Equilibrium, p: KineticParams
) -> float:
    """The dispersion function of the system without lateral membrane diffusion.

    Args:
        l (ModeIndex): The spherical-harmonic degree.
        omega (float): The nonnegative growth rate.
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters, with finite D.

    Returns:
        float: The dispersion function value.
    """
    _require_finite_D(p)
    g = p.gamma
    k = kappa(p.D, l, omega)
    c = eq.jacobian.determinant
    return g * eq.q_V * (omega**2 + (eq.f_v - eq.f_u) * g * omega) + k * (
        omega**2 + (eq.f_v - eq.f_u - eq.q_v) * g * omega + g**2 * c
    )


def zero_lateral_instability(
    l: int, eq: Equilibrium, p: KineticParams
) -> DispersionReport:
    """Root finder of zero_lateral_dispersion with the contract of mode_instability.

    The dispersion function does not involve d. When f_v > f_u and q_v < 0 every
    coefficient of its polynomial in omega is nonnegative, so a positive value at
    zero proves stability for any d; otherwise G is scanned as in
    mode_instability.
    """
    settled = eq.f_v > eq.f_u and eq.q_v < 0 and eq.q_V >= 0
    return _mode_report(
        zero_lateral_dispersion, l, eq, p, positive_is_stable=settled
    )


def constant_perturbation_matrix(eq: Equilibrium) -> np.ndarray:
    """The linear system satisfied by a constant perturbation (u, v, V) at rest.

    Its rows are the linearized reactions f and q and the conservation of mass on
    the unit ball; the determinant is 4 pi S, so it is singular iff S = 0.
    """
    return np.array(
        [
            [eq.f_u, eq.f_v, 0.0],
            [eq.q_u, eq.q_v, eq.q_V],
            [4.0 * math.pi, 4.0 * math.pi, 4.0 * math.pi / 3.0],
        ]
    )


def stability_report(
    eq: Equilibrium,
    p: KineticParams,
    l_max: int = MAX_ORDER,
    report_up_to: Optional[int] = None,
) -> StabilityReport:
    """Per-degree reports and their aggregate over l = 1 ... l_cut.

    Above the first degree at which the coefficient e is positive and increasing
    the quadratic term dominates; l_cut is that degree times a safety margin,
    capped at l_max. Degrees up to report_up_to are reported and aggregated even
    beyond l_cut.

    Args:
        eq (Equilibrium): The homogeneous state.
        p (KineticParams): The kinetic parameters, with finite D.
        l_max (int): The largest degree considered.
        report_up_to (Optional[int]): The smallest number of degrees to report.

    Returns:
        StabilityReport: The reports and the aggregate verdict.
    """
    homogeneous = homogeneous_stability(eq, p)
    l_turn = l_max
    for l in range(1, l_max):
        e, e_next = coefficient_e(l, eq, p), coefficient_e(l + 1, eq, p)
        if e > 0 and e_next > e:
            l_turn = l
            break
    l_cut = min(l_max, max(1, CUTOFF_MARGIN * l_turn))
    l_last = max(l_cut, min(l_max, report_up_to or 0))
    modes = tuple(mode_instability(l, eq, p) for l in range(1, l_last + 1))
    unstable = tuple(int(m.l) for m in modes if m.verdict is Verdict.UNSTABLE)

    if homogeneous.verdict is not Verdict.STABLE:
        verdict = homogeneous.verdict
    elif unstable:
        verdict = Verdict.UNSTABLE
    elif any(m.verdict is Verdict.INCONCLUSIVE for m in modes):
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.STABLE
    LOGGER.debug(f"Stability over l <= {l_last}: {verdict.value}, unstable {unstable}")
    return StabilityReport(homogeneous, modes, l_cut, verdict, unstable)
