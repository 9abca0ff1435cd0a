"""Special functions of the bulk-surface dispersion relation.

The bulk factor of the dispersion relation is built from the logarithmic derivative
of the modified spherical Bessel functions of the first kind,
``rho_l(r) = r i_l'(r) / i_l(r)``. Since ``i_l`` grows like ``e^r`` the ratio is
never formed from two values of ``i_l``; instead ``rho_l(r) = l + r h`` where
``h = I_{l+3/2}(r) / I_{l+1/2}(r)`` is evaluated from its continued fraction.
"""

import logging
import math
from typing import Union

import numpy as np
import numpy.typing as npt
from scipy import special

from polarity_lab.core.exceptions import (
    DomainError,
    InvalidOrder,
    NoConvergence,
    OverflowRisk,
)
from polarity_lab.core.typedefs import BesselRatioResult

LOGGER = logging.getLogger(__name__)

#: Largest supported function order
MAX_ORDER = 200
#: Largest argument for which i_l(r) is evaluated directly
OVERFLOW_THRESHOLD = 700.0
#: Below this argument Taylor expansions replace the exact expressions
SMALL_ARGUMENT = 1e-4
#: Above this argument the ratio is taken from exponentially scaled Bessel values
SCALED_ARGUMENT = 500.0
#: Above this argument the large-argument expansion r - 1 + l(l + 1) / 2r is exact
#: to double precision
ASYMPTOTIC_ARGUMENT = 1e8
#: Iteration cap of the continued fraction
MAX_ITERATIONS = 10_000
#: Relative convergence tolerance of the continued fraction
TOLERANCE = 1e-14
#: The limit of tilde_kappa(r) as r tends to zero
TILDE_KAPPA_AT_ZERO = 1.0 / 3.0

_TINY = 1e-300


def _check_order(l: int) -> None:
    if l < 0 or l > MAX_ORDER:
        raise InvalidOrder(f"order {l} outside [0, {MAX_ORDER}]")


def mod_sph_bessel_i(l: int, r: float) -> float:
    """Evaluates the modified spherical Bessel function of the first kind.

    Args:
        l (int): The order, at most 200.
        r (float): The nonnegative argument, at most 700.

    Returns:
        float: i_l(r) = sqrt(pi / 2r) I_{l+1/2}(r), with i_0(0) = 1 and i_l(0) = 0.

    Raises:
        InvalidOrder: If l is negative or above the supported cap.
        DomainError: If r is negative.
        OverflowRisk: If e^r would overflow double precision.

    >>> round(mod_sph_bessel_i(0, 1.0), 10)
    1.1752011936
    """
    _check_order(l)
    if r < 0:
        raise DomainError(f"argument {r} is negative")
    if r > OVERFLOW_THRESHOLD:
        raise OverflowRisk(
            f"i_{l}({r}) overflows beyond r = {OVERFLOW_THRESHOLD}, "
            "use bessel_ratio_rho for ratios"
        )
    if r == 0:
        return 1.0 if l == 0 else 0.0
    return float(special.spherical_in(l, r))


def _small_argument_rho(l: int, r: float) -> float:
    y = r * r
    a, b, c = 2 * l + 3, 2 * l + 5, 2 * l + 7
    return (
        l
        + y / a
        - y * y / (a * a * b)
        + y**3 * (1.0 / (2 * a**3 * b) - 1.0 / (2 * a * a * b * c))
    )


def _continued_fraction(nu: float, r: float) -> BesselRatioResult:
    """I_{nu+1}(r) / I_nu(r) = 1 / (b_1 + 1 / (b_2 + ...)), b_k = 2(nu + k) / r.

    The denominator is evaluated by the modified Lentz method.
    """
    f = 2.0 * (nu + 1.0) / r
    c, d = f, 0.0
    for k in range(2, MAX_ITERATIONS + 1):
        b = 2.0 * (nu + k) / r
        d = b + d
        d = 1.0 / (d if d != 0 else _TINY)
        c = b + 1.0 / c
        if c == 0:
            c = _TINY
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < TOLERANCE:
            return BesselRatioResult(1.0 / f, True, k)
    return BesselRatioResult(1.0 / f, False, MAX_ITERATIONS)


def bessel_ratio_rho(l: int, r: float) -> BesselRatioResult:
    """Evaluates rho_l(r) = r i_l'(r) / i_l(r) without overflow.

    The ratio satisfies l <= rho_l(r) <= l + r^2/3 and equals l at r = 0.

    Args:
        l (int): The order, at most 200.
        r (float): The nonnegative argument.

    Returns:
        BesselRatioResult: The ratio with convergence information.

    Raises:
        InvalidOrder: If l is outside [0, 200].
        DomainError: If r is negative.
        NoConvergence: If the continued fraction hits its iteration cap or the
            scaled Bessel ratio is not finite.
    """
    _check_order(l)
    if r < 0:
        raise DomainError(f"argument {r} is negative")
    if r == 0:
        return BesselRatioResult(float(l), True, 0)
    if r < SMALL_ARGUMENT:
        return BesselRatioResult(_small_argument_rho(l, r), True, 0)
    nu = l + 0.5
    if r >= ASYMPTOTIC_ARGUMENT:
        return BesselRatioResult(r - 1.0 + l * (l + 1.0) / (2.0 * r), True, 0)
    if r >= SCALED_ARGUMENT:
        ratio = float(special.ive(nu + 1.0, r) / special.ive(nu, r))
        if not math.isfinite(ratio):
            raise NoConvergence(f"scaled Bessel ratio for rho_{l}({r}) is {ratio}")
        return BesselRatioResult(l + r * ratio, True, 0)
    result = _continued_fraction(nu, r)
    if not result.converged:
        raise NoConvergence(
            f"continued fraction for rho_{l}({r}) did not converge "
            f"in {MAX_ITERATIONS} terms"
        )
    return BesselRatioResult(l + r * result.value, True, result.iterations)


def kappa(D: float, l: int, omega: float) -> float:
    """Evaluates the bulk factor kappa_{D,l}(omega) = D rho_l(sqrt(omega / D)).

    Args:
        D (float): The cytosolic diffusion ratio, finite and positive.
        l (int): The spherical-harmonic degree.
        omega (float): The nonnegative growth rate.

    Returns:
        float: The bulk factor; exactly D l at omega = 0.

    >>> kappa(100.0, 1, 0.0)
    100.0
    """
    if not D > 0 or math.isinf(D):
        raise DomainError(f"D = {D} must be finite and positive")
    if omega < 0:
        raise DomainError(f"omega = {omega} is negative")
    if omega == 0:
        return D * l
    return D * bessel_ratio_rho(l, math.sqrt(omega / D)).value


def tilde_kappa(r: float) -> float:
    """Evaluates (r cosh r - sinh r) / (r^2 sinh r) = rho_0(r) / r^2.

    The function decreases strictly from its limit 1/3 at zero
    (``TILDE_KAPPA_AT_ZERO``) towards zero.

    Args:
        r (float): The positive argument.

    Returns:
        float: The value, free of cancellation near r = 0.
    """
    if r <= 0:
        raise DomainError(f"tilde_kappa requires r > 0, got {r}")
    if r < SMALL_ARGUMENT:
        y = r * r
        return 1.0 / 3.0 - y / 45.0 + 2.0 * y * y / 945.0 - y**3 / 4725.0
    if r < 1.0:
        return _continued_fraction(0.5, r).value / r
    return (1.0 / math.tanh(r) - 1.0 / r) / r


def legendre_p(
    l: int, x: Union[float, npt.ArrayLike]
) -> Union[float, npt.NDArray[np.float64]]:
    """Evaluates the Legendre polynomial P_l by its three-term recurrence.

    Args:
        l (int): The degree, at most 200.
        x (Union[float, ArrayLike]): Points in [-1, 1].

    Returns:
        Union[float, NDArray]: P_l(x), with the shape of x.

    Raises:
        DomainError: If any |x| > 1.

    >>> float(legendre_p(2, 0.5))
    -0.125
    """
    _check_order(l)
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0):
        raise DomainError("Legendre polynomials are evaluated on [-1, 1] only")
    p_prev = np.ones_like(arr)
    if l == 0:
        p = p_prev
    else:
        p = arr.copy()
        for n in range(1, l):
            p, p_prev = ((2 * n + 1) * arr * p - n * p_prev) / (n + 1), p
    return float(p) if np.ndim(x) == 0 else p
