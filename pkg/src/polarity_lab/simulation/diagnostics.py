"""Measurements taken on finished simulation records."""

import logging
from typing import Optional, Tuple

import numpy as np

from polarity_lab.core.exceptions import WindowError
from polarity_lab.simulation.grid import Field, spot_count
from polarity_lab.simulation.runner import SimRecord

LOGGER = logging.getLogger(__name__)

__all__ = ["measure_growth_rate", "relative_variation", "spot_count"]


def measure_growth_rate(
    record: SimRecord,
    l: int,
    window: Tuple[float, float],
    baseline: Optional[float] = None,
) -> float:
    """Fits an exponential rate to the degree-l amplitude over a time window.

    The amplitude is the Legendre coefficient of u minus its value in the
    homogeneous reference state. Its sign is taken from the first sample in the
    window, so a perturbation started with either sign can be fitted.

    Args:
        record (SimRecord): A finished run recording degree l.
        l (int): The degree to fit, at most the run's l_diag.
        window (Tuple[float, float]): The closed time interval of the fit.
        baseline (Optional[float]): The reference amplitude; the record's
            baseline if omitted.

    Returns:
        float: The least-squares slope of log |a_l(t)|.

    Raises:
        WindowError: If the window holds fewer than two samples or the amplitude
            changes sign or vanishes inside it.
    """
    amplitudes = record.legendre_amplitudes
    if not 0 <= l < amplitudes.shape[1]:
        raise WindowError(
            f"degree {l} was not recorded (l_diag = {amplitudes.shape[1] - 1})"
        )
    times = np.asarray(record.times)
    t0, t1 = window
    inside = (times >= t0) & (times <= t1)
    if np.count_nonzero(inside) < 2:
        raise WindowError(f"window [{t0}, {t1}] holds fewer than two samples")
    reference = record.baseline[l] if baseline is None else baseline
    signal = amplitudes[inside, l] - reference
    signal = signal * np.sign(signal[0])
    if np.any(signal <= 0):
        raise WindowError(
            f"degree {l} amplitude is not of one sign over [{t0}, {t1}]"
        )
    slope, _ = np.polyfit(times[inside], np.log(signal), 1)
    LOGGER.debug(f"Degree {l} growth rate {slope:.6g} over [{t0}, {t1}]")
    return float(slope)


def relative_variation(w: Field) -> float:
    """The spread max(w) - min(w) relative to max |w|; zero for a zero field.

    >>> relative_variation(np.array([1.0, 2.0, 4.0]))
    0.75
    """
    scale = float(np.max(np.abs(w)))
    if scale == 0:
        return 0.0
    return float(np.max(w) - np.min(w)) / scale
