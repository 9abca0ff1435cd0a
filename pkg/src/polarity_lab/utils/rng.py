"""Platform independent pseudorandom numbers.

Initial data are drawn from SplitMix64 (Steele, Lea and Flood; public domain),
so a seed gives the same sequence in any language with 64-bit integers. The
n-th draw is ``(z_n >> 11) * 2**-53 * hi`` with ``z_n`` the n-th SplitMix64 output.
"""

from typing import Iterator, List

_MASK = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(seed: int) -> Iterator[int]:
    """Yields the SplitMix64 sequence of a seed as unsigned 64-bit integers.

    >>> hex(next(splitmix64(0)))
    '0xe220a8397b1dcdaf'
    """
    state = seed & _MASK
    while True:
        state = (state + _GOLDEN_GAMMA) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        yield z ^ (z >> 31)


def seeded_uniform(seed: int, n: int, hi: float) -> List[float]:
    """Draws n numbers uniformly from [0, hi).

    Args:
        seed (int): The generator seed; negative seeds wrap modulo 2^64.
        n (int): The number of draws, at least 1.
        hi (float): The positive upper bound.

    Returns:
        List[float]: The draws, identical for identical arguments.
    """
    if n < 1:
        raise ValueError(f"n = {n} must be at least 1")
    if not hi > 0:
        raise ValueError(f"hi = {hi} must be positive")
    stream = splitmix64(seed)
    return [(next(stream) >> 11) * 2.0**-53 * hi for _ in range(n)]
