"""Input validation helpers used across the package."""

import numbers

import numpy as np

from .exceptions import InvalidParameter, InvalidRate, LengthMismatch, LengthNotPowerOfTwo


def is_power_of_two(n):
    return isinstance(n, numbers.Integral) and n >= 1 and (n & (n - 1)) == 0


def check_power_of_two(n, name="N"):
    """Return ``log2(n)`` or raise if ``n`` is not a positive power of two."""
    if not is_power_of_two(n):
        raise LengthNotPowerOfTwo(f"{name} must be a power of two, got {n!r}")
    return int(n).bit_length() - 1


def check_positive_int(value, name, allow_zero=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidParameter(f"{name} must be an integer, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        raise InvalidParameter(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value}")
    return int(value)


def check_probability(value, name, low=0.0, high=1.0):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParameter(f"{name} must be a number, got {value!r}") from None
    if not (low <= value <= high):
        raise InvalidParameter(f"{name} must lie in [{low}, {high}], got {value}")
    return value


def check_rate(rate):
    try:
        rate = float(rate)
    except (TypeError, ValueError):
        raise InvalidRate(f"rate must be a number, got {rate!r}") from None
    if not (0.0 <= rate <= 1.0):
        raise InvalidRate(f"rate must lie in [0, 1], got {rate}")
    return rate


def check_distribution(p, name, size=None, atol=1e-9):
    """Validate a probability vector and return it as a float array."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (size is not None and p.shape[0] != size):
        raise InvalidParameter(f"{name} must be a vector of length {size}, got shape {p.shape}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > atol:
        raise InvalidParameter(f"{name} must be a probability vector, got {p.tolist()}")
    return p


def check_bits(a, name="bits", length=None):
    """Coerce to a 0/1 ``uint8`` array, optionally checking the trailing length."""
    arr = np.asarray(a)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise InvalidParameter(f"{name} must contain only 0/1 values")
    arr = arr.astype(np.uint8)
    if length is not None and arr.shape[-1] != length:
        raise LengthMismatch(f"{name} has length {arr.shape[-1]}, expected {length}")
    return arr


def make_rng(seed):
    """Accept an int, None, SeedSequence or Generator and return a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
