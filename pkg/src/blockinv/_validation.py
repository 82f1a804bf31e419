"""Input validation helpers."""

import numbers

import numpy as np

from .exceptions import DimensionMismatch, NonPowerOfTwo


def is_power_of_two(x):
    return isinstance(x, numbers.Integral) and x >= 1 and (x & (x - 1)) == 0


def check_power_of_two(x, name):
    if not is_power_of_two(x):
        raise NonPowerOfTwo(f"{name} must be a positive power of two, got {x!r}")
    return int(x)


def check_positive_int(x, name):
    if not isinstance(x, numbers.Integral) or isinstance(x, bool) or x < 1:
        raise ValueError(f"{name} must be a positive integer, got {x!r}")
    return int(x)


def check_tile(a, name="tile"):
    """Return `a` as a square float64 Fortran-ordered array.

    No copy is made when `a` already has the right dtype and layout.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty square 2-D array, got shape {a.shape}")
    return np.asfortranarray(a)


def check_same_dim(a, b):
    if a.shape != b.shape:
        raise DimensionMismatch(f"tile shapes differ: {a.shape} vs {b.shape}")


def check_square_matrix(a, name="matrix"):
    """Validate a dense square matrix whose order is a power of two."""
    a = check_tile(a, name)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    check_power_of_two(a.shape[0], f"order of {name}")
    return a
