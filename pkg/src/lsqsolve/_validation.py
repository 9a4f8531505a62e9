"""Input validation helpers shared across the library and the sklearn-style API."""

import numpy as np

from .errors import (DimensionMismatch, EmptyInput, IndexOutOfRange,
                     InvalidParameter, NonFiniteEntry)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-d float64/complex128 array and check finiteness."""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d, got ndim={arr.ndim}")
    if arr.size == 0:
        raise EmptyInput(f"{name} has no entries")
    dtype = np.complex128 if np.iscomplexobj(arr) else np.float64
    arr = np.ascontiguousarray(arr, dtype=dtype)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntry(f"{name} contains non-finite entries")
    return arr


def as_vector(a, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-d float64/complex128 array and check finiteness."""
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-d, got ndim={arr.ndim}")
    if arr.size == 0:
        raise EmptyInput(f"{name} has no entries")
    dtype = np.complex128 if np.iscomplexobj(arr) else np.float64
    arr = np.ascontiguousarray(arr, dtype=dtype)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntry(f"{name} contains non-finite entries")
    return arr


def check_index(i: int, n: int, name: str = "index") -> int:
    i = int(i)
    if not 0 <= i < n:
        raise IndexOutOfRange(f"{name} {i} outside [0, {n})")
    return i


def check_open_unit(value: float, name: str) -> float:
    """Require value in the open interval (0, 1)."""
    value = float(value)
    if not 0.0 < value < 1.0:
        raise InvalidParameter(f"{name} must lie in (0, 1), got {value}")
    return value


def check_unit_deviate(u: float) -> float:
    """Require a uniform deviate in [0, 1)."""
    u = float(u)
    if not 0.0 <= u < 1.0:
        raise InvalidParameter(f"uniform deviate must lie in [0, 1), got {u}")
    return u


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0.0 or not np.isfinite(value):
        raise InvalidParameter(f"{name} must be positive and finite, got {value}")
    return value


def check_positive_int(value: int, name: str) -> int:
    if value != int(value) or int(value) < 1:
        raise InvalidParameter(f"{name} must be a positive integer, got {value}")
    return int(value)


def check_at_least(value: float, floor: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < floor:
        raise InvalidParameter(f"{name} must be >= {floor}, got {value}")
    return value
