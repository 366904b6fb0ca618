"""Input validation helpers.

scikit-learn's ``check_array`` refuses complex input, so the solver needs its
own small set of checks.  All of them raise
:class:`~affinepr.exceptions.InvalidArgumentError`.
"""
import numbers

import numpy as np

from .exceptions import InvalidArgumentError


def check_positive_int(value, name, minimum=1):
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidArgumentError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_seed(seed):
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, numbers.Integral):
        raise InvalidArgumentError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise InvalidArgumentError(f"seed must fit in 64 unsigned bits, got {seed}")
    return int(seed)


def check_complex_matrix(A, name="A"):
    """Return ``A`` as a finite 2-D complex128 array."""
    A = np.asarray(A)
    if A.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] == 0 or A.shape[1] == 0:
        raise InvalidArgumentError(f"{name} has a zero dimension: {A.shape}")
    A = A.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError(f"{name} contains NaN or inf")
    return A


def check_complex_vector(v, n=None, name="x"):
    """Return ``v`` as a finite 1-D complex128 array, optionally of length ``n``."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise InvalidArgumentError(f"{name} must be 1-D, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise InvalidArgumentError(f"{name} has length {v.shape[0]}, expected {n}")
    v = v.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError(f"{name} contains NaN or inf")
    return v


def check_observations(y, m):
    y = np.asarray(y)
    if np.iscomplexobj(y):
        raise InvalidArgumentError("observations must be real")
    y = y.astype(np.float64, copy=False)
    if y.ndim != 1 or y.shape[0] != m:
        raise InvalidArgumentError(f"observations have shape {y.shape}, expected ({m},)")
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("observations contain NaN or inf")
    return y


def check_offsets(b, m):
    """Broadcast a scalar or length-``m`` offset to a complex vector."""
    b = np.asarray(b, dtype=np.complex128)
    if b.ndim == 0:
        return np.full(m, b.item(), dtype=np.complex128)
    if b.shape != (m,):
        raise InvalidArgumentError(f"offsets have shape {b.shape}, expected scalar or ({m},)")
    if not np.all(np.isfinite(b)):
        raise InvalidArgumentError("offsets contain NaN or inf")
    return b
