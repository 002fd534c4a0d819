"""Small input-validation helpers shared by the estimators."""
import numbers

import numpy as np

from .exceptions import InsufficientData, ParameterError, ShapeError


def check_scalar(value, name, *, kind=numbers.Real, min_val=None, max_val=None,
                 include_min=True, include_max=True):
    """Validate a scalar parameter and return it unchanged.

    Raises ParameterError on type or bound violations. ``bool`` is rejected
    for integer parameters.
    """
    if isinstance(value, bool) or not isinstance(value, kind):
        raise ParameterError(f"{name} must be {kind.__name__}, got {value!r}")
    if min_val is not None:
        bad = value < min_val if include_min else value <= min_val
        if bad:
            op = ">=" if include_min else ">"
            raise ParameterError(f"{name} must be {op} {min_val}, got {value!r}")
    if max_val is not None:
        bad = value > max_val if include_max else value >= max_val
        if bad:
            op = "<=" if include_max else "<"
            raise ParameterError(f"{name} must be {op} {max_val}, got {value!r}")
    return value


def check_sequence(x, length=None, name="X"):
    """Return ``x`` as a 1-D float64 array, optionally enforcing its length."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ShapeError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


def check_windows(X, y=None, seq_len=None):
    """Validate a 2-D window matrix (n_windows, seq_len) and optional targets."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim != 2:
        raise ShapeError(f"windows must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0:
        raise InsufficientData("no windows supplied")
    if seq_len is not None and X.shape[1] != seq_len:
        raise ShapeError(f"window length must be {seq_len}, got {X.shape[1]}")
    if y is None:
        return X
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise ShapeError(f"{X.shape[0]} windows but {y.shape[0]} targets")
    return X, y


def check_random_state(seed):
    """Turn ``seed`` into a ``numpy.random.Generator`` (PCG64)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.integer)):
        return np.random.default_rng(seed)
    raise ParameterError(f"cannot seed a generator from {seed!r}")
