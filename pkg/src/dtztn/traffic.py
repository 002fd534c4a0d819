"""Synthetic E2E bandwidth traffic: Poisson generation and preprocessing.

A step ``t`` draws a transmission count from Poisson(lam) and multiplies it by
``unit_size`` to obtain a bandwidth level in Kbps. One step is one second.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DegenerateRange, InsufficientData, IoError, ParameterError
from .validation import check_random_state, check_scalar

# Above this rate the sequential search gets slow and exp(-lam) loses precision.
_INVERSION_MAX_RATE = 30.0


@dataclass(frozen=True)
class TrafficParams:
    """Parameters of the Poisson bandwidth generator.

    ``hold`` keeps each Poisson draw for that many consecutive steps; the
    default of 1 gives an independent draw per step.
    """

    lam: float = 4.0
    unit_size: float = 100.0
    length: int = 1800
    seed: int = 0
    hold: int = 1

    def __post_init__(self):
        check_scalar(self.lam, "lam", min_val=0)
        check_scalar(self.unit_size, "unit_size", min_val=0, include_min=False)
        check_scalar(self.length, "length", kind=int, min_val=1)
        check_scalar(self.seed, "seed", kind=int)
        check_scalar(self.hold, "hold", kind=int, min_val=1)


@dataclass(frozen=True)
class Scaler:
    b_min: float
    b_max: float

    def __post_init__(self):
        if not self.b_max > self.b_min:
            raise DegenerateRange(
                f"b_max ({self.b_max}) must exceed b_min ({self.b_min})")

    @property
    def span(self):
        return self.b_max - self.b_min

    def transform(self, values):
        return (np.asarray(values, dtype=np.float64) - self.b_min) / self.span

    def inverse(self, values):
        return np.asarray(values, dtype=np.float64) * self.span + self.b_min


class BandwidthSeries:
    """Time-ordered bandwidth values in Kbps (``t`` runs 1..N)."""

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ParameterError("bandwidth values must be finite and >= 0")
        self.values = values

    def __len__(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, BandwidthSeries):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"BandwidthSeries(n={len(self)})"


@dataclass
class WindowSet:
    """Sliding-window pairs: ``X[i]`` holds L inputs, ``y[i]`` the next value."""

    X: np.ndarray
    y: np.ndarray
    seq_len: int

    def __len__(self):
        return self.X.shape[0]


def sample_poisson(lam, rng):
    """Draw one Poisson(lam) count by inversion with sequential search."""
    if lam < 0 or not math.isfinite(lam):
        raise ParameterError(f"Poisson rate must be finite and >= 0, got {lam}")
    if lam > _INVERSION_MAX_RATE:
        return int(rng.poisson(lam))
    u = rng.random()
    k = 0
    p = math.exp(-lam)
    cdf = p
    while u > cdf:
        k += 1
        p *= lam / k
        if p == 0.0:
            break
        cdf += p
    return k


def generate_series(params):
    """Generate ``params.length`` bandwidth values, reproducible per seed."""
    rng = check_random_state(params.seed)
    values = np.empty(params.length, dtype=np.float64)
    count = 0
    for t in range(params.length):
        if t % params.hold == 0:
            count = sample_poisson(params.lam, rng)
        values[t] = count * params.unit_size
    return BandwidthSeries(values)


def fit_normalize(series):
    """Min-max normalize ``series`` and return ``(normalized, scaler)``."""
    values = np.asarray(series, dtype=np.float64)
    b_min, b_max = float(values.min()), float(values.max())
    if b_max == b_min:
        raise DegenerateRange(f"constant series at {b_min} Kbps cannot be normalized")
    scaler = Scaler(b_min, b_max)
    return scaler.transform(values), scaler


def inverse_normalize(values, scaler):
    return BandwidthSeries(scaler.inverse(values))


def windowize(normalized, seq_len):
    """Cut a normalized series into (L inputs -> next value) pairs."""
    check_scalar(seq_len, "seq_len", kind=int, min_val=1)
    x = np.asarray(normalized, dtype=np.float64).reshape(-1)
    n = x.shape[0]
    if n <= seq_len:
        raise InsufficientData(f"series of length {n} yields no windows of length {seq_len}")
    X = np.lib.stride_tricks.sliding_window_view(x, seq_len)[:-1].copy()
    return WindowSet(X=X, y=x[seq_len:].copy(), seq_len=seq_len)


class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Estimator wrapper over :class:`Scaler` for pipeline use.

    Accepts 1-D series or a column vector; output keeps the input shape.
    """

    def __init__(self, clip=False):
        self.clip = clip

    def fit(self, X, y=None):
        _, self.scaler_ = fit_normalize(np.asarray(X, dtype=np.float64).reshape(-1))
        return self

    def transform(self, X):
        check_is_fitted(self, "scaler_")
        out = self.scaler_.transform(X)
        return np.clip(out, 0.0, 1.0) if self.clip else out

    def inverse_transform(self, X):
        check_is_fitted(self, "scaler_")
        return self.scaler_.inverse(X)


def write_series_csv(path, series):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "kbps"])
            for t, v in enumerate(np.asarray(series), start=1):
                writer.writerow([t, repr(float(v))])
    except OSError as exc:
        raise IoError(f"cannot write series to {path}: {exc}") from exc


def read_series_csv(path):
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["t", "kbps"]:
                raise IoError(f"{path}: expected header 't,kbps', got {header}")
            values = [float(row[1]) for row in reader if row]
    except OSError as exc:
        raise IoError(f"cannot read series from {path}: {exc}") from exc
    except (ValueError, IndexError) as exc:
        raise IoError(f"{path}: malformed row ({exc})") from exc
    return BandwidthSeries(values)
