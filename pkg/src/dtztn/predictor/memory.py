"""Few-shot key-value memory consulted before the BiLSTM."""
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from ..exceptions import InsufficientData
from ..validation import check_scalar, check_sequence
from .lstm import forward, predict_batch

KEY_DECIMALS = 4


def sequence_key(x, decimals=KEY_DECIMALS):
    """Canonical key: each element rounded to ``decimals`` places."""
    # "+ 0.0" folds -0.0 into 0.0 so both round to the same text.
    return ",".join(f"{round(float(v), decimals) + 0.0:.{decimals}f}" for v in x)


class MemoryModule:
    """Bounded map from quantized normalized sequences to normalized targets.

    Insertion order is kept; once ``capacity`` is reached the oldest entry is
    dropped. Overwriting an existing key keeps its original position.
    """

    def __init__(self, capacity=4096):
        check_scalar(capacity, "capacity", kind=int, min_val=1)
        self.capacity = capacity
        self._entries = OrderedDict()

    def __len__(self):
        return len(self._entries)

    def __contains__(self, x):
        return self._key(x) in self._entries

    @staticmethod
    def _key(x):
        return x if isinstance(x, str) else sequence_key(x)

    def get(self, x, default=None):
        return self._entries.get(self._key(x), default)

    def put(self, x, value):
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"memory values must lie in [0, 1], got {value}")
        key = self._key(x)
        if key not in self._entries and len(self._entries) >= self.capacity:
            self._entries.popitem(last=False)
        self._entries[key] = value

    def items(self):
        return list(self._entries.items())

    def copy(self):
        other = MemoryModule(self.capacity)
        other._entries = OrderedDict(self._entries)
        return other

    def __eq__(self, other):
        if not isinstance(other, MemoryModule):
            return NotImplemented
        return self.capacity == other.capacity and self.items() == other.items()


@dataclass(frozen=True)
class Prediction:
    value: float
    source: str  # "memory" or "model"


def predict_with_memory(memory, model, x):
    """Stored value on a memory hit, otherwise the model output clamped to [0, 1]."""
    x = check_sequence(x, model.seq_len, name="X_t")
    stored = memory.get(x)
    if stored is not None:
        return Prediction(stored, "memory")
    return Prediction(float(np.clip(forward(model, x), 0.0, 1.0)), "model")


def memory_update(memory, x, y_hat, y_desired, delta, scaler):
    """Threshold rule: store ``y_desired`` when the Kbps error exceeds ``delta``.

    Returns ``(memory, corrected)``; ``memory`` is updated in place.
    """
    error_kbps = abs(float(scaler.inverse(y_hat)) - float(scaler.inverse(y_desired)))
    if error_kbps > delta:
        memory.put(x, y_desired)
        return memory, float(y_desired)
    return memory, float(y_hat)


def predict_windows(memory, model, X):
    """Vectorised :func:`predict_with_memory`; returns (values, from_memory mask)."""
    X = np.asarray(X, dtype=np.float64)
    values = np.clip(predict_batch(model, X), 0.0, 1.0)
    hits = np.zeros(X.shape[0], dtype=bool)
    if len(memory):
        for i, row in enumerate(X):
            stored = memory.get(row)
            if stored is not None:
                values[i] = stored
                hits[i] = True
    return values, hits


def evaluate(model, memory, windows, scaler):
    """Denormalized MSE/MAE (Kbps) of memory-augmented predictions."""
    if len(windows) == 0:
        raise InsufficientData("no windows to evaluate")
    pred, _ = predict_windows(memory, model, windows.X)
    err = scaler.inverse(pred) - scaler.inverse(windows.y)
    return {"mse": float(np.mean(err ** 2)), "mae": float(np.mean(np.abs(err)))}
