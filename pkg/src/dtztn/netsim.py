"""Discrete-time link with injected capacity variation and a traffic shaper.

Each step carries an offered load through an optional shaper onto a link
whose capacity follows a piecewise-constant schedule. Overloading the link
costs goodput: ``achieved = capacity * (1 - beta * overload)`` with
``overload = (shaped - capacity) / shaped``. Paced (shaped) traffic degrades
with the smaller ``paced_beta``.
"""
import csv
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientData, IoError, ParameterError
from .validation import check_scalar


class VariationSchedule:
    """Piecewise-constant capacity: ``segments`` is a list of (start_step, kbps)."""

    def __init__(self, segments, total_steps):
        segments = [(int(s), float(c)) for s, c in segments]
        if not segments or segments[0][0] != 0:
            raise ParameterError("schedule must start at step 0")
        starts = [s for s, _ in segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ParameterError("segment starts must be strictly increasing")
        if any(c <= 0 for _, c in segments):
            raise ParameterError("segment capacities must be > 0")
        check_scalar(total_steps, "total_steps", kind=int, min_val=1)
        if starts[-1] >= total_steps:
            raise ParameterError("last segment starts beyond total_steps")
        self.segments = segments
        self.total_steps = total_steps

    @classmethod
    def from_levels(cls, levels, steps_each=10):
        segs = [(i * steps_each, lvl) for i, lvl in enumerate(levels)]
        return cls(segs, steps_each * len(levels))

    @classmethod
    def constant(cls, kbps, steps):
        return cls([(0, kbps)], steps)

    def __len__(self):
        return self.total_steps

    def __eq__(self, other):
        if not isinstance(other, VariationSchedule):
            return NotImplemented
        return self.segments == other.segments and self.total_steps == other.total_steps

    def capacities(self):
        out = np.empty(self.total_steps)
        bounds = [s for s, _ in self.segments[1:]] + [self.total_steps]
        for (start, cap), end in zip(self.segments, bounds):
            out[start:end] = cap
        return out

    def segment_ranges(self):
        """Yield ``(start, end, kbps)`` with ``end`` exclusive."""
        bounds = [s for s, _ in self.segments[1:]] + [self.total_steps]
        return [(s, e, c) for (s, c), e in zip(self.segments, bounds)]

    def to_dict(self):
        return {"total_steps": self.total_steps,
                "segments": [{"start": s, "kbps": c} for s, c in self.segments]}

    @classmethod
    def from_dict(cls, doc):
        return cls([(seg["start"], seg["kbps"]) for seg in doc["segments"]],
                   int(doc["total_steps"]))


def capacity_at(schedule, step):
    if not 0 <= step < schedule.total_steps:
        raise IndexError(f"step {step} outside [0, {schedule.total_steps})")
    cap = schedule.segments[0][1]
    for start, kbps in schedule.segments:
        if start > step:
            break
        cap = kbps
    return cap


@dataclass(frozen=True)
class ShaperConfig:
    rate: float = None  # None means unlimited

    def __post_init__(self):
        if self.rate is not None:
            check_scalar(self.rate, "rate", min_val=0, include_min=False)


@dataclass(frozen=True)
class LinkModel:
    congestion_beta: float = 0.25
    paced_beta: float = 0.125

    def __post_init__(self):
        check_scalar(self.congestion_beta, "congestion_beta", min_val=0, max_val=1,
                     include_max=False)
        check_scalar(self.paced_beta, "paced_beta", min_val=0,
                     max_val=self.congestion_beta)


@dataclass(frozen=True)
class StepResult:
    offered: float
    shaped: float
    capacity: float
    achieved: float


def step(offered, shaper, capacity, link=LinkModel()):
    if offered < 0:
        raise ParameterError(f"offered load must be >= 0, got {offered}")
    shaped = float(offered) if shaper.rate is None else min(float(offered), shaper.rate)
    if shaped <= capacity:
        achieved = shaped
    else:
        beta = link.congestion_beta if shaper.rate is None else link.paced_beta
        overload = (shaped - capacity) / shaped
        achieved = capacity * (1.0 - beta * overload)
    return StepResult(float(offered), shaped, float(capacity), achieved)


def measure_throughput(results, window=None):
    """Mean achieved Kbps over the last ``window`` results (all when None)."""
    if not results:
        raise InsufficientData("no step results")
    if window is None:
        window = len(results)
    if window < 1 or window > len(results):
        raise InsufficientData(f"window {window} not within 1..{len(results)}")
    return float(np.mean([r.achieved for r in results[-window:]]))


def read_schedule_json(path):
    try:
        with open(path) as fh:
            return VariationSchedule.from_dict(json.load(fh))
    except OSError as exc:
        raise IoError(f"cannot read schedule {path}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise IoError(f"malformed schedule {path}: {exc}") from exc


def write_schedule_json(path, schedule):
    try:
        with open(path, "w") as fh:
            json.dump(schedule.to_dict(), fh, indent=2)
    except OSError as exc:
        raise IoError(f"cannot write schedule {path}: {exc}") from exc


def write_step_results_csv(path, results):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "offered", "shaped", "capacity", "achieved"])
            for i, r in enumerate(results):
                w.writerow([i, repr(r.offered), repr(r.shaped), repr(r.capacity), repr(r.achieved)])
    except OSError as exc:
        raise IoError(f"cannot write step results {path}: {exc}") from exc
