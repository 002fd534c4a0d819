"""Digital-twin orchestration of the predict -> decide -> actuate -> learn loop.

Per step the twin forecasts the link capacity from the trailing window of
telemetry, corrects the forecast through the few-shot memory once the
mirrored capacity for the step is known, snaps it to a bandwidth state and
resolves an action for that state:

* a state precomputed by a what-if simulation uses the stored action;
* a state never seen before gets a conservative fallback for the whole of
  its first occurrence, and a what-if simulation is queued for it;
* every other state uses the stored or greedy Q-table action.
"""
import csv
import json
from dataclasses import dataclass

import numpy as np

from .agent import RewardParams, greedy_action, greedy_policy, train_agent
from .exceptions import InsufficientData, IoError, ParameterError, StateError
from .netsim import LinkModel, ShaperConfig, capacity_at, step
from .predictor.lstm import forward
from .predictor.memory import memory_update, predict_with_memory

ORIGINS = ("known", "what_if", "adaptive")
PROVENANCES = ("optimal", "what_if", "suboptimal")


@dataclass
class DbEntry:
    action: float
    origin: str
    occurrences: int = 1


class ActionDatabase:
    """State level (Kbps) -> best known action, with where it came from."""

    def __init__(self):
        self.entries = {}

    def __contains__(self, level):
        return float(level) in self.entries

    def __len__(self):
        return len(self.entries)

    def get(self, level):
        return self.entries.get(float(level))

    def record(self, level, action, origin):
        """Insert or bump an entry. Existing actions are never overwritten."""
        if origin not in ORIGINS:
            raise ParameterError(f"unknown origin {origin!r}")
        level = float(level)
        entry = self.entries.get(level)
        if entry is None:
            entry = DbEntry(float(action), origin)
            self.entries[level] = entry
        else:
            entry.occurrences += 1
        return entry

    def to_dict(self):
        return {"entries": [
            {"state_kbps": lvl, "action_kbps": e.action, "origin": e.origin,
             "occurrences": e.occurrences}
            for lvl, e in sorted(self.entries.items())]}

    @classmethod
    def from_dict(cls, doc):
        db = cls()
        for item in doc["entries"]:
            if item["origin"] not in ORIGINS or int(item["occurrences"]) < 1:
                raise ValueError(f"invalid database entry {item}")
            db.entries[float(item["state_kbps"])] = DbEntry(
                float(item["action_kbps"]), item["origin"], int(item["occurrences"]))
        return db

    def save(self, path):
        try:
            with open(path, "w") as fh:
                json.dump(self.to_dict(), fh, indent=2)
        except OSError as exc:
            raise IoError(f"cannot write action database {path}: {exc}") from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise IoError(f"cannot read action database {path}: {exc}") from exc
        except (ValueError, KeyError, TypeError) as exc:
            raise IoError(f"corrupt action database {path}: {exc}") from exc


@dataclass(frozen=True)
class ClosedLoopRecord:
    step: int
    capacity: float
    predicted: float
    action: float
    achieved: float
    provenance: str
    raw_predicted: float = float("nan")
    shaped: float = float("nan")


def suboptimal_fallback(predicted, actions, margin_steps=2):
    """First-encounter action: round up to the action grid, add a safety margin."""
    if predicted <= 0:
        raise ParameterError(f"predicted state must be > 0, got {predicted}")
    rates = actions.rates
    i = int(np.searchsorted(rates, predicted - 1e-9, side="left"))
    return float(rates[min(i + margin_steps, len(rates) - 1)])


class DigitalTwin:
    """Twin state plus the closed-loop logic that drives the simulated link.

    Parameters
    ----------
    predictor : PredictorBundle or None
        Trained forecaster. Required for :meth:`sync` and :meth:`closed_loop_run`.
    q : QTable
        Q-table over ``states`` x ``actions``. Rows for states discovered at
        run time are appended by :meth:`what_if`.
    few_shot : bool
        Consult and update the predictor memory. When False the raw model
        forecast is used as-is.
    digital_twin : bool
        Enable what-if simulation. When False, unknown states are shaped at
        ``fallback_rate``.
    """

    def __init__(self, predictor, q, states, actions, reward_params=RewardParams(),
                 delta=5.0, what_if_episodes=200, what_if_steps=10, link=LinkModel(),
                 seed=0, few_shot=True, digital_twin=True, fallback_rate=None):
        if q.shape != (len(states), len(actions)):
            raise ParameterError("Q-table shape does not match the state/action spaces")
        self.predictor = predictor
        self.q = q
        self.states = states
        self.actions = actions
        self.reward_params = reward_params
        self.delta = delta
        self.what_if_episodes = what_if_episodes
        self.what_if_steps = what_if_steps
        self.link = link
        self.seed = seed
        self.few_shot = few_shot
        self.digital_twin = digital_twin
        self.fallback_rate = fallback_rate
        self.db = ActionDatabase()
        for level, action in greedy_policy(q, states, actions).items():
            self.db.record(level, action, "known")
        self.seen_states = {}
        self.history = []
        self._current_level = None
        self._first_visit_unknown = None
        self._pending_adaptive = set()

    # -- prediction -------------------------------------------------------

    def _require_predictor(self):
        if self.predictor is None:
            raise StateError("digital twin has no trained predictor")
        return self.predictor

    @property
    def seq_len(self):
        return self._require_predictor().model.seq_len

    def _normalize(self, values):
        return np.clip(self._require_predictor().scaler.transform(values), 0.0, 1.0)

    def _forecast(self, window, actual):
        """Return (raw, corrected) forecasts in Kbps for the step after ``window``."""
        b = self._require_predictor()
        x = self._normalize(window)
        if not self.few_shot:
            kbps = float(b.scaler.inverse(np.clip(forward(b.model, x), 0.0, 1.0)))
            return kbps, kbps
        pred = predict_with_memory(b.memory, b.model, x)
        _, corrected = memory_update(b.memory, x, pred.value,
                                     float(self._normalize(actual)), self.delta, b.scaler)
        return float(b.scaler.inverse(pred.value)), float(b.scaler.inverse(corrected))

    def sync(self, telemetry):
        """Ingest observed capacities and apply the memory rule along the way."""
        telemetry = [float(v) for v in np.asarray(telemetry, dtype=np.float64).reshape(-1)]
        L = self.seq_len
        if len(telemetry) < L:
            raise InsufficientData(f"telemetry window of {len(telemetry)} < L={L}")
        for value in telemetry:
            if len(self.history) >= L:
                self._forecast(self.history[-L:], value)
            self.history.append(value)
        return self

    # -- decision ---------------------------------------------------------

    def is_known(self, level):
        return level in self.db or level in self.states

    def observe_state(self, level):
        """Track occurrences: a run of consecutive steps in one state is one occurrence."""
        level = float(level)
        if level == self._current_level:
            return
        self._current_level = level
        self._first_visit_unknown = None
        if not self.is_known(level) and self.seen_states.get(level, 0) == 0:
            self._first_visit_unknown = level
            self._pending_adaptive.add(level)
        self.seen_states[level] = self.seen_states.get(level, 0) + 1

    def resolve_action(self, level):
        """Return ``(action_kbps, provenance)`` for a snapped state level."""
        level = float(level)
        if level == self._first_visit_unknown:
            return self._fallback(level), "suboptimal"
        entry = self.db.get(level)
        if entry is not None:
            return entry.action, ("what_if" if entry.origin == "what_if" else "optimal")
        if level in self.states:
            return float(self.actions.rates[greedy_action(self.q, self.states.index(level))]), "optimal"
        return self._fallback(level), "suboptimal"

    def _fallback(self, level):
        if self.fallback_rate is not None:
            return float(self.fallback_rate)
        return suboptimal_fallback(level, self.actions)

    def what_if(self, level):
        """Simulate a hypothetical constant-capacity state and store its best action.

        Only the twin's Q-table and database change; telemetry history and any
        physical-side records are left alone.
        """
        level = float(level)
        if level <= 0:
            raise ParameterError(f"what-if state must be > 0, got {level}")
        if level in self.db:
            return self.db.record(level, self.db.get(level).action, self.db.get(level).origin)
        states = self.states.with_level(level)
        row = states.index(level)
        q = self.q.copy()
        if len(states) != len(self.states):
            q.insert_row(row)
        sim_seed = np.random.SeedSequence([self.seed, int(round(level * 1000))])
        train_agent(np.full(self.what_if_steps, level), states, self.actions,
                    self.reward_params, self.what_if_episodes,
                    seed=np.random.default_rng(sim_seed), q=q)
        action = float(self.actions.rates[greedy_action(q, row)])
        origin = "adaptive" if level in self._pending_adaptive else "what_if"
        # Merge the simulated result in one go.
        self.q, self.states = q, states
        return self.db.record(level, action, origin)

    # -- closed loop ------------------------------------------------------

    def closed_loop_run(self, schedule, offered):
        """Drive the simulated link over ``schedule`` and return per-step records."""
        L = self.seq_len
        if not self.history:
            self.history = [float(capacity_at(schedule, 0))] * L
        elif len(self.history) < L:
            self.history = [self.history[0]] * (L - len(self.history)) + self.history
        records = []
        for t in range(schedule.total_steps):
            capacity = float(capacity_at(schedule, t))
            raw, predicted = self._forecast(self.history[-L:], capacity)
            level = self.states.snap(predicted)
            if self.digital_twin:
                self.observe_state(level)
                action, provenance = self.resolve_action(level)
            elif level in self.states:
                action = float(self.actions.rates[greedy_action(self.q, self.states.index(level))])
                provenance = "optimal"
            else:
                action, provenance = self._fallback(level), "suboptimal"
            result = step(offered, ShaperConfig(action), capacity, self.link)
            records.append(ClosedLoopRecord(t, capacity, predicted, action, result.achieved,
                                            provenance, raw, result.shaped))
            self.history.append(capacity)
            if provenance == "suboptimal" and self.digital_twin and level not in self.db:
                # Deferred work in principle; run now so runs stay reproducible.
                self.what_if(level)
        return records


def write_records_csv(path, records):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "capacity", "predicted", "action", "achieved", "provenance"])
            for r in records:
                w.writerow([r.step, repr(r.capacity), repr(r.predicted), repr(r.action),
                            repr(r.achieved), r.provenance])
    except OSError as exc:
        raise IoError(f"cannot write closed-loop records {path}: {exc}") from exc


def read_records_csv(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise IoError(f"cannot read closed-loop records {path}: {exc}") from exc
    return [ClosedLoopRecord(int(r["step"]), float(r["capacity"]), float(r["predicted"]),
                             float(r["action"]), float(r["achieved"]), r["provenance"])
            for r in rows]
