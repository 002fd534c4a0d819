"""Tabular Q-learning decision engine over bandwidth states and shaping rates."""
import csv
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import InsufficientData, IoError, ParameterError
from .validation import check_random_state, check_scalar

DEFAULT_LEVELS = (150, 200, 250, 300, 350, 400, 450, 500)


def _strictly_increasing_positive(values, name):
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ParameterError(f"{name} must not be empty")
    if np.any(arr <= 0) or np.any(np.diff(arr) <= 0):
        raise ParameterError(f"{name} must be positive and strictly increasing")
    return arr


class StateSpace:
    """Known bandwidth states (Kbps) and the grid step used to snap new ones."""

    def __init__(self, levels=DEFAULT_LEVELS, step=50.0):
        self.levels = _strictly_increasing_positive(levels, "levels")
        self.step = check_scalar(float(step), "step", min_val=0, include_min=False)

    def __len__(self):
        return self.levels.shape[0]

    def index(self, level):
        hits = np.flatnonzero(self.levels == level)
        if hits.size == 0:
            raise KeyError(level)
        return int(hits[0])

    def __contains__(self, level):
        return bool(np.any(self.levels == level))

    def snap(self, bandwidth):
        """Round to the nearest multiple of ``step`` (ties go down), minimum one step."""
        k = np.ceil(float(bandwidth) / self.step - 0.5)
        return float(max(k, 1.0) * self.step)

    def with_level(self, level):
        if level in self:
            return self
        return StateSpace(np.sort(np.append(self.levels, level)), self.step)


class ActionSpace:
    def __init__(self, rates=None):
        if rates is None:
            rates = np.arange(10, 601, 10)
        self.rates = _strictly_increasing_positive(rates, "rates")

    @classmethod
    def grid(cls, low=10.0, high=600.0, step=10.0):
        n = int(round((high - low) / step))
        return cls(low + step * np.arange(n + 1))

    @property
    def step(self):
        return float(self.rates[1] - self.rates[0]) if len(self) > 1 else float(self.rates[0])

    def __len__(self):
        return self.rates.shape[0]

    def index(self, rate):
        hits = np.flatnonzero(np.isclose(self.rates, rate))
        if hits.size == 0:
            raise KeyError(rate)
        return int(hits[0])


@dataclass(frozen=True)
class RewardParams:
    overshoot_penalty: float = 2.0

    def __post_init__(self):
        check_scalar(self.overshoot_penalty, "overshoot_penalty", min_val=1)


@dataclass
class QTable:
    values: np.ndarray
    alpha: float = 0.3
    gamma: float = 0.9
    epsilon: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ParameterError("Q values must be an N x M matrix")
        check_scalar(self.alpha, "alpha", min_val=0, max_val=1, include_min=False)
        check_scalar(self.gamma, "gamma", min_val=0, max_val=1, include_max=False)
        check_scalar(self.epsilon, "epsilon", min_val=0, max_val=1)

    @classmethod
    def zeros(cls, n_states, n_actions, **hyper):
        return cls(np.zeros((n_states, n_actions)), **hyper)

    @property
    def shape(self):
        return self.values.shape

    def copy(self):
        return QTable(self.values.copy(), self.alpha, self.gamma, self.epsilon)

    def insert_row(self, index):
        """Add an all-zero row for a newly discovered state at ``index``."""
        self.values = np.insert(self.values, index, 0.0, axis=0)


def quantize_state(bandwidth, space):
    """Index of the nearest known level; ties go to the lower level."""
    if bandwidth < 0:
        raise ParameterError(f"bandwidth must be >= 0, got {bandwidth}")
    dist = np.abs(space.levels - float(bandwidth))
    # argmin returns the first minimum, i.e. the lower level on a tie.
    return int(np.argmin(dist))


def reward(action_rate, capacity, params=RewardParams()):
    """Zero at an exact match; linear penalty below, steeper penalty above capacity."""
    if action_rate < 0 or capacity < 0:
        raise ParameterError("rates must be >= 0")
    if action_rate <= capacity:
        return -(capacity - action_rate)
    return -params.overshoot_penalty * (action_rate - capacity)


def _check_index(i, n, what):
    if not 0 <= i < n:
        raise IndexError(f"{what} index {i} out of range [0, {n})")


def q_update(q, s, a, r, s_next):
    """One Q-learning backup, applied in place. Returns ``q``."""
    n, m = q.shape
    _check_index(s, n, "state")
    _check_index(s_next, n, "next state")
    _check_index(a, m, "action")
    target = r + q.gamma * q.values[s_next].max()
    q.values[s, a] += q.alpha * (target - q.values[s, a])
    return q


def greedy_action(q, s):
    # np.argmax picks the first maximum, i.e. the lowest action index on ties.
    return int(np.argmax(q.values[s]))


def select_action(q, s, rng, greedy=False):
    _check_index(s, q.shape[0], "state")
    if not greedy and rng.random() < q.epsilon:
        return int(rng.integers(q.shape[1]))
    return greedy_action(q, s)


def train_agent(capacities, states, actions, reward_params=RewardParams(), episodes=500,
                seed=0, alpha=0.3, gamma=0.9, eps_start=1.0, eps_end=0.01, q=None):
    """Run ``episodes`` passes over a capacity schedule and return the Q-table.

    The schedule is treated as cyclic, so the last step bootstraps from the
    first. Exploration decays linearly from ``eps_start`` to ``eps_end``.
    Passing ``q`` continues training an existing table in place.
    """
    caps = np.asarray(capacities, dtype=np.float64).reshape(-1)
    if caps.size == 0:
        raise InsufficientData("capacity schedule is empty")
    check_scalar(episodes, "episodes", kind=int, min_val=0)
    rng = check_random_state(seed)
    if q is None:
        q = QTable.zeros(len(states), len(actions), alpha=alpha, gamma=gamma, epsilon=eps_start)
    elif q.shape != (len(states), len(actions)):
        raise ParameterError(f"Q shape {q.shape} does not match spaces "
                             f"({len(states)}, {len(actions)})")
    idx = np.array([quantize_state(c, states) for c in caps])
    rewards = np.array([[reward(a, c, reward_params) for a in actions.rates] for c in caps])
    n = caps.size
    for ep in range(episodes):
        frac = ep / (episodes - 1) if episodes > 1 else 1.0
        q.epsilon = eps_start + (eps_end - eps_start) * frac
        for t in range(n):
            s = idx[t]
            a = select_action(q, s, rng)
            q_update(q, s, a, rewards[t, a], idx[(t + 1) % n])
    return q


def greedy_policy(q, states, actions):
    return {float(lvl): float(actions.rates[greedy_action(q, i)])
            for i, lvl in enumerate(states.levels)}


def oracle_policy(states, actions, reward_params=RewardParams()):
    """Best action per state by exhaustive search, treating the state as capacity."""
    policy = {}
    for level in states.levels:
        r = np.array([reward(a, level, reward_params) for a in actions.rates])
        policy[float(level)] = float(actions.rates[int(np.argmax(r))])
    return policy


def write_qtable_csv(path, q, states, actions):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "gamma", "epsilon"])
            w.writerow([repr(q.alpha), repr(q.gamma), repr(q.epsilon)])
            w.writerow(["state_kbps"] + [repr(float(a)) for a in actions.rates])
            for lvl, row in zip(states.levels, q.values):
                w.writerow([repr(float(lvl))] + [repr(float(v)) for v in row])
    except OSError as exc:
        raise IoError(f"cannot write Q-table {path}: {exc}") from exc


def read_qtable_csv(path, state_step=50.0):
    """Inverse of :func:`write_qtable_csv`; returns ``(q, states, actions)``."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        alpha, gamma, epsilon = (float(v) for v in rows[1])
        actions = ActionSpace([float(v) for v in rows[2][1:]])
        levels = [float(r[0]) for r in rows[3:]]
        values = np.array([[float(v) for v in r[1:]] for r in rows[3:]])
    except OSError as exc:
        raise IoError(f"cannot read Q-table {path}: {exc}") from exc
    except (ValueError, IndexError) as exc:
        raise IoError(f"malformed Q-table {path}: {exc}") from exc
    return (QTable(values, alpha, gamma, epsilon), StateSpace(levels, state_step), actions)


class QLearningAllocator(BaseEstimator):
    """Estimator facade: ``fit`` on a capacity schedule, ``predict`` shaping rates.

    ``predict`` maps each bandwidth to its nearest known state and returns the
    greedy action rate for it.
    """

    def __init__(self, levels=DEFAULT_LEVELS, state_step=50.0, action_low=10.0,
                 action_high=600.0, action_step=10.0, alpha=0.3, gamma=0.9,
                 episodes=500, overshoot_penalty=2.0, random_state=0):
        self.levels = levels
        self.state_step = state_step
        self.action_low = action_low
        self.action_high = action_high
        self.action_step = action_step
        self.alpha = alpha
        self.gamma = gamma
        self.episodes = episodes
        self.overshoot_penalty = overshoot_penalty
        self.random_state = random_state

    def fit(self, X, y=None):
        self.states_ = StateSpace(self.levels, self.state_step)
        self.actions_ = ActionSpace.grid(self.action_low, self.action_high, self.action_step)
        self.reward_params_ = RewardParams(self.overshoot_penalty)
        self.q_table_ = train_agent(np.asarray(X, dtype=np.float64).reshape(-1), self.states_,
                                    self.actions_, self.reward_params_, self.episodes,
                                    seed=self.random_state, alpha=self.alpha, gamma=self.gamma)
        return self

    def predict(self, X):
        check_is_fitted(self, "q_table_")
        bw = np.asarray(X, dtype=np.float64).reshape(-1)
        return np.array([self.actions_.rates[greedy_action(self.q_table_,
                                                           quantize_state(b, self.states_))]
                         for b in bw])

    def policy(self):
        check_is_fitted(self, "q_table_")
        return greedy_policy(self.q_table_, self.states_, self.actions_)
