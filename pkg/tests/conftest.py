import numpy as np
import pytest

from dtztn.agent import ActionSpace, StateSpace, train_agent
from dtztn.harness.config import config_from_dict
from dtztn.netsim import VariationSchedule
from dtztn.predictor import MemoryModule, PredictorBundle, TrainConfig, init_model, train
from dtztn.traffic import TrafficParams, fit_normalize, generate_series, windowize

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_bundle():
    """A quickly trained predictor; closed-loop logic does not depend on its accuracy."""
    series = generate_series(TrafficParams(lam=4.0, unit_size=100.0, length=300, seed=3, hold=10))
    x, scaler = fit_normalize(series)
    model, _ = train(init_model(8, 9, seed=3), windowize(x, 9), TrainConfig(epochs=3, seed=3))
    return PredictorBundle(model, scaler, MemoryModule())


@pytest.fixture
def fresh_bundle(small_bundle):
    return PredictorBundle(small_bundle.model, small_bundle.scaler, MemoryModule())


@pytest.fixture(scope="session")
def default_spaces():
    return StateSpace(), ActionSpace()


@pytest.fixture(scope="session")
def trained_q(default_spaces):
    states, actions = default_spaces
    sched = VariationSchedule.from_levels([300, 400, 250, 450, 200, 350, 150, 500], 10)
    return train_agent(sched.capacities(), states, actions, episodes=500, seed=0)


@pytest.fixture
def fast_config(tmp_path):
    """Config with a tiny predictor so end-to-end runs take well under a second."""
    return config_from_dict({
        "out": str(tmp_path / "out"),
        "traffic": {"train_length": 300, "test_length": 100},
        "predictor": {"hidden_size": 8, "epochs": 2},
        "agent": {"episodes": 300},
    })


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)

