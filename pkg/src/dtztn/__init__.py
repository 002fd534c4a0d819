"""Digital-twin assisted zero-touch bandwidth management, at simulator scale.

Modules: ``traffic`` (Poisson series, scaling, windows), ``predictor``
(memory-augmented BiLSTM), ``agent`` (Q-learning), ``netsim`` (link and
shaper), ``twin`` (closed loop and what-if) and ``harness`` (scenarios, CLI).
"""
from .agent import QLearningAllocator
from .predictor import FewShotBiLSTMRegressor
from .traffic import MinMaxNormalizer

__version__ = "0.1.0"

__all__ = ["FewShotBiLSTMRegressor", "MinMaxNormalizer", "QLearningAllocator"]
