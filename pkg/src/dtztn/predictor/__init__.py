"""Memory-augmented BiLSTM next-state predictor."""
from .bundle import PredictorBundle, load_bundle, save_bundle
from .estimator import FewShotBiLSTMRegressor
from .lstm import BiLstmModel, TrainConfig, forward, init_model, loss_and_grads, predict_batch, train
from .memory import (MemoryModule, Prediction, evaluate, memory_update, predict_windows,
                     predict_with_memory, sequence_key)

__all__ = [
    "BiLstmModel", "FewShotBiLSTMRegressor", "MemoryModule", "Prediction",
    "PredictorBundle", "TrainConfig", "evaluate", "forward", "init_model",
    "load_bundle", "loss_and_grads", "memory_update", "predict_batch",
    "predict_windows", "predict_with_memory", "save_bundle", "sequence_key", "train",
]
