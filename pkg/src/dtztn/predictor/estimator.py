"""scikit-learn compatible wrapper around the memory-augmented BiLSTM."""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..traffic import WindowSet, fit_normalize, windowize
from ..validation import check_scalar, check_windows
from .bundle import PredictorBundle
from .lstm import TrainConfig, init_model, train
from .memory import MemoryModule, memory_update, predict_windows


class FewShotBiLSTMRegressor(RegressorMixin, BaseEstimator):
    """Next-step bandwidth regressor with few-shot memory correction.

    Inputs and outputs are in Kbps. ``fit`` takes windows of ``seq_len``
    past values and the value that followed each; scaling is fitted on
    those values and applied internally.

    Parameters
    ----------
    hidden_size : int
        Units per LSTM direction.
    seq_len : int
        Window length L.
    delta : float
        Memory-update threshold in Kbps.
    memory_capacity : int
        Maximum number of stored sequences (FIFO eviction).
    random_state : int
        Seeds both weight initialisation and minibatch order.
    """

    def __init__(self, hidden_size=32, seq_len=9, epochs=40, learning_rate=1e-3,
                 batch_size=32, beta1=0.9, beta2=0.999, eps=1e-8, delta=5.0,
                 memory_capacity=4096, random_state=0):
        self.hidden_size = hidden_size
        self.seq_len = seq_len
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.delta = delta
        self.memory_capacity = memory_capacity
        self.random_state = random_state

    def _train_config(self):
        return TrainConfig(epochs=self.epochs, learning_rate=self.learning_rate,
                           batch_size=self.batch_size, beta1=self.beta1,
                           beta2=self.beta2, eps=self.eps, seed=self.random_state)

    def fit(self, X, y):
        check_scalar(self.delta, "delta", min_val=0)
        X, y = check_windows(X, y, seq_len=self.seq_len)
        _, scaler = fit_normalize(np.concatenate([X.ravel(), y]))
        windows = WindowSet(scaler.transform(X), scaler.transform(y), self.seq_len)
        model = init_model(self.hidden_size, self.seq_len, seed=self.random_state)
        model, self.loss_history_ = train(model, windows, self._train_config())
        self.bundle_ = PredictorBundle(model, scaler, MemoryModule(self.memory_capacity))
        return self

    def fit_series(self, series):
        """Convenience: window a raw Kbps series and fit on it."""
        x = np.asarray(series, dtype=np.float64)
        w = windowize(x, self.seq_len)
        return self.fit(w.X, w.y)

    @classmethod
    def from_bundle(cls, bundle, **params):
        est = cls(hidden_size=bundle.model.hidden_size, seq_len=bundle.model.seq_len,
                  memory_capacity=bundle.memory.capacity, **params)
        est.bundle_ = bundle
        est.loss_history_ = []
        return est

    def _normalize(self, X):
        return np.clip(self.bundle_.scaler.transform(X), 0.0, 1.0)

    def predict(self, X):
        check_is_fitted(self, "bundle_")
        X = check_windows(X, seq_len=self.seq_len)
        b = self.bundle_
        values, _ = predict_windows(b.memory, b.model, self._normalize(X))
        return b.scaler.inverse(values)

    def partial_update(self, X, y):
        """Few-shot ingestion: apply the threshold rule to each (window, target).

        Returns the corrected predictions in Kbps.
        """
        check_is_fitted(self, "bundle_")
        X, y = check_windows(X, y, seq_len=self.seq_len)
        b = self.bundle_
        Xn, yn = self._normalize(X), self._normalize(y)
        out = np.empty(X.shape[0])
        for i in range(X.shape[0]):
            y_hat, _ = predict_windows(b.memory, b.model, Xn[i:i + 1])
            _, out[i] = memory_update(b.memory, Xn[i], y_hat[0], yn[i], self.delta, b.scaler)
        return b.scaler.inverse(out)
