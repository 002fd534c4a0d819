"""Single-layer bidirectional LSTM regressor in plain numpy.

Input is a scalar per time step. The left-to-right and right-to-left cells
each produce a final hidden state; the two are concatenated, passed through
ReLU and a linear head to give one scalar. Gate blocks are stacked in the
order input, forget, cell candidate, output.
"""
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import InsufficientData, ParameterError
from ..validation import check_scalar, check_sequence, check_windows

DIRECTIONS = ("fwd", "bwd")


@dataclass
class BiLstmModel:
    hidden_size: int
    seq_len: int
    params: dict = field(default_factory=dict)

    @property
    def head_width(self):
        return 2 * self.hidden_size

    def copy(self):
        return BiLstmModel(self.hidden_size, self.seq_len,
                           {k: v.copy() for k, v in self.params.items()})

    def param_shapes(self):
        return _param_shapes(self.hidden_size)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    learning_rate: float = 1e-3
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        check_scalar(self.epochs, "epochs", kind=int, min_val=1)
        check_scalar(self.learning_rate, "learning_rate", min_val=0, include_min=False)
        check_scalar(self.batch_size, "batch_size", kind=int, min_val=1)
        check_scalar(self.beta1, "beta1", min_val=0, max_val=1,
                     include_min=False, include_max=False)
        check_scalar(self.beta2, "beta2", min_val=0, max_val=1,
                     include_min=False, include_max=False)
        check_scalar(self.eps, "eps", min_val=0, include_min=False)


def _param_shapes(hidden):
    shapes = {}
    for d in DIRECTIONS:
        shapes[f"{d}_W"] = (4 * hidden,)
        shapes[f"{d}_U"] = (4 * hidden, hidden)
        shapes[f"{d}_b"] = (4 * hidden,)
    shapes["head_w"] = (2 * hidden,)
    shapes["head_b"] = (1,)
    return shapes


def init_model(hidden_size, seq_len, seed=0):
    """Uniform(-k, k) initialisation with k = 1/sqrt(hidden_size)."""
    check_scalar(hidden_size, "hidden_size", kind=int, min_val=1)
    check_scalar(seq_len, "seq_len", kind=int, min_val=1)
    rng = np.random.default_rng(seed)
    k = 1.0 / np.sqrt(hidden_size)
    params = {name: rng.uniform(-k, k, size=shape)
              for name, shape in _param_shapes(hidden_size).items()}
    return BiLstmModel(hidden_size, seq_len, params)


def _sigmoid(z):
    # tanh form is overflow-free and avoids masked indexing.
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _stacked(params, suffix):
    return np.stack([params[f"{d}_{suffix}"] for d in DIRECTIONS])


def _run_cells(W, U, b, X):
    """Run both directional cells at once.

    ``W``/``b`` are (2, 4H), ``U`` is (2, 4H, H) and ``X`` is (2, batch, steps)
    with the second slice already time-reversed.
    """
    _, batch, steps = X.shape
    hidden = U.shape[2]
    h = np.zeros((2, batch, hidden))
    c = np.zeros((2, batch, hidden))
    Ut = U.transpose(0, 2, 1)
    xw = X[..., None] * W[:, None, None, :] + b[:, None, None, :]
    cache = []
    for t in range(steps):
        z = xw[:, :, t, :] + h @ Ut
        sig = _sigmoid(z[..., :2 * hidden])
        i, f = sig[..., :hidden], sig[..., hidden:]
        g = np.tanh(z[..., 2 * hidden:3 * hidden])
        o = _sigmoid(z[..., 3 * hidden:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        cache.append((X[:, :, t], h, c, i, f, g, o, tc))
        h, c = o * tc, c_new
    return h, cache


def _backprop_cells(U, cache, dh):
    """BPTT through both cells given gradients on their final hidden states."""
    dW = np.zeros(U.shape[:2])
    dU = np.zeros_like(U)
    db = np.zeros(U.shape[:2])
    dc = np.zeros_like(dh)
    for x_t, h_prev, c_prev, i, f, g, o, tc in reversed(cache):
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            do * o * (1.0 - o),
        ], axis=2)
        dW += np.einsum("dbk,db->dk", dz, x_t)
        dU += dz.transpose(0, 2, 1) @ h_prev
        db += dz.sum(axis=1)
        dh = dz @ U
        dc = dc * f
    return dW, dU, db


def _forward_batch(model, X):
    p = model.params
    X2 = np.stack([X, X[:, ::-1]])
    h, cache = _run_cells(_stacked(p, "W"), _stacked(p, "U"), _stacked(p, "b"), X2)
    feat = np.concatenate([h[0], h[1]], axis=1)
    act = np.maximum(feat, 0.0)
    out = act @ p["head_w"] + p["head_b"][0]
    return out, (cache, feat, act)


def predict_batch(model, X):
    """Model outputs for a (n_windows, L) matrix, without clamping."""
    X = check_windows(X, seq_len=model.seq_len)
    return _forward_batch(model, X)[0]


def forward(model, x):
    """Scalar model output for one length-L sequence."""
    x = check_sequence(x, model.seq_len, name="X_t")
    return float(_forward_batch(model, x[np.newaxis, :])[0][0])


def loss_and_grads(model, X, y):
    """Mean squared error over the batch and its gradient for every parameter."""
    X, y = check_windows(X, y, seq_len=model.seq_len)
    p = model.params
    hidden = model.hidden_size
    out, (cache, feat, act) = _forward_batch(model, X)
    resid = out - y
    loss = float(np.mean(resid ** 2))

    dout = 2.0 * resid / X.shape[0]
    grads = {"head_w": act.T @ dout, "head_b": np.array([dout.sum()])}
    dfeat = dout[:, None] * p["head_w"][None, :] * (feat > 0.0)
    dh = np.stack([dfeat[:, :hidden], dfeat[:, hidden:]])
    dW, dU, db = _backprop_cells(_stacked(p, "U"), cache, dh)
    for k, d in enumerate(DIRECTIONS):
        grads[f"{d}_W"], grads[f"{d}_U"], grads[f"{d}_b"] = dW[k], dU[k], db[k]
    return loss, grads


class Adam:
    def __init__(self, params, lr, beta1, beta2, eps):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def train(model, windows, cfg):
    """Fit ``model`` on a WindowSet with minibatch Adam.

    Returns a trained copy and the per-epoch mean training MSE.
    """
    if not isinstance(cfg, TrainConfig):
        raise ParameterError("cfg must be a TrainConfig")
    if len(windows) == 0:
        raise InsufficientData("cannot train on an empty window set")
    X, y = check_windows(windows.X, windows.y, seq_len=model.seq_len)
    model = model.copy()
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    rng = np.random.default_rng(cfg.seed)
    n = X.shape[0]
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = loss_and_grads(model, X[idx], y[idx])
            opt.step(model.params, grads)
            total += loss * idx.shape[0]
        history.append(total / n)
    return model, history
