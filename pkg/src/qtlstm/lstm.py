"""Single-layer LSTM with a dense head, driven by one flat weight vector.

Layout of ``theta`` (every matrix row-major, shape ``(in, out)``)::

    for gate in (input, forget, cell candidate, output):
        W_x  (F, H)
        W_h  (H, H)
        b    (H,)
    W_head (H, output_dim)
    b_head (output_dim,)

Gates use the logistic sigmoid, the candidate and cell output use tanh. The
hidden and cell states start at zero and the head reads the final hidden state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DataError

GATES = ("input", "forget", "cell", "output")


@dataclass(frozen=True)
class LstmSpec:
    input_dim: int
    hidden_dim: int
    output_dim: int = 1

    def __post_init__(self):
        if min(self.input_dim, self.hidden_dim, self.output_dim) < 1:
            raise ValueError("LSTM dimensions must be >= 1")


@dataclass
class LstmWeights:
    """Structured view of ``theta``; ``W_x`` etc. stack the gates on axis 0."""

    W_x: np.ndarray  # (4, F, H)
    W_h: np.ndarray  # (4, H, H)
    b: np.ndarray  # (4, H)
    W_head: np.ndarray  # (H, out)
    b_head: np.ndarray  # (out,)

    def arrays(self):
        return [self.W_x, self.W_h, self.b, self.W_head, self.b_head]


def param_count(spec: LstmSpec) -> int:
    F, H, O = spec.input_dim, spec.hidden_dim, spec.output_dim
    return 4 * (F * H + H * H + H) + H * O + O


def qubits_for(M: int) -> int:
    """Smallest ``N`` with ``2**N >= M``, i.e. ``ceil(log2 M)``; exact in integers."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return (M - 1).bit_length()


def unflatten(theta: np.ndarray, spec: LstmSpec) -> LstmWeights:
    theta = np.asarray(theta, dtype=float)
    M = param_count(spec)
    if theta.shape != (M,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({M},)")
    F, H, O = spec.input_dim, spec.hidden_dim, spec.output_dim
    gate_size = F * H + H * H + H
    gates = theta[: 4 * gate_size].reshape(4, gate_size)
    W_x = gates[:, : F * H].reshape(4, F, H)
    W_h = gates[:, F * H : F * H + H * H].reshape(4, H, H)
    b = gates[:, F * H + H * H :]
    head = theta[4 * gate_size :]
    return LstmWeights(W_x, W_h, b, head[: H * O].reshape(H, O), head[H * O :])


def flatten(weights: LstmWeights) -> np.ndarray:
    gates = np.concatenate(
        [weights.W_x.reshape(4, -1), weights.W_h.reshape(4, -1), weights.b.reshape(4, -1)], axis=1
    )
    return np.concatenate([gates.reshape(-1), weights.W_head.reshape(-1), weights.b_head.reshape(-1)])


def init_theta(spec: LstmSpec, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Uniform ``[-1/sqrt(H), 1/sqrt(H)]`` init, the usual recurrent default."""
    rng = np.random.default_rng(rng)
    bound = 1.0 / np.sqrt(spec.hidden_dim)
    return rng.uniform(-bound, bound, size=param_count(spec))


def _check_inputs(spec: LstmSpec, inputs: np.ndarray) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    if x.ndim != 3 or x.shape[2] != spec.input_dim:
        raise ValueError(f"inputs must have shape (B, T, {spec.input_dim}), got {x.shape}")
    if x.shape[1] < 1:
        raise ValueError("sequence length must be >= 1")
    if not np.all(np.isfinite(x)):
        raise DataError("inputs contain non-finite values")
    return x


def _run(w: LstmWeights, x: np.ndarray, keep: bool):
    B, T, _ = x.shape
    H = w.W_h.shape[1]
    Wx = np.concatenate(list(w.W_x), axis=1)  # (F, 4H)
    Wh = np.concatenate(list(w.W_h), axis=1)  # (H, 4H)
    bias = w.b.reshape(-1)
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    xz = x @ Wx + bias  # (B, T, 4H)
    cache = []
    for t in range(T):
        z = xz[:, t] + h @ Wh
        i = expit(z[:, :H])
        f = expit(z[:, H : 2 * H])
        g = np.tanh(z[:, 2 * H : 3 * H])
        o = expit(z[:, 3 * H :])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        if keep:
            cache.append((h_prev, c_prev, i, f, g, o, tc))
    return h, cache


def forward(theta: np.ndarray, spec: LstmSpec, inputs: np.ndarray) -> np.ndarray:
    """Predictions for a batch ``(B, T, F)``; shape ``(B,)`` when ``output_dim == 1``."""
    w = unflatten(theta, spec)
    x = _check_inputs(spec, inputs)
    h, _ = _run(w, x, keep=False)
    y = h @ w.W_head + w.b_head
    return y[:, 0] if spec.output_dim == 1 else y


def mse_loss(preds, targets) -> float:
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if preds.shape != targets.shape:
        raise ValueError(f"shape mismatch {preds.shape} vs {targets.shape}")
    if preds.size == 0:
        raise ValueError("mse_loss of an empty batch")
    return float(np.mean((targets - preds) ** 2))


def backward(theta: np.ndarray, spec: LstmSpec, inputs: np.ndarray, targets) -> tuple[float, np.ndarray]:
    """MSE loss over the batch and its gradient w.r.t. ``theta`` by BPTT."""
    w = unflatten(theta, spec)
    x = _check_inputs(spec, inputs)
    B, T, _ = x.shape
    H = spec.hidden_dim
    targets = np.asarray(targets, dtype=float).reshape(B, spec.output_dim)
    if not np.all(np.isfinite(targets)):
        raise DataError("targets contain non-finite values")

    h, cache = _run(w, x, keep=True)
    y = h @ w.W_head + w.b_head
    loss = mse_loss(y, targets)

    dy = 2.0 * (y - targets) / y.size
    g = LstmWeights(*(np.zeros_like(a) for a in w.arrays()))
    g.W_head[:] = h.T @ dy
    g.b_head[:] = dy.sum(axis=0)

    Wh = np.concatenate(list(w.W_h), axis=1)
    dz_all = np.empty((B, T, 4 * H))
    h_prev_all = np.empty((B, T, H))
    dh = dy @ w.W_head.T
    dc = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        h_prev, c_prev, i, f, gg, o, tc = cache[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc**2)
        dz = dz_all[:, t]
        dz[:, :H] = dc * gg * i * (1.0 - i)
        dz[:, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = dc * i * (1.0 - gg**2)
        dz[:, 3 * H :] = do * o * (1.0 - o)
        h_prev_all[:, t] = h_prev
        dc = dc * f
        dh = dz @ Wh.T

    dWx = np.einsum("btf,btk->fk", x, dz_all)
    dWh = np.einsum("bth,btk->hk", h_prev_all, dz_all)
    db = dz_all.sum(axis=(0, 1))
    for k in range(4):
        sl = slice(k * H, (k + 1) * H)
        g.W_x[k] = dWx[:, sl]
        g.W_h[k] = dWh[:, sl]
        g.b[k] = db[sl]
    return loss, flatten(g)
