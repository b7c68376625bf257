"""Mapping network turning (basis bits, probability) rows into LSTM weights.

Each basis index ``i`` of an N-qubit state becomes an input row
``[b_0, ..., b_{N-1}, p_i * 2**N]`` (big-endian bits, qubit 0 first). A small
tanh MLP with a linear scalar output maps every row to one classical weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class CapacityError(ValueError):
    """More classical weights requested than the register has basis states."""


def basis_bits(n_qubits: int, count: int | None = None) -> np.ndarray:
    """``(count, n_qubits)`` array of the big-endian bit patterns of ``0..count-1``."""
    count = 2**n_qubits if count is None else count
    idx = np.arange(count)[:, None]
    shifts = np.arange(n_qubits - 1, -1, -1)[None, :]
    return ((idx >> shifts) & 1).astype(float)


def build_inputs(probs: np.ndarray, M: int, scale: float | None = None) -> np.ndarray:
    """Stack the first ``M`` mapping-net input rows.

    ``scale`` multiplies the probability column and defaults to ``2**N`` so a
    uniform distribution feeds ones into the network.
    """
    probs = np.asarray(probs, dtype=float)
    n_states = probs.size
    n_qubits = int(round(np.log2(n_states)))
    if 2**n_qubits != n_states:
        raise ValueError(f"probability vector length {n_states} is not a power of two")
    if M > n_states:
        raise CapacityError(f"{M} weights need more than {n_qubits} qubits")
    if scale is None:
        scale = float(n_states)
    x = np.empty((M, n_qubits + 1))
    x[:, :n_qubits] = basis_bits(n_qubits, M)
    x[:, n_qubits] = probs[:M] * scale
    return x


def default_layer_dims(n_qubits: int) -> list[int]:
    """Two tanh hidden layers of width ``2 * n_qubits``."""
    width = 2 * n_qubits
    return [n_qubits + 1, width, width, 1]


def gamma_size(layer_dims) -> int:
    return sum((a + 1) * b for a, b in zip(layer_dims[:-1], layer_dims[1:]))


@dataclass
class MappingNet:
    """Feed-forward net with tanh hidden layers and a linear output.

    ``gamma`` packs, layer by layer, the ``(in, out)`` weight matrix in
    row-major order followed by the ``out`` biases.
    """

    layer_dims: list[int]
    gamma: np.ndarray = field(repr=False)
    activation: str = "tanh"

    def __post_init__(self):
        self.layer_dims = [int(d) for d in self.layer_dims]
        if len(self.layer_dims) < 2 or self.layer_dims[-1] != 1:
            raise ValueError("layer_dims must have at least two entries and end at 1")
        if self.activation != "tanh":
            raise ValueError(f"unsupported activation {self.activation!r}")
        self.gamma = np.asarray(self.gamma, dtype=float).reshape(-1)
        if self.gamma.size != gamma_size(self.layer_dims):
            raise ValueError(f"gamma has length {self.gamma.size}, expected {gamma_size(self.layer_dims)}")

    @classmethod
    def init(cls, layer_dims, rng: np.random.Generator | int | None = None) -> "MappingNet":
        """Weights and biases uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``."""
        rng = np.random.default_rng(rng)
        chunks = []
        for a, b in zip(layer_dims[:-1], layer_dims[1:]):
            bound = 1.0 / np.sqrt(a)
            chunks.append(rng.uniform(-bound, bound, size=(a + 1) * b))
        return cls(list(layer_dims), np.concatenate(chunks))

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def with_gamma(self, gamma: np.ndarray) -> "MappingNet":
        return MappingNet(self.layer_dims, gamma, self.activation)

    def layers(self, gamma: np.ndarray | None = None) -> list[tuple[np.ndarray, np.ndarray]]:
        """Views ``[(W, b), ...]`` into ``gamma``."""
        gamma = self.gamma if gamma is None else gamma
        out, pos = [], 0
        for a, b in zip(self.layer_dims[:-1], self.layer_dims[1:]):
            W = gamma[pos : pos + a * b].reshape(a, b)
            pos += a * b
            out.append((W, gamma[pos : pos + b]))
            pos += b
        return out


def _check_x(net: MappingNet, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ValueError(f"input width {x.shape[-1]} does not match layer_dims[0]={net.input_dim}")
    return x, single


def _activations(net: MappingNet, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    layers = net.layers()
    for k, (W, b) in enumerate(layers):
        z = acts[-1] @ W + b
        acts.append(z if k == len(layers) - 1 else np.tanh(z))
    return acts


def forward(net: MappingNet, x: np.ndarray) -> float | np.ndarray:
    """Network output for one row (scalar) or a batch of rows (vector)."""
    x, single = _check_x(net, x)
    y = _activations(net, x)[-1][:, 0]
    return float(y[0]) if single else y


def backward(net: MappingNet, x: np.ndarray, upstream) -> tuple[np.ndarray, float | np.ndarray]:
    """Gradients of ``sum(upstream * forward(net, x))``.

    Returns ``(d_gamma, d_prob)``. ``d_gamma`` is summed over rows; ``d_prob``
    is per row and covers only the last input coordinate, the bits being
    constants.
    """
    x, single = _check_x(net, x)
    g = np.broadcast_to(np.asarray(upstream, dtype=float), (x.shape[0],)).reshape(-1, 1)
    acts = _activations(net, x)
    layers = net.layers()
    d_gamma = np.zeros_like(net.gamma)
    grads = net.layers(d_gamma)

    delta = g
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        dW, db = grads[k]
        dW += acts[k].T @ delta
        db += delta.sum(axis=0)
        delta = delta @ W.T
        if k > 0:
            delta = delta * (1.0 - acts[k] ** 2)
    d_prob = delta[:, -1]
    return d_gamma, (float(d_prob[0]) if single else d_prob)
