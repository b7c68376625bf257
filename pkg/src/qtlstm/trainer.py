"""Weight-generation composition (circuit -> mapping net -> LSTM) and training loops.

Only the circuit angles ``phi`` and mapping weights ``gamma`` are trainable in
QT mode; the LSTM weights ``theta`` are regenerated from them on every step.
The classical baseline trains ``theta`` directly with the same loop.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import lstm, mapping, quantum
from .data import WindowedDataset
from .errors import DivergenceError
from .lstm import LstmSpec
from .mapping import MappingNet
from .quantum import AnsatzCircuit

log = logging.getLogger(__name__)

FULL_BATCH_LIMIT = 4096


@dataclass
class QtModel:
    circuit: AnsatzCircuit
    net: MappingNet
    spec: LstmSpec

    def __post_init__(self):
        M = lstm.param_count(self.spec)
        need = lstm.qubits_for(M)
        if self.circuit.n_qubits != need:
            raise ValueError(f"LSTM with {M} weights needs {need} qubits, circuit has {self.circuit.n_qubits}")
        if self.net.input_dim != need + 1:
            raise ValueError(f"mapping net input width must be {need + 1}")

    @classmethod
    def init(cls, spec: LstmSpec, n_block: int = 2, layer_dims=None, seed: int = 0) -> "QtModel":
        rng = np.random.default_rng(seed)
        n = lstm.qubits_for(lstm.param_count(spec))
        circuit = AnsatzCircuit.random(n, n_block, rng)
        net = MappingNet.init(layer_dims or mapping.default_layer_dims(n), rng)
        return cls(circuit, net, spec)

    @property
    def M(self) -> int:
        return lstm.param_count(self.spec)

    @property
    def n_phi(self) -> int:
        return self.circuit.phi.size

    def params(self) -> np.ndarray:
        return np.concatenate([self.circuit.phi, self.net.gamma])

    def with_params(self, params: np.ndarray) -> "QtModel":
        params = np.asarray(params, dtype=float)
        return QtModel(self.circuit.with_phi(params[: self.n_phi]), self.net.with_gamma(params[self.n_phi :]), self.spec)


def trainable_counts(model: QtModel) -> tuple[int, int]:
    """``(|phi| + |gamma|, M)``."""
    return model.circuit.phi.size + model.net.gamma.size, model.M


def generate_theta(model: QtModel) -> np.ndarray:
    probs = quantum.run_ansatz(model.circuit)
    return mapping.forward(model.net, mapping.build_inputs(probs, model.M))


def qt_loss_and_grads(model: QtModel, inputs, targets) -> tuple[float, np.ndarray, np.ndarray]:
    """Batch MSE and its gradients w.r.t. ``phi`` and ``gamma``.

    dL/dtheta from BPTT is pulled back through the mapping net (which gives
    dL/dgamma and dL/dp for the first M basis states, times the probability
    scale) and then through the circuit by one adjoint sweep.
    """
    probs = quantum.run_ansatz(model.circuit)
    x = mapping.build_inputs(probs, model.M)
    theta = mapping.forward(model.net, x)
    loss, d_theta = lstm.backward(theta, model.spec, inputs, targets)
    d_gamma, d_row = mapping.backward(model.net, x, d_theta)
    d_probs = np.zeros_like(probs)
    d_probs[: model.M] = d_row * probs.size  # build_inputs scales p by 2**N
    d_phi = quantum.probabilities_vjp(model.circuit, d_probs)
    return loss, d_phi, d_gamma


def predict_qt(model: QtModel, inputs) -> np.ndarray:
    return lstm.forward(generate_theta(model), model.spec, inputs)


# -- optimisation ----------------------------------------------------------


class Adam:
    def __init__(self, size: int, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class SGD:
    def __init__(self, size: int, lr: float = 1e-3):
        self.lr = lr

    def step(self, params, grad):
        return params - self.lr * grad


OPTIMIZERS = {"adam": Adam, "sgd": SGD}


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int | None = None  # None: full batch up to 4096 windows, else 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    gradient_clip: float | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}; choose from {sorted(OPTIMIZERS)}")
        if self.gradient_clip is not None and self.gradient_clip <= 0:
            raise ValueError("gradient_clip must be positive")

    def resolved_batch_size(self, n_samples: int) -> int:
        if self.batch_size is not None:
            return min(self.batch_size, n_samples)
        return n_samples if n_samples <= FULL_BATCH_LIMIT else 64


@dataclass
class TrainReport:
    mode: str
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_val_loss: list[float] = field(default_factory=list)
    trainable_count: int = 0
    M: int = 0
    wall_clock: float = 0.0

    @property
    def final_val_loss(self) -> float:
        return self.val_loss[-1]

    def curve_rows(self):
        return [(k + 1, tr, va) for k, (tr, va) in enumerate(zip(self.train_loss, self.val_loss))]

    def write_curve(self, path) -> None:
        """``epoch,train_loss,val_loss`` with round-trip float formatting."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_loss"])
            for epoch, tr, va in self.curve_rows():
                w.writerow([epoch, repr(tr), repr(va)])


def _clip(grad: np.ndarray, max_norm: float | None) -> np.ndarray:
    if max_norm is None:
        return grad
    norm = np.linalg.norm(grad)
    return grad * (max_norm / norm) if norm > max_norm else grad


def _fit(params, loss_and_grad, loss_only, dataset: WindowedDataset, config: TrainConfig, report: TrainReport):
    x_tr, y_tr = dataset.subset("train")
    x_va, y_va = dataset.subset("val")
    if len(y_va) == 0:
        x_va, y_va = x_tr, y_tr
    rng = np.random.default_rng(config.seed)
    bs = config.resolved_batch_size(len(y_tr))
    opt = OPTIMIZERS[config.optimizer](params.size, lr=config.learning_rate)
    start = time.perf_counter()

    for epoch in range(config.epochs):
        order = np.arange(len(y_tr)) if bs == len(y_tr) else rng.permutation(len(y_tr))
        batch_losses, weights = [], []
        for lo in range(0, len(order), bs):
            idx = order[lo : lo + bs]
            loss, grad = loss_and_grad(params, x_tr[idx], y_tr[idx])
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                report.wall_clock = time.perf_counter() - start
                raise DivergenceError(f"non-finite loss or gradient at epoch {epoch + 1}", report)
            params = opt.step(params, _clip(grad, config.gradient_clip))
            batch_losses.append(loss)
            weights.append(len(idx))
        train_loss = float(np.average(batch_losses, weights=weights))
        val_loss = loss_only(params, x_va, y_va)
        if not np.isfinite(val_loss):
            report.wall_clock = time.perf_counter() - start
            raise DivergenceError(f"non-finite validation loss at epoch {epoch + 1}", report)
        report.train_loss.append(train_loss)
        report.val_loss.append(val_loss)
        best = min(val_loss, report.best_val_loss[-1]) if report.best_val_loss else val_loss
        report.best_val_loss.append(best)
        log.debug("epoch %d train %.6g val %.6g", epoch + 1, train_loss, val_loss)

    report.wall_clock = time.perf_counter() - start
    return params


def train_qt(model: QtModel, dataset: WindowedDataset, config: TrainConfig) -> tuple[TrainReport, QtModel]:
    """Adam on ``(phi, gamma)``; returns the report and the trained model."""
    qt, M = trainable_counts(model)
    report = TrainReport("qt", trainable_count=qt, M=M)

    def loss_and_grad(params, x, y):
        loss, d_phi, d_gamma = qt_loss_and_grads(model.with_params(params), x, y)
        return loss, np.concatenate([d_phi, d_gamma])

    def loss_only(params, x, y):
        return lstm.mse_loss(predict_qt(model.with_params(params), x), y)

    params = _fit(model.params(), loss_and_grad, loss_only, dataset, config, report)
    return report, model.with_params(params)


def train_classical(
    spec: LstmSpec, dataset: WindowedDataset, config: TrainConfig, theta: np.ndarray | None = None
) -> tuple[TrainReport, np.ndarray]:
    """Same loop, optimising ``theta`` directly; returns the report and ``theta``."""
    if theta is None:
        theta = lstm.init_theta(spec, config.seed)
    M = lstm.param_count(spec)
    report = TrainReport("classical", trainable_count=M, M=M)

    def loss_and_grad(params, x, y):
        return lstm.backward(params, spec, x, y)

    def loss_only(params, x, y):
        return lstm.mse_loss(lstm.forward(params, spec, x), y)

    theta = _fit(np.asarray(theta, dtype=float), loss_and_grad, loss_only, dataset, config, report)
    return report, theta


def persistence_mse(dataset: WindowedDataset, part: str = "val") -> float:
    """MSE of predicting the last observed level, in the dataset's units."""
    _, y = dataset.subset(part)
    return lstm.mse_loss(dataset.last_level(part), y)
