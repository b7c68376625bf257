"""JSON checkpoint container.

Format (``format: "qtlstm-checkpoint"``, ``version: 1``)::

    mode            "qt" | "classical"
    seed            training seed
    spec            {input_dim, hidden_dim, output_dim}
    circuit         {n_qubits, n_block, phi}          (qt only)
    mapping         {layer_dims, gamma, activation}   (qt only)
    theta           flat LSTM weights                 (classical only)
    data            {level_column, feature_names, window, horizon_steps,
                     lags, test_fraction, val_fraction, normalization}
    metrics         {val_loss, trainable_count, M}

Floats are written by ``json`` with shortest round-trip repr, so a reload is
bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import MinMaxStats
from .lstm import LstmSpec
from .mapping import MappingNet
from .quantum import AnsatzCircuit
from .trainer import QtModel, generate_theta

FORMAT = "qtlstm-checkpoint"
VERSION = 1


@dataclass
class Checkpoint:
    mode: str
    spec: LstmSpec
    seed: int
    data: dict
    metrics: dict = field(default_factory=dict)
    model: QtModel | None = None
    theta: np.ndarray | None = None

    @property
    def stats(self) -> MinMaxStats:
        return MinMaxStats.from_dict(self.data["normalization"])

    def lstm_theta(self) -> np.ndarray:
        """The classical weights, regenerated from ``(phi, gamma)`` in QT mode."""
        return generate_theta(self.model) if self.mode == "qt" else self.theta

    def to_dict(self) -> dict:
        out = {
            "format": FORMAT,
            "version": VERSION,
            "mode": self.mode,
            "seed": self.seed,
            "spec": {
                "input_dim": self.spec.input_dim,
                "hidden_dim": self.spec.hidden_dim,
                "output_dim": self.spec.output_dim,
            },
            "data": self.data,
            "metrics": self.metrics,
        }
        if self.mode == "qt":
            out["circuit"] = {
                "n_qubits": self.model.circuit.n_qubits,
                "n_block": self.model.circuit.n_block,
                "phi": self.model.circuit.phi.tolist(),
            }
            out["mapping"] = {
                "layer_dims": list(self.model.net.layer_dims),
                "gamma": self.model.net.gamma.tolist(),
                "activation": self.model.net.activation,
            }
        else:
            out["theta"] = np.asarray(self.theta).tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Checkpoint":
        if d.get("format") != FORMAT:
            raise ValueError("not a qtlstm checkpoint")
        if d.get("version") != VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('version')}")
        spec = LstmSpec(**d["spec"])
        ck = cls(d["mode"], spec, d["seed"], d["data"], d.get("metrics", {}))
        if ck.mode == "qt":
            c, m = d["circuit"], d["mapping"]
            circuit = AnsatzCircuit(c["n_qubits"], c["n_block"], np.array(c["phi"], dtype=float))
            net = MappingNet(m["layer_dims"], np.array(m["gamma"], dtype=float), m.get("activation", "tanh"))
            ck.model = QtModel(circuit, net, spec)
        elif ck.mode == "classical":
            ck.theta = np.array(d["theta"], dtype=float)
        else:
            raise ValueError(f"unknown checkpoint mode {ck.mode!r}")
        return ck


def save(checkpoint: Checkpoint, path) -> None:
    Path(path).write_text(json.dumps(checkpoint.to_dict(), indent=1) + "\n")


def load(path) -> Checkpoint:
    return Checkpoint.from_dict(json.loads(Path(path).read_text()))
