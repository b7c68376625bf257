"""
From probabilities to LSTM weights
==================================

Every classical LSTM weight is produced by the mapping network from one
(basis bits, probability) row. Only the circuit angles and the mapping
weights are trainable, and their count grows with log2 of the LSTM size.
"""

import numpy as np

from qtlstm import lstm
from qtlstm.lstm import LstmSpec, param_count, qubits_for
from qtlstm.mapping import build_inputs
from qtlstm.quantum import run_ansatz
from qtlstm.trainer import QtModel, generate_theta, trainable_counts

spec = LstmSpec(input_dim=8, hidden_dim=24)
model = QtModel.init(spec, n_block=2, seed=0)
print("LSTM weights M =", model.M, "-> qubits", model.circuit.n_qubits)

rows = build_inputs(run_ansatz(model.circuit), model.M)
print("first mapping rows (bits..., scaled probability):")
print(np.round(rows[:3], 3))

theta = generate_theta(model)
w = lstm.unflatten(theta, spec)
print("input-gate W_x block:", w.W_x[0].shape, " head:", w.W_head.shape)

# Parameter counts as the classical model grows.
print(f"\n{'F':>4} {'H':>4} {'M':>7} {'N':>3} {'QT trainable':>13}")
for F, H in [(8, 24), (8, 40), (16, 64), (32, 96), (151, 50)]:
    s = LstmSpec(F, H)
    qt, M = trainable_counts(QtModel.init(s, seed=0))
    print(f"{F:>4} {H:>4} {M:>7} {qubits_for(param_count(s)):>3} {qt:>13}")
