"""
Statevector circuit and its exact gradients
===========================================

Build the U3/CU3 block circuit, read out measurement probabilities and check
the adjoint Jacobian against finite differences.
"""

import numpy as np

from qtlstm.quantum import AnsatzCircuit, grad_probabilities, run_ansatz

# A 3-qubit, 2-block circuit: 6 angles per qubit per block.
circuit = AnsatzCircuit.random(n_qubits=3, n_block=2, rng=0)
print("angles:", circuit.phi.size)

# Basis index i is read big-endian: qubit 0 is the leading bit.
probs = run_ansatz(circuit)
for i, p in enumerate(probs):
    print(f"|{i:03b}>  {p:.4f}")
print("sum:", probs.sum())

# The Jacobian comes from one reverse sweep per basis state.
J = grad_probabilities(circuit)
print("Jacobian shape:", J.shape, " column sums ~0:", np.abs(J.sum(axis=0)).max())

eps = 1e-5
k = 4
shifted = circuit.phi.copy()
shifted[k] += eps
up = run_ansatz(circuit.with_phi(shifted))
shifted[k] -= 2 * eps
down = run_ansatz(circuit.with_phi(shifted))
print("max |adjoint - finite diff| for angle", k, ":", np.abs(J[:, k] - (up - down) / (2 * eps)).max())
