"""Statevector simulation of the U3/CU3 block ansatz.

Basis indices are big-endian: qubit 0 is the most significant bit of the
index, so ``|q0 q1 ... q_{N-1}>`` maps to ``int("q0q1...", 2)``. Internally a
state is held as a tensor of shape ``(2,) * n_qubits`` so that axis ``q`` is
qubit ``q`` and C-order flattening gives exactly that labelling.

One block is a U3 on every qubit followed by a ring of CU3 gates where qubit
``k`` controls qubit ``(k + 1) % N``. With a single qubit the ring is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np


class InvalidGateError(ValueError):
    """Raised for malformed gates, e.g. a CU3 whose control equals its target."""


def u3_matrix(mu: float, varphi: float, lam: float) -> np.ndarray:
    c, s = np.cos(mu / 2), np.sin(mu / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * varphi) * s, np.exp(1j * (varphi + lam)) * c],
        ],
        dtype=complex,
    )


def u3_derivatives(mu: float, varphi: float, lam: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partial derivatives of :func:`u3_matrix` w.r.t. ``(mu, varphi, lam)``."""
    c, s = np.cos(mu / 2), np.sin(mu / 2)
    e_p, e_l, e_pl = np.exp(1j * varphi), np.exp(1j * lam), np.exp(1j * (varphi + lam))
    d_mu = 0.5 * np.array([[-s, -e_l * c], [e_p * c, -e_pl * s]], dtype=complex)
    d_varphi = np.array([[0, 0], [1j * e_p * s, 1j * e_pl * c]], dtype=complex)
    d_lam = np.array([[0, -1j * e_l * s], [0, 1j * e_pl * c]], dtype=complex)
    return d_mu, d_varphi, d_lam


# -- tensor kernels ---------------------------------------------------------
# ``psi`` may carry leading batch axes; ``axis`` is the absolute axis of the
# qubit being acted on.


def _apply_1q(psi: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    a0 = np.take(psi, 0, axis=axis)
    a1 = np.take(psi, 1, axis=axis)
    return np.stack([mat[0, 0] * a0 + mat[0, 1] * a1, mat[1, 0] * a0 + mat[1, 1] * a1], axis=axis)


def _apply_controlled(psi: np.ndarray, mat: np.ndarray, c_axis: int, t_axis: int, zero_off: bool = False) -> np.ndarray:
    """Apply ``mat`` to ``t_axis`` on the control-|1> slice.

    With ``zero_off`` the control-|0> slice is zeroed instead of kept, which is
    what the derivative of a controlled gate looks like.
    """
    out = np.zeros_like(psi) if zero_off else psi.copy()
    on = [slice(None)] * psi.ndim
    on[c_axis] = 1
    on = tuple(on)
    sub_t = t_axis if t_axis < c_axis else t_axis - 1
    out[on] = _apply_1q(psi[on], mat, sub_t)
    return out


# -- public state API -------------------------------------------------------


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.amplitudes.size != 2**self.n_qubits:
            raise ValueError(f"expected {2 ** self.n_qubits} amplitudes, got {self.amplitudes.size}")

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits}-qubit state")


def apply_u3(state: StateVector, qubit: int, mu: float, varphi: float, lam: float) -> StateVector:
    """Return ``state`` with U3(mu, varphi, lam) applied to ``qubit``."""
    _check_qubit(state, qubit)
    psi = _apply_1q(state.tensor(), u3_matrix(mu, varphi, lam), qubit)
    return StateVector(state.n_qubits, psi.reshape(-1))


def apply_cu3(state: StateVector, control: int, target: int, mu: float, varphi: float, lam: float) -> StateVector:
    """Return ``state`` with U3 applied to ``target`` wherever ``control`` is |1>."""
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise InvalidGateError(f"control and target are both qubit {control}")
    psi = _apply_controlled(state.tensor(), u3_matrix(mu, varphi, lam), control, target)
    return StateVector(state.n_qubits, psi.reshape(-1))


# -- ansatz -----------------------------------------------------------------


class Gate(NamedTuple):
    control: int | None  # None for a plain U3
    target: int
    offset: int  # index of the gate's first angle in phi


def params_per_block(n_qubits: int) -> int:
    return 3 * n_qubits if n_qubits == 1 else 6 * n_qubits


@dataclass
class AnsatzCircuit:
    """``n_block`` repetitions of (U3 layer, CU3 ring) on ``n_qubits`` qubits.

    ``phi`` is laid out gate by gate in application order, three angles
    ``(mu, varphi, lam)`` per gate.
    """

    n_qubits: int
    n_block: int
    phi: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.n_block < 1:
            raise ValueError("n_block must be >= 1")
        self.phi = np.asarray(self.phi, dtype=float).reshape(-1)
        expected = self.num_params(self.n_qubits, self.n_block)
        if self.phi.size != expected:
            raise ValueError(f"phi has length {self.phi.size}, expected {expected}")

    @staticmethod
    def num_params(n_qubits: int, n_block: int) -> int:
        return params_per_block(n_qubits) * n_block

    @classmethod
    def random(cls, n_qubits: int, n_block: int, rng: np.random.Generator | int | None = None) -> "AnsatzCircuit":
        """Angles drawn uniformly from [-pi, pi]."""
        rng = np.random.default_rng(rng)
        phi = rng.uniform(-np.pi, np.pi, size=cls.num_params(n_qubits, n_block))
        return cls(n_qubits, n_block, phi)

    def with_phi(self, phi: np.ndarray) -> "AnsatzCircuit":
        return AnsatzCircuit(self.n_qubits, self.n_block, phi)

    def gates(self) -> Iterator[Gate]:
        n = self.n_qubits
        offset = 0
        for _ in range(self.n_block):
            for q in range(n):
                yield Gate(None, q, offset)
                offset += 3
            if n > 1:
                for k in range(n):
                    yield Gate(k, (k + 1) % n, offset)
                    offset += 3


def _forward(circuit: AnsatzCircuit, psi: np.ndarray, gate: Gate, nb: int, adjoint: bool = False) -> np.ndarray:
    mat = u3_matrix(*circuit.phi[gate.offset : gate.offset + 3])
    if adjoint:
        mat = mat.conj().T
    if gate.control is None:
        return _apply_1q(psi, mat, nb + gate.target)
    return _apply_controlled(psi, mat, nb + gate.control, nb + gate.target)


def final_state(circuit: AnsatzCircuit) -> StateVector:
    """Apply every gate of ``circuit`` to ``|0...0>``."""
    psi = StateVector.zero(circuit.n_qubits).tensor()
    for gate in circuit.gates():
        psi = _forward(circuit, psi, gate, 0)
    return StateVector(circuit.n_qubits, psi.reshape(-1))


def run_ansatz(circuit: AnsatzCircuit) -> np.ndarray:
    """Measurement probabilities ``|<i|psi(phi)>|^2`` for every basis index ``i``."""
    return final_state(circuit).probabilities()


def probabilities_vjp(circuit: AnsatzCircuit, cotangent: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product ``cotangent @ d(probs)/d(phi)`` by adjoint sweep.

    ``cotangent`` has shape ``(2**N,)`` or ``(B, 2**N)``; the result has shape
    ``(P,)`` or ``(B, P)`` with ``P = len(phi)``. One forward pass and one
    reverse pass over the gate list, independent of ``P``.

    With ``f = sum_i c_i |psi_i|^2`` the derivative is
    ``2 Re <lambda | dpsi/dphi_k>`` where ``lambda = c * psi``; ``lambda`` and the
    state are walked backwards through the circuit together.
    """
    n = circuit.n_qubits
    cot = np.asarray(cotangent, dtype=float)
    single = cot.ndim == 1
    cot = np.atleast_2d(cot)
    if cot.shape[1] != 2**n:
        raise ValueError(f"cotangent has {cot.shape[1]} entries, expected {2 ** n}")
    batch = cot.shape[0]

    gates = list(circuit.gates())
    psi = final_state(circuit).tensor()
    lam = cot.reshape((batch,) + (2,) * n) * psi[None]
    grad = np.zeros((batch, circuit.phi.size))
    state_axes = tuple(range(1, n + 1))

    for gate in reversed(gates):
        psi = _forward(circuit, psi, gate, 0, adjoint=True)
        derivs = u3_derivatives(*circuit.phi[gate.offset : gate.offset + 3])
        for j, dmat in enumerate(derivs):
            if gate.control is None:
                mu = _apply_1q(psi, dmat, gate.target)
            else:
                mu = _apply_controlled(psi, dmat, gate.control, gate.target, zero_off=True)
            grad[:, gate.offset + j] = 2.0 * np.real(np.sum(np.conj(lam) * mu[None], axis=state_axes))
        lam = _forward(circuit, lam, gate, 1, adjoint=True)

    return grad[0] if single else grad


def grad_probabilities(circuit: AnsatzCircuit) -> np.ndarray:
    """Full Jacobian ``d p_i / d phi_k`` of shape ``(2**N, len(phi))``.

    Built from the adjoint sweep with one cotangent per basis state, so memory
    is ``O(4**N)``; intended for small circuits. Training uses
    :func:`probabilities_vjp` directly.
    """
    return probabilities_vjp(circuit, np.eye(2**circuit.n_qubits))
