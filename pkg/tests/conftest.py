import numpy as np
import pytest


def u3_oracle(mu, varphi, lam):
    """U3 written out independently of the library."""
    return np.array(
        [
            [np.cos(mu / 2), -np.exp(1j * lam) * np.sin(mu / 2)],
            [np.exp(1j * varphi) * np.sin(mu / 2), np.exp(1j * (varphi + lam)) * np.cos(mu / 2)],
        ]
    )


def embed(n, ops):
    """Kronecker product over qubits 0..n-1 (qubit 0 leftmost = most significant)."""
    out = np.array([[1.0 + 0j]])
    for q in range(n):
        out = np.kron(out, ops.get(q, np.eye(2)))
    return out


def dense_u3(n, q, angles):
    return embed(n, {q: u3_oracle(*angles)})


def dense_cu3(n, c, t, angles):
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    return embed(n, {c: p0}) + embed(n, {c: p1, t: u3_oracle(*angles)})


def dense_circuit_state(n, n_block, phi):
    """Matrix-chain oracle for the block ansatz (U3 layer, then CU3 ring k -> k+1)."""
    U = np.eye(2**n, dtype=complex)
    pos = 0
    for _ in range(n_block):
        for q in range(n):
            U = dense_u3(n, q, phi[pos : pos + 3]) @ U
            pos += 3
        if n > 1:
            for k in range(n):
                U = dense_cu3(n, k, (k + 1) % n, phi[pos : pos + 3]) @ U
                pos += 3
    assert pos == len(phi)
    return U[:, 0]


def mlp_oracle(layer_dims, gamma, x):
    """Straight-line re-implementation: unpack, matmul, tanh, linear out."""
    h = np.asarray(x, dtype=float)
    pos = 0
    n_layers = len(layer_dims) - 1
    for k in range(n_layers):
        a, b = layer_dims[k], layer_dims[k + 1]
        W = np.array(gamma[pos : pos + a * b]).reshape(a, b)
        pos += a * b
        bias = np.array(gamma[pos : pos + b])
        pos += b
        h = h @ W + bias
        if k < n_layers - 1:
            h = np.tanh(h)
    return h[..., 0]


def central_diff(f, x, eps):
    """Central finite-difference Jacobian of ``f`` (any output shape) at ``x``."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x))
    J = np.zeros(f0.shape + x.shape)
    for k in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[k] += eps
        xm[k] -= eps
        J[..., k] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * eps)
    return J


def rel_err(a, b):
    """Max absolute deviation scaled by the largest reference magnitude."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" in getattr(rep, "nodeid", "") and rep.when == "call":
                name = rep.nodeid.split("::")[-1].removeprefix("test_")
                lines.append((name, "PASS" if outcome == "passed" else "FAIL", rep.duration))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status, dur in sorted(lines):
            terminalreporter.write_line(f"{status}  {name}  ({dur:.1f}s)")
