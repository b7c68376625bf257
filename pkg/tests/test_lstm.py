import numpy as np
import pytest

from conftest import central_diff, rel_err
from qtlstm.errors import DataError
from qtlstm.lstm import (
    LstmSpec,
    backward,
    flatten,
    forward,
    init_theta,
    mse_loss,
    param_count,
    qubits_for,
    unflatten,
)


def sig(z):
    return 1 / (1 + np.exp(-z))


class TestParamCount:
    def test_reference_instance(self):
        assert qubits_for(40451) == 16
        assert int(np.ceil(np.log2(40451))) == 16

    def test_tiny(self):
        assert param_count(LstmSpec(1, 1)) == 14

    def test_desk(self):
        spec = LstmSpec(8, 24)
        M = param_count(spec)
        assert M == 3193
        assert qubits_for(M) == 12
        assert sum(a.size for a in unflatten(np.zeros(M), spec).arrays()) == M

    @pytest.mark.parametrize("M,n", [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (2048, 11), (2049, 12)])
    def test_qubits_for(self, M, n):
        assert qubits_for(M) == n


class TestLayout:
    def test_ramp(self):
        spec = LstmSpec(3, 2)
        M = param_count(spec)
        w = unflatten(np.arange(M, dtype=float), spec)
        np.testing.assert_array_equal(w.W_x[0], np.arange(6).reshape(3, 2))
        np.testing.assert_array_equal(w.W_h[0], np.arange(6, 10).reshape(2, 2))
        np.testing.assert_array_equal(w.b[0], [10, 11])
        np.testing.assert_array_equal(w.W_x[1].ravel()[0], 12)

    def test_tiny_head_position(self):
        spec = LstmSpec(1, 1)
        w = unflatten(np.arange(14, dtype=float), spec)
        assert w.W_head[0, 0] == 12 and w.b_head[0] == 13

    @pytest.mark.parametrize("F,H,O", [(1, 1, 1), (3, 4, 1), (8, 24, 1), (2, 3, 2)])
    def test_round_trip(self, F, H, O, rng):
        spec = LstmSpec(F, H, O)
        theta = rng.normal(size=param_count(spec))
        np.testing.assert_array_equal(flatten(unflatten(theta, spec)), theta)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            unflatten(np.zeros(13), LstmSpec(1, 1))


class TestForward:
    def test_zero_theta(self, rng):
        spec = LstmSpec(3, 5)
        y = forward(np.zeros(param_count(spec)), spec, rng.normal(size=(4, 7, 3)))
        np.testing.assert_array_equal(y, 0)

    def test_scalar_recurrence(self):
        # theta layout for F=H=1: per gate (wx, wh, b), then head (w, b)
        gates = {"i": (0.5, -0.3, 0.1), "f": (0.2, 0.4, -0.2), "g": (-0.7, 0.6, 0.05), "o": (0.9, 0.1, 0.3)}
        head = (1.5, -0.25)
        theta = np.array([*gates["i"], *gates["f"], *gates["g"], *gates["o"], *head])
        xs = [0.8, -0.4, 1.2]
        h = c = 0.0
        for x in xs:
            i = sig(gates["i"][0] * x + gates["i"][1] * h + gates["i"][2])
            f = sig(gates["f"][0] * x + gates["f"][1] * h + gates["f"][2])
            g = np.tanh(gates["g"][0] * x + gates["g"][1] * h + gates["g"][2])
            o = sig(gates["o"][0] * x + gates["o"][1] * h + gates["o"][2])
            c = f * c + i * g
            h = o * np.tanh(c)
        expected = head[0] * h + head[1]
        y = forward(theta, LstmSpec(1, 1), np.array(xs).reshape(1, 3, 1))
        assert y[0] == pytest.approx(expected, abs=1e-14)

    def test_batch_order_equivariant(self, rng):
        spec = LstmSpec(4, 6)
        theta = rng.normal(size=param_count(spec))
        x = rng.normal(size=(9, 5, 4))
        perm = rng.permutation(9)
        np.testing.assert_allclose(forward(theta, spec, x)[perm], forward(theta, spec, x[perm]), atol=1e-14)

    def test_non_finite(self):
        spec = LstmSpec(2, 2)
        x = np.zeros((1, 3, 2))
        x[0, 1, 1] = np.nan
        with pytest.raises(DataError):
            forward(np.zeros(param_count(spec)), spec, x)

    def test_every_weight_is_used(self, rng):
        spec = LstmSpec(3, 4)
        theta = rng.normal(size=param_count(spec))
        _, g = backward(theta, spec, rng.normal(size=(6, 5, 3)), rng.normal(size=6))
        assert np.all(g != 0)


class TestLoss:
    def test_zero(self):
        assert mse_loss([1, 2], [1, 2]) == 0

    def test_arithmetic(self):
        assert mse_loss([0, 0], [2, 4]) == 10

    def test_two_pass_oracle(self, rng):
        a, b = rng.normal(size=200), rng.normal(size=200)
        total = 0.0
        for u, v in zip(a, b):
            total += (u - v) ** 2
        assert mse_loss(a, b) == pytest.approx(total / 200, abs=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            mse_loss([], [])


class TestBackward:
    def test_perfect_fit(self, rng):
        spec = LstmSpec(2, 3)
        theta = rng.normal(size=param_count(spec))
        x = rng.normal(size=(4, 5, 2))
        loss, g = backward(theta, spec, x, forward(theta, spec, x))
        assert loss == 0 and not g.any()

    def test_single_step_symbolic(self):
        wx = np.array([0.5, 0.2, -0.7, 0.9])
        b = np.array([0.1, -0.2, 0.05, 0.3])
        wy, by = 1.5, -0.25
        theta = np.concatenate([np.column_stack([wx, np.zeros(4), b]).ravel(), [wy, by]])
        x, y = 0.8, 0.3
        # one step from zero state: c = i*g, h = o*tanh(c); forget gate is irrelevant
        i, g, o = sig(wx[0] * x + b[0]), np.tanh(wx[2] * x + b[2]), sig(wx[3] * x + b[3])
        c = i * g
        h = o * np.tanh(c)
        r = wy * h + by - y
        dh = 2 * r * wy
        dc = dh * o * (1 - np.tanh(c) ** 2)
        dzi, dzg, dzo = dc * g * i * (1 - i), dc * i * (1 - g**2), dh * np.tanh(c) * o * (1 - o)
        expected = np.zeros(14)
        expected[[0, 2]] = dzi * x, dzi
        expected[[6, 8]] = dzg * x, dzg
        expected[[9, 11]] = dzo * x, dzo
        expected[12], expected[13] = 2 * r * h, 2 * r
        loss, grad = backward(theta, LstmSpec(1, 1), np.array([[[x]]]), [y])
        assert loss == pytest.approx(r**2, abs=1e-15)
        np.testing.assert_allclose(grad, expected, atol=1e-14)

    @pytest.mark.parametrize("draw", range(10))
    def test_finite_differences(self, draw):
        rng = np.random.default_rng(100 + draw)
        F, H = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        spec = LstmSpec(F, H)
        assert param_count(spec) <= 200
        theta = rng.normal(scale=0.7, size=param_count(spec))
        x = rng.normal(size=(int(rng.integers(1, 5)), int(rng.integers(1, 8)), F))
        y = rng.normal(size=x.shape[0])
        _, g = backward(theta, spec, x, y)
        fd = central_diff(lambda t: mse_loss(forward(t, spec, x), y), theta, 1e-5)
        assert rel_err(g, fd) < 1e-4

    def test_init_theta_seeded(self):
        spec = LstmSpec(2, 3)
        np.testing.assert_array_equal(init_theta(spec, 4), init_theta(spec, 4))
