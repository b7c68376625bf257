import numpy as np
import pytest

from conftest import central_diff, mlp_oracle, rel_err
from qtlstm.mapping import (
    CapacityError,
    MappingNet,
    backward,
    basis_bits,
    build_inputs,
    default_layer_dims,
    forward,
    gamma_size,
)


class TestBuildInputs:
    def test_seven_qubit_example_row(self):
        n = 7
        i = int("1011100", 2)
        probs = np.full(2**n, (1 - 0.058) / (2**n - 1))
        probs[i] = 0.058
        x = build_inputs(probs, 2**n, scale=1.0)
        np.testing.assert_allclose(x[i], [1, 0, 1, 1, 1, 0, 0, 0.058])

    def test_zero_index(self):
        x = build_inputs(np.array([1.0, 0, 0, 0]), 4)
        np.testing.assert_allclose(x[0], [0, 0, 4.0])

    def test_uniform(self):
        x = build_inputs(np.full(8, 1 / 8), 6)
        assert x.shape == (6, 4)
        np.testing.assert_allclose(x[:, -1], 1.0)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            build_inputs(np.full(8, 1 / 8), 9)

    def test_bits_big_endian(self):
        np.testing.assert_array_equal(basis_bits(3)[6], [1, 1, 0])


class TestNet:
    def test_gamma_size(self):
        dims = default_layer_dims(12)
        assert dims == [13, 24, 24, 1]
        assert gamma_size(dims) == 14 * 24 + 25 * 24 + 25
        net = MappingNet.init(dims, 0)
        assert net.gamma.size == gamma_size(dims)

    def test_zero_net(self):
        net = MappingNet([4, 5, 1], np.zeros(gamma_size([4, 5, 1])))
        assert forward(net, [1, 0, 1, 0.3]) == 0.0

    def test_linear(self):
        net = MappingNet([4, 1], [1, 1, 1, 1, 0])
        assert forward(net, [1, 0, 1, 0.5]) == pytest.approx(2.5, abs=1e-15)

    def test_matches_oracle(self):
        dims = [5, 7, 6, 1]
        net = MappingNet.init(dims, 7)
        x = np.random.default_rng(7).uniform(0, 1, size=(10, 5))
        np.testing.assert_allclose(forward(net, x), mlp_oracle(dims, net.gamma, x), rtol=0, atol=1e-12)
        assert forward(net, x[3]) == pytest.approx(mlp_oracle(dims, net.gamma, x[3]), abs=1e-12)

    def test_deterministic(self):
        net = MappingNet.init([4, 8, 8, 1], 1)
        x = np.array([1, 0, 1, 0.7])
        assert forward(net, x) == forward(net, x)

    def test_shape_error(self):
        net = MappingNet.init([4, 3, 1], 0)
        with pytest.raises(ValueError):
            forward(net, [1, 2, 3])
        with pytest.raises(ValueError):
            MappingNet([4, 3, 1], np.zeros(3))
        with pytest.raises(ValueError):
            MappingNet([4, 3, 2], np.zeros(gamma_size([4, 3, 2])))


class TestBackward:
    def test_zero_upstream(self):
        net = MappingNet.init([4, 6, 6, 1], 2)
        dg, dp = backward(net, [1, 0, 1, 0.4], 0.0)
        assert not dg.any() and dp == 0.0

    def test_linear_dprob(self):
        w = [0.3, -0.2, 0.5, 1.7, 0.1]
        net = MappingNet([4, 1], w)
        _, dp = backward(net, [1, 1, 0, 0.2], 2.0)
        assert dp == pytest.approx(1.7 * 2.0)

    @pytest.mark.parametrize("dims", [[4, 1], [4, 5, 1], [5, 8, 8, 1], [6, 3, 4, 5, 1]])
    def test_finite_differences(self, dims, rng):
        net = MappingNet.init(dims, 3)
        x = np.concatenate([rng.integers(0, 2, dims[0] - 1), [rng.uniform(0, 2)]])
        up = 1.3
        dg, dp = backward(net, x, up)
        fd_g = central_diff(lambda g: up * forward(net.with_gamma(g), x), net.gamma, 1e-5)
        assert rel_err(dg, fd_g) < 1e-4

        def f_prob(p):
            xx = x.copy()
            xx[-1] = p[0]
            return up * forward(net, xx)

        fd_p = central_diff(f_prob, np.array([x[-1]]), 1e-5)
        assert rel_err([dp], fd_p) < 1e-4

    def test_batched_sums_gamma(self, rng):
        net = MappingNet.init([4, 6, 6, 1], 9)
        x = np.column_stack([rng.integers(0, 2, (8, 3)), rng.uniform(0, 2, 8)])
        up = rng.normal(size=8)
        dg, dp = backward(net, x, up)
        rows = [backward(net, x[k], up[k]) for k in range(8)]
        np.testing.assert_allclose(dg, sum(r[0] for r in rows), atol=1e-12)
        np.testing.assert_allclose(dp, [r[1] for r in rows], atol=1e-14)
