import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gradcases import CASES, bilstm_case
from scnn.gradcheck import max_relative_error, numerical_gradient
from scnn.layers import (
    BiLSTM,
    Conv2D,
    Dense,
    Embedding,
    MaxPool2D,
    SwarmFilter,
    lstm_param_count,
    swarm_filter_backward,
    swarm_filter_forward,
)
from scnn.tensor import Prng, ShapeError, column_mean, outer

finite = st.floats(-100, 100, allow_nan=False)


class TestSwarmFilterFunctions:
    def test_forward_oracle_example(self):
        np.testing.assert_allclose(swarm_filter_forward([1, 2, 3], [2, 4]), [4, 8], rtol=1e-15)

    def test_zero_input(self):
        out = swarm_filter_forward(np.zeros(9), [1.0, -2.0, 3.0])
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            swarm_filter_forward([], [1.0])

    def test_outputs_collinear(self):
        rng = np.random.default_rng(5)
        s = rng.normal(size=6)
        a = swarm_filter_forward(rng.normal(size=11) + 1.0, s)
        b = swarm_filter_forward(rng.normal(size=4) - 1.0, s)
        cos = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
        assert abs(abs(cos) - 1.0) < 1e-12

    @settings(max_examples=300)
    @given(arrays(np.float64, st.integers(1, 40), elements=finite),
           arrays(np.float64, st.integers(1, 12), elements=finite))
    def test_matches_outer_product_oracle(self, x, s):
        want = column_mean(outer(x, s))
        got = swarm_filter_forward(x, s)
        scale = np.abs(x).max() * np.abs(s).max()
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * scale)

    @settings(max_examples=100)
    @given(arrays(np.float64, st.integers(1, 40), elements=finite), st.randoms(use_true_random=False))
    def test_permutation_invariant(self, x, rnd):
        s = np.array([0.3, -1.2, 2.0])
        perm = list(range(x.size))
        rnd.shuffle(perm)
        np.testing.assert_allclose(
            swarm_filter_forward(x[perm], s), swarm_filter_forward(x, s),
            rtol=1e-12, atol=1e-12 * (np.abs(x).max() + 1),
        )

    def test_backward_example(self):
        # frozen from central differences of f = g . swarm(x, s), h = 1e-6
        dx, ds = swarm_filter_backward([1, 1], [1, 2, 3], [2, 4])
        np.testing.assert_allclose(ds, [2, 2], rtol=1e-12)
        np.testing.assert_allclose(dx, [2, 2, 2], rtol=1e-12)

    def test_backward_example_agrees_with_finite_differences(self):
        x, s, g = np.array([1.0, 2, 3]), np.array([2.0, 4]), np.array([1.0, 1])
        f = lambda: float(g @ swarm_filter_forward(x, s))
        np.testing.assert_allclose(numerical_gradient(f, x), [2, 2, 2], rtol=1e-8)
        np.testing.assert_allclose(numerical_gradient(f, s), [2, 2], rtol=1e-8)

    def test_backward_zero_upstream(self):
        dx, ds = swarm_filter_backward(np.zeros(2), [1, 2, 3], [2, 4])
        assert not dx.any() and not ds.any()

    def test_backward_dx_components_identical(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n, m = rng.integers(1, 50, size=2)
            dx, _ = swarm_filter_backward(rng.normal(size=m), rng.normal(size=n), rng.normal(size=m))
            assert np.all(dx == dx[0])

    def test_backward_shape_error(self):
        with pytest.raises(ShapeError):
            swarm_filter_backward([1.0], [1.0, 2.0], [1.0, 2.0])


class TestSwarmFilterLayer:
    def test_batch_matches_per_sample(self):
        rng = np.random.default_rng(1)
        layer = SwarmFilter(7, Prng(1))
        x = rng.normal(size=(4, 13))
        out, _ = layer.forward(x)
        for b in range(4):
            np.testing.assert_allclose(out[b], swarm_filter_forward(x[b], layer.s.data), rtol=1e-15)

    def test_no_bias(self):
        assert SwarmFilter(300).param_count == 300


class TestEmbedding:
    def test_lookup_concatenates(self):
        emb = Embedding(2, 2)
        emb.weight.data = [[1, 2], [3, 4]]
        out, _ = emb.forward([[1, 0]])
        np.testing.assert_array_equal(out, [[3, 4, 1, 2]])

    def test_repeated_ids_accumulate(self):
        emb = Embedding(2, 2)
        _, cache = emb.forward([[0, 0]])
        emb.backward(np.array([[1.0, 2.0, 10.0, 20.0]]), cache)
        np.testing.assert_array_equal(emb.weight.grad, [[11, 22], [0, 0]])

    def test_out_of_range_names_position(self):
        emb = Embedding(3, 2)
        with pytest.raises(ValueError, match="position 2"):
            emb.forward([[0, 1, 3]])


class TestDense:
    def test_identity(self):
        d = Dense(2, 2)
        d.W.data = np.eye(2)
        out, _ = d.forward([[3.0, 4.0]])
        np.testing.assert_array_equal(out, [[3, 4]])

    def test_param_count(self):
        assert Dense(10, 2).param_count == 22

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            Dense(3, 2).forward(np.zeros((1, 4)))


class TestConvPool:
    def test_one_by_one_kernel(self):
        conv = Conv2D(1, 1, 1)
        conv.kernels.data = [[[2.0]]]
        out, _ = conv.forward(np.array([[[1.0, 2], [3, 4]]]))
        np.testing.assert_array_equal(out[0, 0], [[2, 4], [6, 8]])

    def test_full_size_geometry(self):
        conv = Conv2D(20, 100, 100)
        assert conv.output_shape((140, 100)) == (20, 41, 1)
        assert conv.param_count == 20 * (100 * 100 + 1)

    def test_kernel_too_large(self):
        with pytest.raises(ShapeError):
            Conv2D(1, 5, 2).forward(np.zeros((1, 4, 4)))

    def test_conv_matches_direct_loop(self):
        rng = np.random.default_rng(2)
        conv = Conv2D(3, 2, 3, Prng(2))
        x = rng.normal(size=(2, 5, 6))
        out, _ = conv.forward(x)
        k = conv.kernels.data
        for b in range(2):
            for c in range(3):
                for i in range(4):
                    for j in range(4):
                        assert out[b, c, i, j] == pytest.approx(np.sum(x[b, i:i + 2, j:j + 3] * k[c]), abs=1e-12)

    def test_pool_basic(self):
        out, _ = MaxPool2D(2).forward(np.array([[[[1.0, 2], [3, 4]]]]))
        np.testing.assert_array_equal(out, [[[[4.0]]]])

    def test_pool_ceil_mode(self):
        pool = MaxPool2D(20)
        assert pool.output_shape((20, 41, 1)) == (20, 3, 1)
        x = np.arange(41.0).reshape(1, 1, 41, 1)
        out, _ = pool.forward(x)
        np.testing.assert_array_equal(out.ravel(), [19, 39, 40])

    def test_pool_routing_conserves_mass_and_first_tie(self):
        rng = np.random.default_rng(4)
        pool = MaxPool2D(3)
        x = np.ones((2, 2, 7, 5))
        out, cache = pool.forward(x)
        g = rng.normal(size=out.shape)
        dx = pool.backward(g, cache)
        assert dx.sum() == pytest.approx(g.sum())
        # all-equal window routes to its top-left cell
        assert dx[0, 0, 0, 0] == g[0, 0, 0, 0] and dx[0, 0, 0, 1] == 0


class TestBiLSTM:
    def test_zero_parameters_give_zero_states(self):
        layer = BiLSTM(4, 3, 2, prng=None)
        out, _ = layer.forward(np.random.default_rng(0).normal(size=(2, 5, 4)))
        assert not out.any()

    def test_one_direction_param_count(self):
        assert lstm_param_count(100, 128) == 117_760

    def test_stack_param_count(self):
        layer = BiLSTM(100, 128, 2)
        assert layer.param_count == 2 * lstm_param_count(100, 128) + 2 * lstm_param_count(256, 128)

    def test_empty_sequence(self):
        with pytest.raises(ValueError):
            BiLSTM(2, 2).forward(np.zeros((1, 0, 2)))

    def test_tiny_gradient_check(self):
        f, wrt, analytic = bilstm_case(0, L=3, d=2, h=2)
        err, where = max_relative_error(f, wrt, analytic)
        assert err < 1e-4, where

    def test_longer_sequence_one_layer(self):
        f, wrt, analytic = bilstm_case(1, L=6, d=3, h=2, layers=1)
        err, where = max_relative_error(f, wrt, analytic)
        assert err < 1e-4, where


@pytest.mark.parametrize("name", sorted(CASES))
def test_gradients_match_finite_differences(name):
    worst = 0.0
    for seed in range(20):
        f, wrt, analytic = CASES[name](1000 + seed)
        err, where = max_relative_error(f, wrt, analytic)
        assert err < 1e-4, (seed, where, err)
        worst = max(worst, err)
