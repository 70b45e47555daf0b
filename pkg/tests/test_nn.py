import numpy as np
import pytest

from profilegan import nn


def quadratic_loss(y):
    """L = 0.5 * sum(y^2), the standard gradient-check probe."""
    return 0.5 * float((y * y).sum()), y


def identity_layer(dim, activation="linear"):
    return nn.DenseLayer(weights=np.eye(dim), bias=np.zeros(dim), activation=activation)


class TestForward:
    def test_identity_linear_layer_passes_through(self, rng):
        net = nn.MultiLayerNet([identity_layer(3)])
        x = rng.standard_normal((5, 3))
        y, _ = nn.forward(net, x)
        np.testing.assert_array_equal(y, x)

    def test_sigmoid_of_zero_is_half(self):
        net = nn.MultiLayerNet([identity_layer(4, "sigmoid")])
        y, _ = nn.forward(net, np.zeros((2, 4)))
        np.testing.assert_array_equal(y, np.full((2, 4), 0.5))

    def test_tanh_of_zero_is_zero(self):
        net = nn.MultiLayerNet([identity_layer(4, "tanh")])
        y, _ = nn.forward(net, np.zeros((2, 4)))
        np.testing.assert_array_equal(y, np.zeros((2, 4)))

    def test_dimension_mismatch_raises(self, rng):
        net = nn.feed_forward_net(rng, [3, 2])
        with pytest.raises(ValueError):
            nn.forward(net, np.zeros((4, 5)))

    def test_nonfinite_output_raises(self):
        layer = nn.DenseLayer(weights=np.array([[1e308]]), bias=np.zeros(1), activation="linear")
        net = nn.MultiLayerNet([layer, nn.DenseLayer(np.array([[1e308]]), np.zeros(1), "linear")])
        with np.errstate(over="ignore"), pytest.raises(FloatingPointError):
            nn.forward(net, np.array([[1e10]]))


class TestBackward:
    def test_hand_computed_identity_case(self):
        # Identity 2x2 linear layer, batch X = [[1, 2], [3, -1]], L = 0.5*||y||^2.
        # Then y = X, dL/dy = y, and by hand:
        #   dW = y^T X = [[10, -1], [-1, 5]], db = [4, 1], dx = y.
        net = nn.MultiLayerNet([identity_layer(2)])
        x = np.array([[1.0, 2.0], [3.0, -1.0]])
        y, cache = nn.forward(net, x)
        grads, dx = nn.backward(net, cache, y)
        np.testing.assert_array_equal(grads[0], np.array([[10.0, -1.0], [-1.0, 5.0]]))
        np.testing.assert_array_equal(grads[1], np.array([4.0, 1.0]))
        np.testing.assert_array_equal(dx, x)

    def test_zero_output_gradient_gives_zero_grads(self, rng):
        net = nn.feed_forward_net(rng, [4, 6, 2], "leaky_relu", "sigmoid")
        x = rng.standard_normal((3, 4))
        _, cache = nn.forward(net, x)
        grads, dx = nn.backward(net, cache, np.zeros((3, 2)))
        assert all(np.all(g == 0) for g in grads)
        assert np.all(dx == 0)

    def test_mismatched_cache_raises(self, rng):
        net = nn.feed_forward_net(rng, [4, 6, 2])
        other = nn.feed_forward_net(rng, [4, 5, 2])
        _, cache = nn.forward(other, rng.standard_normal((3, 4)))
        with pytest.raises(ValueError):
            nn.backward(net, cache, np.zeros((3, 2)))


class TestGradientCheck:
    def test_all_linear_net_is_exact(self, rng):
        net = nn.feed_forward_net(rng, [4, 5, 3], "linear", "linear")
        err = nn.gradient_check(net, rng.standard_normal((3, 4)), quadratic_loss)
        assert err < 1e-7

    def test_three_layer_leaky_relu(self, rng):
        net = nn.feed_forward_net(rng, [5, 8, 6, 3], "leaky_relu", "leaky_relu")
        err = nn.gradient_check(net, rng.standard_normal((4, 5)), quadratic_loss)
        assert err < 1e-4

    @pytest.mark.parametrize("hidden,out", [
        ("leaky_relu", "sigmoid"),  # generator stack
        ("leaky_relu", "linear"),   # discriminator trunk + head
        ("tanh", "tanh"),
        ("sigmoid", "sigmoid"),
    ])
    def test_every_activation_combination(self, rng, hidden, out):
        net = nn.feed_forward_net(rng, [6, 10, 4], hidden, out)
        err = nn.gradient_check(net, rng.standard_normal((5, 6)), quadratic_loss)
        assert err < 1e-4

    def test_corrupted_gradient_is_detected(self, rng):
        net = nn.feed_forward_net(rng, [3, 4, 2], "linear", "linear")

        def doubled(y):
            loss, grad = quadratic_loss(y)
            return loss, 2.0 * grad

        err = nn.gradient_check(net, rng.standard_normal((3, 3)), doubled)
        assert 0.4 < err < 0.6


class TestAdam:
    def test_first_step_magnitude_is_lr(self):
        # With constant gradient g the bias-corrected first step is
        # lr * g / (|g| + eps) ~= lr * sign(g).
        x = np.array([0.0, 0.0])
        state = nn.AdamState.for_params([x], lr=0.01)
        nn.adam_step([x], [np.array([3.0, -0.5])], state)
        np.testing.assert_allclose(x, [-0.01, 0.01], rtol=1e-6)

    def test_zero_gradient_keeps_params(self):
        x = np.array([1.5, -2.0])
        before = x.copy()
        state = nn.AdamState.for_params([x], lr=0.1)
        nn.adam_step([x], [np.zeros(2)], state)
        np.testing.assert_array_equal(x, before)

    def test_minimizes_quadratic(self):
        x = np.array([1.0])
        state = nn.AdamState.for_params([x], lr=0.05)
        for _ in range(500):
            nn.adam_step([x], [2.0 * x], state)
        assert abs(x[0]) < 1e-3

    def test_nonfinite_gradient_raises(self):
        x = np.array([1.0])
        state = nn.AdamState.for_params([x], lr=0.05)
        with pytest.raises(FloatingPointError):
            nn.adam_step([x], [np.array([np.nan])], state)

    def test_deterministic_updates(self, rng):
        def run():
            r = np.random.default_rng(7)
            net = nn.feed_forward_net(r, [3, 5, 2], "leaky_relu", "sigmoid")
            state = nn.AdamState.for_params(net.parameters(), lr=1e-3)
            x = np.linspace(-1, 1, 12).reshape(4, 3)
            for _ in range(20):
                y, cache = nn.forward(net, x)
                grads, _ = nn.backward(net, cache, y / 4)
                nn.adam_step(net.parameters(), grads, state)
            return net.parameters()

        for a, b in zip(run(), run()):
            np.testing.assert_array_equal(a, b)


class TestSpectralNorm:
    def test_identity_unchanged(self):
        np.testing.assert_allclose(nn.spectral_normalize(np.eye(3), 20), np.eye(3), atol=1e-12)

    def test_diagonal_two_one(self):
        out = nn.spectral_normalize(np.diag([2.0, 1.0]), 20)
        np.testing.assert_allclose(out, np.diag([1.0, 0.5]), atol=1e-12)

    def test_zero_matrix_unchanged(self):
        w = np.zeros((3, 4))
        np.testing.assert_array_equal(nn.spectral_normalize(w, 5), w)

    def test_random_matrices_land_below_one(self, rng):
        for _ in range(10):
            w = rng.standard_normal((12, 7)) * rng.uniform(0.1, 5)
            sn = nn.spectral_normalize(w, 30)
            assert np.linalg.svd(sn, compute_uv=False)[0] <= 1 + 1e-3


def test_xavier_init_is_seeded():
    a = nn.feed_forward_net(np.random.default_rng(3), [4, 8, 2])
    b = nn.feed_forward_net(np.random.default_rng(3), [4, 8, 2])
    for pa, pb in zip(a.parameters(), b.parameters()):
        np.testing.assert_array_equal(pa, pb)
