import math

import numpy as np
import pytest

from punctrl.net import (
    Adam,
    NetworkParams,
    TargetPair,
    backward,
    forward,
    forward_cached,
    gaussian_log_density,
    load_params,
    params_from_bytes,
    params_to_bytes,
    penalized_tanh,
    penalized_tanh_grad,
    reparameterize,
    sample_gaussian_head,
    save_params,
    split_gaussian,
)


class TestPenalizedTanh:
    def test_zero(self):
        assert penalized_tanh(0.0) == 0.0

    def test_limits(self):
        assert penalized_tanh(50.0) == pytest.approx(1.0, abs=1e-12)
        assert penalized_tanh(-50.0) == pytest.approx(-0.25, abs=1e-12)

    def test_one_sided_derivatives_at_zero(self):
        assert penalized_tanh_grad(1e-12) == pytest.approx(1.0, abs=1e-9)
        assert penalized_tanh_grad(-1e-12) == pytest.approx(0.25, abs=1e-9)

    def test_matches_finite_differences(self):
        h = 1e-6
        for x in (-2.0, -0.3, 0.4, 1.7):
            numeric = (penalized_tanh(x + h) - penalized_tanh(x - h)) / (2 * h)
            assert penalized_tanh_grad(x) == pytest.approx(numeric, rel=1e-6)


class TestForward:
    def test_zero_params_give_zero_output(self):
        params = NetworkParams.zeros(5, (8, 8), 3)
        assert np.array_equal(forward(params, np.ones(5)), np.zeros(3))

    def test_hand_computed_single_path(self):
        # 1-1-1 net, unit weights, zero biases: out = tanh(0.5) for x = 0.5 > 0
        params = NetworkParams(
            weights=[np.array([[1.0]]), np.array([[1.0]])],
            biases=[np.zeros(1), np.zeros(1)],
        )
        out = forward(params, np.array([0.5]))
        assert out[0] == pytest.approx(math.tanh(0.5), abs=1e-12)
        assert out[0] == pytest.approx(0.46211715726000974, abs=1e-12)

    def test_negative_input_uses_penalized_branch(self):
        params = NetworkParams(
            weights=[np.array([[1.0]]), np.array([[1.0]])],
            biases=[np.zeros(1), np.zeros(1)],
        )
        out = forward(params, np.array([-0.5]))
        assert out[0] == pytest.approx(0.25 * math.tanh(-0.5), abs=1e-12)

    def test_gaussian_head_width(self):
        rng = np.random.default_rng(0)
        params = NetworkParams.init(5, (16, 16), 6, rng)
        out = forward(params, rng.standard_normal(5))
        mu, log_sigma = split_gaussian(out)
        assert mu.shape == (3,) and log_sigma.shape == (3,)

    def test_shape_mismatch_rejected(self):
        params = NetworkParams.zeros(5, (4,), 3)
        with pytest.raises(ValueError):
            forward(params, np.zeros(4))


class TestGaussianHead:
    def test_tiny_variance_recovers_mean(self):
        rng = np.random.default_rng(1)
        mu = np.array([3.0, -1.0, 0.5])
        q, _ = sample_gaussian_head(mu, np.full(3, -30.0), rng)
        assert np.allclose(q, mu, atol=1e-9)

    def test_fixed_noise_is_affine(self):
        q = reparameterize(np.zeros(1), np.zeros(1), np.ones(1))
        assert q[0] == 1.0

    def test_sample_variance_matches_log_sigma(self):
        rng = np.random.default_rng(2)
        log_sigma = np.full(1, 0.5)
        draws = np.array(
            [sample_gaussian_head(np.zeros(1), log_sigma, rng)[0][0] for _ in range(100_000)]
        )
        assert draws.var() == pytest.approx(math.exp(1.0), rel=0.03)

    def test_log_density_at_mode(self):
        lp = gaussian_log_density(0.0, 0.0, 0.0)
        assert lp == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)
        assert lp == pytest.approx(-0.9189385332046727, abs=1e-12)

    def test_log_density_one_sigma_offset(self):
        mode = gaussian_log_density(2.0, 2.0, 0.3)
        offset = gaussian_log_density(2.0 + math.exp(0.3), 2.0, 0.3)
        assert offset == pytest.approx(mode - 0.5, abs=1e-12)

    def test_log_density_vanishes_with_huge_sigma(self):
        assert gaussian_log_density(0.0, 0.0, 500.0) < -499.0


def finite_difference_grads(params, s, loss_of_output, h=1e-5):
    """Central differences through the forward pass for an arbitrary loss."""
    grads = params.zeros_like()
    for p_arr, g_arr in zip(params.arrays(), grads.arrays()):
        flat_p = p_arr.ravel()
        flat_g = g_arr.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            hi = loss_of_output(forward(params, s))
            flat_p[i] = orig - h
            lo = loss_of_output(forward(params, s))
            flat_p[i] = orig
            flat_g[i] = (hi - lo) / (2 * h)
    return grads


class TestBackward:
    def test_zero_upstream_gives_zero_grads(self):
        rng = np.random.default_rng(3)
        params = NetworkParams.init(4, (5,), 2, rng)
        out, cache = forward_cached(params, rng.standard_normal(4))
        grads = backward(params, cache, np.zeros_like(out))
        assert all(np.all(a == 0.0) for a in grads.arrays())

    def test_linear_net_hand_calculus(self):
        # single linear layer, loss = out^2: dL/dw = 2 * out * input
        params = NetworkParams(weights=[np.array([[1.5]])], biases=[np.zeros(1)])
        x = np.array([0.8])
        out, cache = forward_cached(params, x)
        grads = backward(params, cache, 2.0 * out)
        assert grads.weights[0][0, 0] == pytest.approx(2.0 * out[0] * x[0], abs=1e-12)
        assert grads.biases[0][0] == pytest.approx(2.0 * out[0], abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        params = NetworkParams.init(4, (2,), 2, rng)
        s = rng.standard_normal(4)
        coeff = rng.standard_normal(2)

        def loss_of_output(out):
            return float(coeff @ out)

        out, cache = forward_cached(params, s)
        analytic = backward(params, cache, coeff)
        numeric = finite_difference_grads(params, s, loss_of_output)
        for a, n in zip(analytic.arrays(), numeric.arrays()):
            assert np.allclose(a, n, rtol=1e-4, atol=1e-7)


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        params = NetworkParams(weights=[np.array([[2.0]])], biases=[np.array([1.0])])
        adam = Adam(params, learning_rate=0.1)
        adam.step(params, params.zeros_like())
        assert params.weights[0][0, 0] == 2.0
        assert params.biases[0][0] == 1.0

    def test_first_step_magnitude_is_learning_rate(self):
        params = NetworkParams(weights=[np.array([[0.0]])], biases=[np.zeros(1)])
        grads = NetworkParams(weights=[np.array([[3.0]])], biases=[np.zeros(1)])
        adam = Adam(params, learning_rate=0.1)
        adam.step(params, grads)
        # bias-corrected first step is -lr * sign(g) up to the epsilon sliver
        assert params.weights[0][0, 0] == pytest.approx(-0.1, rel=1e-6)
        assert params.weights[0][0, 0] < 0.0

    def test_two_step_trace_matches_hand_recurrence(self):
        lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
        params = NetworkParams(weights=[np.array([[0.5]])], biases=[np.zeros(1)])
        grads = NetworkParams(weights=[np.array([[1.0]])], biases=[np.zeros(1)])
        adam = Adam(params, learning_rate=lr)

        theta, m, v = 0.5, 0.0, 0.0
        for t in (1, 2):
            m = b1 * m + (1 - b1) * 1.0
            v = b2 * v + (1 - b2) * 1.0
            m_hat = m / (1 - b1**t)
            v_hat = v / (1 - b2**t)
            theta -= lr * m_hat / (math.sqrt(v_hat) + eps)
            adam.step(params, grads)
            assert params.weights[0][0, 0] == pytest.approx(theta, abs=1e-15)


class TestPolyak:
    def make_pair(self, tau):
        online = NetworkParams(weights=[np.array([[1.0]])], biases=[np.array([1.0])])
        target = NetworkParams(weights=[np.array([[0.0]])], biases=[np.array([0.0])])
        return TargetPair(online, target, tau=tau)

    def test_tau_one_copies_online(self):
        pair = self.make_pair(1.0)
        pair.polyak_update()
        assert pair.target.weights[0][0, 0] == 1.0

    def test_tau_zero_keeps_target(self):
        pair = self.make_pair(0.0)
        pair.polyak_update()
        assert pair.target.weights[0][0, 0] == 0.0

    def test_single_small_step(self):
        pair = self.make_pair(1e-4)
        pair.polyak_update()
        assert pair.target.weights[0][0, 0] == pytest.approx(1e-4, abs=1e-18)

    def test_contraction_toward_online(self):
        rng = np.random.default_rng(9)
        online = NetworkParams.init(3, (4,), 2, rng)
        target = NetworkParams.init(3, (4,), 2, rng)
        tau = 0.05
        gaps_before = [np.abs(t - o) for t, o in zip(target.arrays(), online.arrays())]
        pair = TargetPair(online, target, tau=tau)
        pair.polyak_update()
        for t, o, gap in zip(target.arrays(), online.arrays(), gaps_before):
            assert np.allclose(np.abs(t - o), (1 - tau) * gap, atol=1e-12)

    def test_target_initialized_as_copy(self):
        rng = np.random.default_rng(10)
        online = NetworkParams.init(3, (4,), 2, rng)
        pair = TargetPair(online)
        assert all(np.array_equal(t, o) for t, o in zip(pair.target.arrays(), online.arrays()))
        pair.target.weights[0][0, 0] += 1.0
        assert pair.target.weights[0][0, 0] != online.weights[0][0, 0]


class TestSerialization:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        params = NetworkParams.init(5, (7, 3), 6, rng)
        path = tmp_path / "snap.bin"
        save_params(params, path)
        loaded = load_params(path)
        assert all(np.array_equal(a, b) for a, b in zip(params.arrays(), loaded.arrays()))

    def test_header_layout_little_endian(self):
        params = NetworkParams.zeros(2, (3,), 1)
        buf = params_to_bytes(params)
        assert int.from_bytes(buf[0:4], "little") == 2  # layer count
        assert int.from_bytes(buf[4:8], "little") == 3  # first layer rows
        assert int.from_bytes(buf[8:12], "little") == 2  # first layer cols
        n_floats = 3 * 2 + 3 + 1 * 3 + 1
        assert len(buf) == 4 + 2 * 8 + 8 * n_floats

    def test_truncated_blob_rejected(self):
        params = NetworkParams.zeros(2, (3,), 1)
        buf = params_to_bytes(params)
        with pytest.raises(ValueError):
            params_from_bytes(buf + b"\x00" * 8)


class TestInit:
    def test_weight_bounds_follow_fan_in(self):
        rng = np.random.default_rng(12)
        params = NetworkParams.init(16, (64,), 4, rng)
        assert np.abs(params.weights[0]).max() <= 1 / 4.0
        assert np.abs(params.weights[1]).max() <= 1 / 8.0
        assert np.all(params.biases[0] == 0.0)

    def test_all_finite_detects_nan(self):
        params = NetworkParams.zeros(2, (2,), 1)
        assert params.all_finite()
        params.weights[0][0, 0] = math.nan
        assert not params.all_finite()
