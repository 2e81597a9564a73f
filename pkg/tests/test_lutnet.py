import numpy as np
import pytest

from lutpolicy import lutnet
from lutpolicy.encoding import RunningStats
from lutpolicy.errors import ConfigError, DomainError, ShapeError, StateError
from lutpolicy.lutnet import (
    ActionHead,
    LutLayer,
    PolicyConfig,
    addr,
    backward,
    hard_forward,
    head_backward,
    head_forward,
    init_policy,
    policy_action,
    relaxed_forward,
    relaxed_forward_binary,
    sigmoid,
)


def brute_force_expectation(table_probs, selected_probs):
    """Oracle: explicit sum over all 2**k addresses."""
    k = selected_probs.shape[-1]
    out = 0.0
    for a in range(1 << k):
        w = 1.0
        for j in range(k):
            bit = (a >> j) & 1
            w *= selected_probs[j] if bit else 1.0 - selected_probs[j]
        out += table_probs[a] * w
    return out


def random_layer(rng, width, arity, fan_in, trainable=True):
    return LutLayer(rng.uniform(-1, 1, (width, 1 << arity)),
                    rng.uniform(0, 1, (width, arity, fan_in)),
                    trainable_interconnect=trainable)


class TestAddr:
    def test_zero(self):
        assert addr([0, 0]) == 0

    def test_lsb_first(self):
        assert addr([1, 0]) == 1
        assert addr([0, 1]) == 2

    @pytest.mark.parametrize("k", [1, 2, 4, 6])
    def test_all_ones(self, k):
        assert addr([1] * k) == (1 << k) - 1

    def test_rejects_non_bits(self):
        with pytest.raises(DomainError):
            addr([0, 2])


class TestHardForward:
    def xor_layer(self):
        # table (0,1,1,0) under LSB-first addressing = XOR
        table = np.where(np.array([[0, 1, 1, 0]]) == 1, 1.0, -1.0)
        icl = np.zeros((1, 2, 2))
        icl[0, 0, 0] = 1.0  # slot 0 -> input 0
        icl[0, 1, 1] = 1.0  # slot 1 -> input 1
        return LutLayer(table, icl)

    def test_xor(self):
        layer = self.xor_layer()
        assert hard_forward(layer, np.array([1, 0])) == 1
        assert hard_forward(layer, np.array([1, 1])) == 0
        assert hard_forward(layer, np.array([0, 0])) == 0

    def test_all_zero_table(self):
        layer = LutLayer(np.full((3, 4), -1.0), np.random.default_rng(0).uniform(0, 1, (3, 2, 5)))
        rng = np.random.default_rng(1)
        for _ in range(10):
            bits = rng.integers(0, 2, 5)
            assert not hard_forward(layer, bits).any()

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            hard_forward(self.xor_layer(), np.array([1, 0, 1]))


class TestRelaxedForward:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        for k in (1, 2, 3, 6):
            layer = random_layer(rng, width=5, arity=k, fan_in=11)
            probs = rng.uniform(0, 1, 11)
            out = relaxed_forward(layer, probs)
            sel = layer.selections()
            tp = sigmoid(layer.table_logits)
            for i in range(5):
                expected = brute_force_expectation(tp[i], probs[sel[i]])
                assert out[i] == pytest.approx(expected, rel=1e-12)

    def test_xor_half(self):
        table = np.where(np.array([[0, 1, 1, 0]]) == 1, 50.0, -50.0)
        icl = np.zeros((1, 2, 2))
        icl[0, 0, 0] = 1.0
        icl[0, 1, 1] = 1.0
        layer = LutLayer(table, icl)
        out = relaxed_forward(layer, np.array([0.5, 0.5]))
        assert out[0] == pytest.approx(0.5, abs=1e-12)

    def test_k1_linear_interpolation(self):
        # table probs (0, 1) -> identity in p
        layer = LutLayer(np.array([[-800.0, 800.0]]), np.array([[[1.0]]]))
        out = relaxed_forward(layer, np.array([0.3]))
        assert out[0] == pytest.approx(0.3, abs=1e-12)

    def test_domain_error(self):
        rng = np.random.default_rng(3)
        layer = random_layer(rng, 2, 2, 4)
        with pytest.raises(DomainError):
            relaxed_forward(layer, np.array([0.5, -0.1, 0.2, 0.9]))

    def test_binary_fast_path_matches_general(self):
        rng = np.random.default_rng(4)
        layer = random_layer(rng, width=16, arity=6, fan_in=40)
        bits = rng.integers(0, 2, (20, 40)).astype(np.float64)
        np.testing.assert_allclose(relaxed_forward_binary(layer, bits),
                                   relaxed_forward(layer, bits), atol=1e-15)

    @pytest.mark.parametrize("arity", [2, 6])
    def test_binarized_relaxed_equals_hard(self, arity):
        # logits at +-50 make sigmoid exactly 1.0 / ~2e-22 in float64
        rng = np.random.default_rng(5)
        widths = [64, 64]
        fan_in = 30
        layers = []
        for w in widths:
            layer = random_layer(rng, w, arity, fan_in)
            layer.table_logits = np.where(layer.table_logits >= 0, 50.0, -50.0)
            layers.append(layer)
            fan_in = w
        bits = rng.integers(0, 2, (256, 30)).astype(np.float64)
        soft = bits
        hard = bits.astype(np.uint8)
        for layer in layers:
            soft = relaxed_forward(layer, np.clip(soft, 0, 1))
            hard = hard_forward(layer, hard)
        assert np.abs(soft - hard).max() < 1e-9


class TestBackward:
    def test_requires_cache(self):
        rng = np.random.default_rng(6)
        layer = random_layer(rng, 3, 2, 5)
        with pytest.raises(StateError):
            backward(layer, np.zeros(3))
        relaxed_forward(layer, rng.uniform(0, 1, 5), needs_grad=False)
        with pytest.raises(StateError):
            backward(layer, np.zeros(3))

    def test_k1_unit_input_gradient(self):
        layer = LutLayer(np.array([[-800.0, 800.0]]), np.array([[[1.0]]]))
        relaxed_forward(layer, np.array([0.3]))
        g = backward(layer, np.array([1.0]))
        assert g.input_probs[0] == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("arity", [2, 4, 6])
    def test_table_gradient_fd(self, arity):
        rng = np.random.default_rng(7)
        layer = random_layer(rng, 6, arity, 13)
        probs = rng.uniform(0.05, 0.95, (3, 13))
        upstream = rng.normal(size=(3, 6))
        relaxed_forward(layer, probs)
        g = backward(layer, upstream)
        h = 1e-5
        flat = layer.table_logits.ravel()
        for idx in rng.choice(flat.size, min(25, flat.size), replace=False):
            orig = flat[idx]
            flat[idx] = orig + h
            up = float(np.sum(upstream * relaxed_forward(layer, probs)))
            flat[idx] = orig - h
            dn = float(np.sum(upstream * relaxed_forward(layer, probs)))
            flat[idx] = orig
            fd = (up - dn) / (2 * h)
            assert g.table_logits.ravel()[idx] == pytest.approx(fd, rel=1e-5, abs=1e-10)
        relaxed_forward(layer, probs)

    @pytest.mark.parametrize("arity", [2, 6])
    def test_input_gradient_fd(self, arity):
        rng = np.random.default_rng(8)
        layer = random_layer(rng, 6, arity, 9)
        probs = rng.uniform(0.05, 0.95, (2, 9))
        upstream = rng.normal(size=(2, 6))
        relaxed_forward(layer, probs)
        g = backward(layer, upstream)
        h = 1e-6
        for b in range(2):
            for c in range(9):
                pp = probs.copy()
                pp[b, c] += h
                up = float(np.sum(upstream * relaxed_forward(layer, pp)))
                pp[b, c] -= 2 * h
                dn = float(np.sum(upstream * relaxed_forward(layer, pp)))
                fd = (up - dn) / (2 * h)
                assert g.input_probs[b, c] == pytest.approx(fd, rel=1e-4, abs=1e-8)

    def test_interconnect_gradient_vs_mixture_surrogate(self):
        # with dominant logits the softmax mixture sits at the hard point, so
        # the straight-through gradient matches FD of the mixture surrogate
        rng = np.random.default_rng(9)
        width, arity, fan_in = 4, 3, 7
        layer = random_layer(rng, width, arity, fan_in)
        layer.interconnect_logits += 20.0 * (
            layer.interconnect_logits == layer.interconnect_logits.max(axis=2, keepdims=True))
        probs = rng.uniform(0.1, 0.9, (2, fan_in))
        upstream = rng.normal(size=(2, width))

        def surrogate(icl):
            z = icl - icl.max(axis=2, keepdims=True)
            soft = np.exp(z)
            soft /= soft.sum(axis=2, keepdims=True)
            mixed = np.einsum("bc,wjc->bwj", probs, soft)
            tp = sigmoid(layer.table_logits)
            total = 0.0
            for b in range(2):
                for w in range(width):
                    total += upstream[b, w] * brute_force_expectation(tp[w], mixed[b, w])
            return total

        relaxed_forward(layer, probs)
        g = backward(layer, upstream)
        h = 1e-5
        flat = layer.interconnect_logits.ravel()
        for idx in rng.choice(flat.size, 20, replace=False):
            orig = flat[idx]
            flat[idx] = orig + h
            up = surrogate(layer.interconnect_logits)
            flat[idx] = orig - h
            dn = surrogate(layer.interconnect_logits)
            flat[idx] = orig
            fd = (up - dn) / (2 * h)
            assert g.interconnect_logits.ravel()[idx] == pytest.approx(fd, rel=1e-3, abs=1e-9)

    def test_argmax_invariance_under_scaling(self):
        rng = np.random.default_rng(10)
        layer = random_layer(rng, 8, 4, 12)
        bits = rng.integers(0, 2, (50, 12))
        base = hard_forward(layer, bits)
        layer.interconnect_logits = layer.interconnect_logits * 2.0
        np.testing.assert_array_equal(base, hard_forward(layer, bits))
        layer.interconnect_logits = layer.interconnect_logits + 3.7
        np.testing.assert_array_equal(base, hard_forward(layer, bits))

    def test_efd_backend_k1_matches_exact(self):
        layer = LutLayer(np.array([[-0.4, 0.9]]), np.array([[[1.0]]]))
        probs = np.array([[0.3]])
        relaxed_forward(layer, probs)
        exact = backward(layer, np.array([[1.0]]), backend="exact")
        relaxed_forward(layer, probs)
        efd = backward(layer, np.array([[1.0]]), backend="efd")
        assert efd.input_probs[0, 0] == pytest.approx(exact.input_probs[0, 0], rel=1e-12)

    def test_efd_backend_shapes(self):
        rng = np.random.default_rng(11)
        layer = random_layer(rng, 5, 6, 20)
        probs = rng.uniform(0, 1, (4, 20))
        relaxed_forward(layer, probs)
        g = backward(layer, rng.normal(size=(4, 5)), backend="efd")
        assert g.table_logits.shape == layer.table_logits.shape
        assert g.interconnect_logits.shape == layer.interconnect_logits.shape
        assert np.isfinite(g.input_probs).all()


@pytest.mark.skipif(not lutnet.USE_KERNELS, reason="numba kernels unavailable")
class TestKernelAgainstReference:
    def test_forward_and_backward_match(self):
        rng = np.random.default_rng(17)
        layer = random_layer(rng, width=32, arity=6, fan_in=50)
        probs = rng.uniform(0, 1, (64, 50))
        upstream = rng.normal(size=(64, 32))
        out_k = relaxed_forward(layer, probs)
        g_k = backward(layer, upstream)
        lutnet.USE_KERNELS = False
        try:
            out_r = relaxed_forward(layer, probs)
            g_r = backward(layer, upstream)
        finally:
            lutnet.USE_KERNELS = True
        np.testing.assert_allclose(out_k, out_r, atol=1e-13)
        np.testing.assert_allclose(g_k.table_logits, g_r.table_logits, atol=1e-13)
        np.testing.assert_allclose(g_k.input_probs, g_r.input_probs, atol=1e-13)
        np.testing.assert_allclose(g_k.interconnect_logits, g_r.interconnect_logits,
                                   atol=1e-13)

    def test_kernel_runs_are_identical(self):
        rng = np.random.default_rng(18)
        layer = random_layer(rng, width=16, arity=5, fan_in=21)
        probs = rng.uniform(0, 1, (32, 21))
        a = relaxed_forward(layer, probs)
        b = relaxed_forward(layer, probs)
        np.testing.assert_array_equal(a, b)


class TestHead:
    def head(self, d_act=2, g=4, alpha_p=0.0, beta=0.0):
        return ActionHead(alpha_p=np.full(d_act, float(alpha_p)),
                          beta=np.full(d_act, float(beta)), group_size=g)

    def test_all_ones(self):
        h = self.head(alpha_p=np.log(3.0), beta=0.5)
        out = head_forward(np.ones(8), h)
        np.testing.assert_allclose(out, 3.0 * 0.5 + 0.5)

    def test_all_zeros(self):
        h = self.head(alpha_p=np.log(3.0), beta=0.5)
        out = head_forward(np.zeros(8), h)
        np.testing.assert_allclose(out, -3.0 * 0.5 + 0.5)

    def test_half_set(self):
        h = self.head(beta=0.25)
        out = head_forward(np.array([1, 1, 0, 0, 1, 0, 1, 0], dtype=float), h)
        np.testing.assert_allclose(out, 0.25)

    def test_partition_must_cover(self):
        with pytest.raises(ConfigError):
            head_forward(np.ones(7), self.head())

    def test_logit_range_bound(self):
        rng = np.random.default_rng(12)
        h = self.head(d_act=3, g=5, alpha_p=0.7, beta=-0.2)
        alpha = np.exp(0.7)
        for _ in range(200):
            bits = rng.integers(0, 2, 15).astype(float)
            out = head_forward(bits, h)
            assert np.all(out >= -0.2 - alpha / 2 - 1e-12)
            assert np.all(out <= -0.2 + alpha / 2 + 1e-12)

    def test_backward_fd(self):
        rng = np.random.default_rng(13)
        h = self.head(d_act=2, g=3, alpha_p=-0.3, beta=0.1)
        x = rng.uniform(0, 1, (4, 6))
        up = rng.normal(size=(4, 2))
        cache = []
        head_forward(x, h, cache_out=cache)
        d_final, d_alpha_p, d_beta = head_backward(h, cache[0], up)
        eps = 1e-6

        def loss():
            return float(np.sum(up * head_forward(x, h)))

        for i in range(2):
            h.alpha_p[i] += eps
            l_up = loss()
            h.alpha_p[i] -= 2 * eps
            l_dn = loss()
            h.alpha_p[i] += eps
            assert d_alpha_p[i] == pytest.approx((l_up - l_dn) / (2 * eps), rel=1e-6)
            h.beta[i] += eps
            l_up = loss()
            h.beta[i] -= 2 * eps
            l_dn = loss()
            h.beta[i] += eps
            assert d_beta[i] == pytest.approx((l_up - l_dn) / (2 * eps), rel=1e-6)
        xp = x.copy()
        xp[1, 2] += eps
        l_up = float(np.sum(up * head_forward(xp, h)))
        xp[1, 2] -= 2 * eps
        l_dn = float(np.sum(up * head_forward(xp, h)))
        assert d_final[1, 2] == pytest.approx((l_up - l_dn) / (2 * eps), rel=1e-6)


class TestInitPolicy:
    def test_default_shape(self):
        cfg = PolicyConfig()
        assert (cfg.n_layers, cfg.width, cfg.arity, cfg.bits) == (2, 1024, 6, 63)

    def test_padding(self):
        pol = init_policy(d_in=2, d_act=6, config=PolicyConfig(width=1024, bits=5), seed=0)
        assert pol.layers[-1].width == 1026
        assert pol.head.group_size == 171

    def test_seed_reproducibility(self):
        cfg = PolicyConfig(width=16, bits=5)
        a = init_policy(3, 2, cfg, seed=42)
        b = init_policy(3, 2, cfg, seed=42)
        for (_, pa), (_, pb) in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa, pb)

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            init_policy(3, 2, PolicyConfig(arity=7), seed=0)
        with pytest.raises(ConfigError):
            init_policy(3, 2, PolicyConfig(bits=6), seed=0)


class TestPolicyEndToEnd:
    def small_policy(self, seed=0, squash="tanh"):
        pol = init_policy(d_in=2, d_act=2,
                          config=PolicyConfig(width=8, bits=5, squash=squash), seed=seed)
        pol.stats.count = 10
        pol.stats.mean = np.array([0.3, -0.2])
        pol.stats.m2 = np.array([4.0, 9.0]) * pol.stats.count
        return pol

    def test_action_bounded_by_tanh(self):
        pol = self.small_policy()
        rng = np.random.default_rng(14)
        for _ in range(50):
            a = policy_action(pol, rng.normal(size=2) * 10)
            assert np.all(np.abs(a) < 1.0)

    def test_tanh_saturates_at_extreme_logits(self):
        pol = self.small_policy()
        assert pol.squash(np.array([1e6, -1e6])).tolist() == [1.0, -1.0]

    def test_zero_beta_symmetric_bits_zero_action(self):
        pol = self.small_policy()
        pol.set_mode("hard")
        # force every table to output its address parity -> equal group halves
        # simpler: all-one tables and beta chosen so l = 0
        for layer in pol.layers:
            layer.table_logits[:] = 1.0
        pol.head.beta[:] = -np.exp(pol.head.alpha_p) * 0.5
        a = policy_action(pol, np.array([0.0, 0.0]))
        np.testing.assert_allclose(a, 0.0, atol=1e-12)

    def test_obs_dim_check(self):
        pol = self.small_policy()
        with pytest.raises(ShapeError):
            policy_action(pol, np.zeros(3))

    def test_full_policy_gradient_fd(self):
        pol = self.small_policy(seed=3)
        rng = np.random.default_rng(15)
        obs = rng.normal(size=(4, 2))
        xhat = pol.normalize(obs)
        up = rng.normal(size=(4, 2))

        def loss():
            return float(np.sum(up * pol.logits_relaxed(xhat, needs_grad=False)))

        pol.logits_relaxed(xhat, needs_grad=True)
        grads = pol.gradients_as_dict(pol.backward(up))
        h = 1e-5
        for name, arr in pol.parameters():
            if "interconnect" in name:
                continue
            flat = arr.ravel()
            gflat = grads[name].ravel()
            for idx in rng.choice(flat.size, min(10, flat.size), replace=False):
                orig = flat[idx]
                flat[idx] = orig + h
                l_up = loss()
                flat[idx] = orig - h
                l_dn = loss()
                flat[idx] = orig
                fd = (l_up - l_dn) / (2 * h)
                assert gflat[idx] == pytest.approx(fd, rel=1e-4, abs=1e-9), name

    def test_hard_mode_matches_relaxed_with_binarized_tables(self):
        pol = self.small_policy(seed=5)
        for layer in pol.layers:
            layer.table_logits = np.where(layer.table_logits >= 0, 50.0, -50.0)
        rng = np.random.default_rng(16)
        obs = rng.normal(size=(20, 2))
        xhat = pol.normalize(obs)
        pol.set_mode("hard")
        hard = pol.logits(xhat)
        pol.set_mode("relaxed")
        soft = pol.logits(xhat)
        np.testing.assert_allclose(hard, soft, atol=1e-9)
