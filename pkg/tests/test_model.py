"""Architecture: initialization, variant wiring, summation, parameter counts."""

import numpy as np
import pytest

from mrnet.model import (
    MRNet,
    StageParams,
    count_params,
    evaluate_prefix,
    forward,
    forward_pass,
    init_mrnet,
    stage_outputs,
)
from mrnet.nn import DenseLayer

OMEGA = 30.0


def tiny_net(variant, stages=2, width=4, channels=1, seed=0, wiring="concat"):
    bands = [4.0 * 2**i for i in range(stages)]
    return init_mrnet(variant, stages, width, 2, channels, bands, seed=seed, wiring=wiring)


def unrolled_m_net(net, coord):
    """Scalar-loop oracle: evaluate a 2-stage M network one neuron at a time."""

    def lin(layer, vec):
        return [
            sum(layer.weights[i, j] * vec[j] for j in range(len(vec))) + layer.bias[i]
            for i in range(layer.out_dim)
        ]

    s1, s2 = net.stages
    a1 = [np.sin(z) for z in lin(s1.first, coord)]
    h1 = [np.sin(OMEGA * z) for z in lin(s1.hidden[0], a1)]
    g1 = lin(s1.linear, h1)

    a2 = [np.sin(z) for z in lin(s2.first, coord)]
    u2 = a2 + h1 if net.wiring == "concat" else [a + h for a, h in zip(a2, h1)]
    h2 = [np.sin(OMEGA * z) for z in lin(s2.hidden[0], u2)]
    g2 = lin(s2.linear, h2)
    return np.array(g1), np.array(g2)


class TestInit:
    def test_first_layer_weights_stay_in_band(self):
        bands = [4, 8, 16, 32, 64, 128, 256]
        net = init_mrnet("M", 7, 96, 2, 1, bands, seed=0)
        for s, b in zip(net.stages, bands):
            assert np.all(np.abs(s.first.weights) < b)

    def test_first_layer_bias_zero(self):
        net = tiny_net("M", 3)
        for s in net.stages:
            assert np.array_equal(s.first.bias, np.zeros(net.width))

    def test_band_sampler_fills_its_range(self):
        net = init_mrnet("S", 1, 50_000, 2, 1, [4.0], seed=1)
        w = net.stages[0].first.weights
        assert w.size == 100_000
        assert np.abs(w).max() > 3.99 and np.abs(w).max() < 4.0

    def test_hidden_and_linear_init_range(self):
        net = tiny_net("M", 2, width=16)
        for i, s in enumerate(net.stages, start=1):
            for layer in [*s.hidden, s.linear]:
                bound = np.sqrt(6.0 / layer.in_dim) / OMEGA
                assert np.all(np.abs(layer.weights) < bound)
                assert np.array_equal(layer.bias, np.zeros(layer.out_dim))

    def test_same_seed_bit_identical(self):
        a = tiny_net("M", 3, seed=9)
        b = tiny_net("M", 3, seed=9)
        for key, arr in a.params().items():
            assert np.array_equal(arr, b.params()[key])

    def test_different_seed_differs(self):
        a = tiny_net("L", 2, seed=1)
        b = tiny_net("L", 2, seed=2)
        assert not np.array_equal(a.stages[0].first.weights, b.stages[0].first.weights)

    def test_non_increasing_bands_rejected(self):
        with pytest.raises(ValueError):
            init_mrnet("M", 2, 4, 2, 1, [8.0, 8.0])

    def test_band_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            init_mrnet("M", 3, 4, 2, 1, [4.0, 8.0])

    def test_bad_variant_rejected(self):
        with pytest.raises(ValueError):
            init_mrnet("X", 1, 4, 2, 1, [4.0])

    def test_float32_option(self):
        net = tiny_net("M", 2)
        assert net.dtype == np.float64
        net32 = init_mrnet("M", 2, 4, 2, 1, [4, 8], dtype=np.float32)
        assert net32.dtype == np.float32
        out = forward(net32, np.zeros((3, 2), dtype=np.float32))
        assert out.dtype == np.float32

    def test_s_variant_has_no_hidden_layers(self):
        net = tiny_net("S", 2)
        assert all(not s.hidden for s in net.stages)

    def test_m_wiring_dims(self):
        concat = tiny_net("M", 3, width=8)
        assert concat.stages[0].hidden[0].in_dim == 8
        assert concat.stages[1].hidden[0].in_dim == 16
        assert concat.stages[2].hidden[0].in_dim == 16
        add = tiny_net("M", 3, width=8, wiring="add")
        assert all(s.hidden[0].in_dim == 8 for s in add.stages)


class TestStageParams:
    def test_alpha_range_enforced(self):
        layer = DenseLayer(weights=np.zeros((2, 2)), bias=np.zeros(2))
        with pytest.raises(ValueError):
            StageParams(first=layer, hidden=[], linear=layer, band_limit=4.0,
                        omega_hidden=30.0, alpha=1.5)

    def test_band_positive(self):
        layer = DenseLayer(weights=np.zeros((2, 2)), bias=np.zeros(2))
        with pytest.raises(ValueError):
            StageParams(first=layer, hidden=[], linear=layer, band_limit=0.0,
                        omega_hidden=30.0)


class TestStageOutputs:
    def test_zero_linear_gives_bias_constant(self):
        net = tiny_net("M", 2)
        for s in net.stages:
            s.linear.weights[:] = 0.0
            s.linear.bias[:] = 0.25
        outs, _ = stage_outputs(net, np.random.default_rng(0).uniform(-1, 1, (9, 2)))
        for g in outs:
            assert np.allclose(g, 0.25)

    def test_one_stage_m_equals_l_equals_plain_mlp(self):
        m = init_mrnet("M", 1, 8, 2, 1, [4.0], seed=7)
        l = init_mrnet("L", 1, 8, 2, 1, [4.0], seed=7)
        coords = np.random.default_rng(1).uniform(-1, 1, (11, 2))
        assert np.array_equal(forward(m, coords), forward(l, coords))
        s = m.stages[0]
        a = np.sin(coords @ s.first.weights.T + s.first.bias)
        h = np.sin(OMEGA * (a @ s.hidden[0].weights.T + s.hidden[0].bias))
        plain = h @ s.linear.weights.T + s.linear.bias
        assert np.allclose(forward(m, coords), plain, rtol=0, atol=1e-15)

    @pytest.mark.parametrize("wiring", ["concat", "add"])
    def test_two_stage_m_matches_scalar_unroll(self, wiring):
        net = tiny_net("M", 2, width=4, seed=3, wiring=wiring)
        coord = [0.3, -0.7]
        outs, _ = stage_outputs(net, np.array([coord]))
        g1, g2 = unrolled_m_net(net, coord)
        assert np.allclose(outs[0][0], g1, rtol=1e-13, atol=1e-15)
        assert np.allclose(outs[1][0], g2, rtol=1e-13, atol=1e-15)

    def test_s_stage_is_sum_of_sinusoids(self):
        net = init_mrnet("S", 1, 6, 2, 1, [4.0], seed=5)
        s = net.stages[0]
        coords = np.random.default_rng(2).uniform(-1, 1, (7, 2))
        oracle = np.zeros((7, 1))
        for n in range(7):
            acc = s.linear.bias[0]
            for k in range(6):
                phase = s.first.weights[k, 0] * coords[n, 0] + s.first.weights[k, 1] * coords[n, 1] + s.first.bias[k]
                acc += s.linear.weights[0, k] * np.sin(phase)
            oracle[n, 0] = acc
        assert np.allclose(forward(net, coords), oracle, rtol=1e-13, atol=1e-15)


class TestForward:
    def test_zero_weights_zero_output(self):
        net = tiny_net("M", 3)
        coords = np.random.default_rng(0).uniform(-1, 1, (5, 2))
        assert np.array_equal(forward(net, coords, [0, 0, 0]), np.zeros((5, 1)))

    def test_e1_selects_first_stage(self):
        net = tiny_net("L", 3)
        coords = np.random.default_rng(0).uniform(-1, 1, (5, 2))
        outs, _ = stage_outputs(net, coords)
        assert np.array_equal(forward(net, coords, [1, 0, 0]), outs[0])

    def test_fractional_recomposition(self):
        net = tiny_net("M", 4)
        coords = np.random.default_rng(0).uniform(-1, 1, (5, 2))
        outs, _ = stage_outputs(net, coords)
        want = outs[0] + outs[1] + 0.5 * outs[2]
        assert np.allclose(forward(net, coords, [1, 1, 0.5, 0]), want, rtol=0, atol=1e-15)

    def test_all_ones_equals_exact_stage_sum(self):
        net = tiny_net("M", 3, width=8)
        coords = np.random.default_rng(4).uniform(-1, 1, (1000, 2))
        outs, _ = stage_outputs(net, coords)
        acc = np.zeros_like(outs[0])
        for g in outs:
            acc += g
        assert np.array_equal(forward(net, coords), acc)

    def test_weight_vector_validation(self):
        net = tiny_net("M", 2)
        coords = np.zeros((1, 2))
        with pytest.raises(ValueError):
            forward(net, coords, [1.0])
        with pytest.raises(ValueError):
            forward(net, coords, [1.0, 1.5])
        with pytest.raises(ValueError):
            forward(net, coords, [-0.1, 1.0])

    def test_continuity_in_weights(self):
        net = tiny_net("M", 3)
        coords = np.random.default_rng(5).uniform(-1, 1, (50, 2))
        outs, _ = stage_outputs(net, coords)
        eps = 1e-4
        w1 = np.array([1.0, 0.6, 0.2])
        w2 = w1 - eps
        bound = eps * sum(np.abs(g).max() for g in outs)
        diff = np.abs(forward(net, coords, w1) - forward(net, coords, w2)).max()
        assert diff <= bound + 1e-12

    def test_zero_weight_hides_linear_layer_only_for_m(self):
        net = tiny_net("M", 3, seed=11)
        coords = np.random.default_rng(6).uniform(-1, 1, (8, 2))
        w = [1.0, 0.0, 1.0]
        base = forward(net, coords, w)
        net.stages[1].linear.weights += 123.0
        net.stages[1].linear.bias += 7.0
        assert np.array_equal(forward(net, coords, w), base)
        net.stages[1].hidden[0].weights += 0.1  # feeds stage 3, so this must show
        assert not np.array_equal(forward(net, coords, w), base)

    def test_zero_weight_hides_whole_stage_for_l(self):
        net = tiny_net("L", 3, seed=11)
        coords = np.random.default_rng(6).uniform(-1, 1, (8, 2))
        w = [1.0, 0.0, 1.0]
        base = forward(net, coords, w)
        st = net.stages[1]
        st.first.weights += 1.0
        st.hidden[0].weights += 1.0
        st.linear.weights += 1.0
        assert np.array_equal(forward(net, coords, w), base)

    def test_coords_shape_validation(self):
        net = tiny_net("M", 2)
        with pytest.raises(ValueError):
            forward(net, np.zeros((3, 5)))

    def test_prefix_matches_truncated_weights(self):
        net = tiny_net("M", 4, seed=2)
        coords = np.random.default_rng(7).uniform(-1, 1, (20, 2))
        for k in range(5):
            w = [1.0] * k + [0.0] * (4 - k)
            total, _ = evaluate_prefix(net, coords, k)
            assert np.array_equal(total, forward(net, coords, w))


class TestCountParams:
    def test_s_net_closed_form(self):
        net = init_mrnet("S", 1, 4, 2, 1, [4.0])
        assert count_params(net) == (2 * 4 + 4) + (4 * 1 + 1) == 17

    def test_m_net_concat_stage_formula(self):
        net = init_mrnet("M", 7, 96, 2, 1, [4, 8, 16, 32, 64, 128, 256])
        stage1 = (2 * 96 + 96) + (96 * 96 + 96) + (96 * 1 + 1)
        later = (2 * 96 + 96) + (192 * 96 + 96) + (96 * 1 + 1)
        assert stage1 == 9697 and later == 18913
        assert count_params(net) == 9697 + 6 * 18913 == 123175

    def test_l_net_independent_stages(self):
        net = init_mrnet("L", 7, 96, 2, 1, [4, 8, 16, 32, 64, 128, 256])
        assert count_params(net) == 7 * 9697 == 67879

    def test_count_matches_param_dict(self):
        for variant in ("S", "L", "M"):
            net = tiny_net(variant, 3, width=5, channels=3)
            assert count_params(net) == sum(a.size for a in net.params().values())


class TestMRNetValidation:
    def test_empty_stage_list_rejected(self):
        with pytest.raises(ValueError):
            MRNet(variant="M", stages=[], input_dim=2, channels=1, width=4)

    def test_forward_pass_upto(self):
        net = tiny_net("M", 3)
        coords = np.zeros((2, 2))
        tr = forward_pass(net, coords, upto=2)
        assert len(tr.stages) == 2
        with pytest.raises(ValueError):
            forward_pass(net, coords, upto=4)
