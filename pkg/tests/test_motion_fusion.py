import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from munet.motion_fusion import (
    MotionNetParams,
    MsamParams,
    additive_fuse,
    attention_map,
    motion_net_forward,
    motion_net_init,
    msam_fuse,
)
from munet.oracles import motion_net_loop
from munet.tensor_core import ShapeError

TABLE_1 = [(3, 3, 7), (3, 16, 1), (16, 16, 3), (16, 32, 1), (32, 32, 3), (32, 32, 1), (32, 64, 3), (64, 1024, 1)]


def _msam_loop(f_s, f_m, weight, bias):
    d, h, w = f_s.shape
    out = np.empty_like(f_s)
    for y in range(h):
        for x in range(w):
            z = bias[0] + sum(weight[0, c, 0, 0] * f_m[c, y, x] for c in range(f_m.shape[0]))
            a = 1.0 / (1.0 + np.exp(-z))
            for c in range(d):
                out[c, y, x] = f_s[c, y, x] * a + f_s[c, y, x]
    return out


class TestMotionNetInit:
    def test_table_conformance(self):
        p = motion_net_init(1024, seed=0)
        assert p.layer_shapes() == TABLE_1
        assert p.weights[-1].shape == (1024, 64, 1, 1)
        assert [b.shape for b in p.biases] == [(c_out,) for _, c_out, _ in TABLE_1]

    def test_small_output_dim(self):
        assert motion_net_init(16, seed=0).layer_shapes()[-1] == (64, 16, 1)

    def test_same_seed_is_bit_identical(self):
        a, b = motion_net_init(32, seed=5), motion_net_init(32, seed=5)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights + a.biases, b.weights + b.biases))

    def test_seeds_differ(self):
        a, b = motion_net_init(32, seed=0), motion_net_init(32, seed=1)
        assert not np.array_equal(a.weights[0], b.weights[0])

    def test_fan_in_bound(self):
        p = motion_net_init(8, seed=2)
        for w, (c_in, _, k) in zip(p.weights, p.layer_shapes()):
            assert np.abs(w).max() <= 1 / np.sqrt(c_in * k * k)

    def test_rejects_non_positive_dim(self):
        with pytest.raises(ValueError):
            motion_net_init(0)

    def test_dict_round_trip_and_bad_chain(self):
        p = motion_net_init(8, seed=3)
        q = MotionNetParams.from_dict(p.to_dict())
        assert all(np.array_equal(x, y) for x, y in zip(p.weights, q.weights))
        bad = p.to_dict()
        bad["motion.2.weight"] = np.zeros((16, 16, 5, 5))
        with pytest.raises(ShapeError):
            MotionNetParams.from_dict(bad)


class TestMotionNetForward:
    def test_output_shape(self):
        out = motion_net_forward(motion_net_init(24, seed=0), np.zeros((3, 5, 7)))
        assert out.shape == (24, 5, 7)

    def test_zero_input_zero_bias(self):
        p = motion_net_init(8, seed=0)
        p.biases = [np.zeros_like(b) for b in p.biases]
        assert np.all(motion_net_forward(p, np.zeros((3, 4, 4))) == 0)

    def test_matches_layer_oracle(self):
        p = motion_net_init(8, seed=0)
        x = np.random.default_rng(0).standard_normal((3, 4, 4))
        np.testing.assert_allclose(motion_net_forward(p, x), motion_net_loop(p.weights, p.biases, x), atol=1e-10)

    def test_deterministic(self):
        p = motion_net_init(8, seed=1)
        x = np.random.default_rng(1).standard_normal((3, 6, 6))
        assert np.array_equal(motion_net_forward(p, x), motion_net_forward(p, x))

    def test_not_a_single_linear_map(self):
        p = motion_net_init(8, seed=2)
        x = np.random.default_rng(2).standard_normal((3, 4, 4))
        zero = motion_net_forward(p, np.zeros_like(x))
        lin = motion_net_forward(p, x) + motion_net_forward(p, -x) - 2 * zero
        assert np.abs(lin).max() > 1e-6

    def test_rejects_wrong_channel_count(self):
        with pytest.raises(ShapeError):
            motion_net_forward(motion_net_init(8), np.zeros((2, 4, 4)))


class TestMsam:
    def test_zero_params_scale_by_one_and_a_half(self):
        rng = np.random.default_rng(3)
        f_s, f_m = rng.standard_normal((2, 4, 3, 3))
        np.testing.assert_allclose(msam_fuse(f_s, f_m, MsamParams.zeros(4)), 1.5 * f_s, atol=1e-15)

    def test_negative_bias_saturates_to_identity(self):
        rng = np.random.default_rng(4)
        f_s, f_m = rng.standard_normal((2, 4, 3, 3))
        p = MsamParams(np.zeros((1, 4, 1, 1)), np.array([-100.0]))
        np.testing.assert_allclose(msam_fuse(f_s, f_m, p), f_s, atol=1e-10)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(5)
        f_s, f_m = rng.standard_normal((2, 4, 3, 3))
        p = MsamParams(rng.standard_normal((1, 4, 1, 1)), rng.standard_normal(1))
        np.testing.assert_allclose(msam_fuse(f_s, f_m, p), _msam_loop(f_s, f_m, p.weight, p.bias), atol=1e-12)

    def test_attention_zero_params(self):
        assert np.all(attention_map(np.ones((3, 2, 2)), MsamParams.zeros(3)) == 0.5)

    def test_attention_saturates(self):
        f_m = np.zeros((3, 2, 2))
        f_m[0] = 1.0
        w = np.zeros((1, 3, 1, 1))
        w[0, 0] = 100.0
        assert np.all(attention_map(f_m, MsamParams(w, np.zeros(1))) > 1 - 1e-12)

    def test_rejects_mismatch(self):
        with pytest.raises(ShapeError):
            msam_fuse(np.zeros((4, 3, 3)), np.zeros((4, 2, 3)), MsamParams.zeros(4))
        with pytest.raises(ShapeError):
            attention_map(np.zeros((5, 3, 3)), MsamParams.zeros(4))

    @settings(max_examples=40, deadline=None)
    @given(
        arrays(np.float64, (3, 3, 3), elements=st.floats(0, 10)),
        arrays(np.float64, (2, 3, 3), elements=st.floats(-5, 5)),
        arrays(np.float64, (3,), elements=st.floats(-3, 3)),
    )
    def test_bounds_and_reconstruction(self, f_s, f_m, wb):
        p = MsamParams(wb[:2].reshape(1, 2, 1, 1), wb[2:])
        out = msam_fuse(f_s, f_m, p)
        assert np.all(out >= f_s) and np.all(out <= 2 * f_s)
        a = attention_map(f_m, p)
        assert np.all((a > 0) & (a < 1))
        nz = f_s > 1e-3
        recon = np.broadcast_to(out / np.where(nz, f_s, 1.0) - 1.0, f_s.shape)
        np.testing.assert_allclose(recon[nz], np.broadcast_to(a, f_s.shape)[nz], atol=1e-9)


class TestAdditiveFuse:
    def test_zero_motion(self):
        f = np.random.default_rng(6).standard_normal((2, 3, 3))
        assert np.array_equal(additive_fuse(f, np.zeros_like(f)), f)

    def test_cancellation(self):
        f = np.random.default_rng(7).standard_normal((2, 3, 3))
        assert np.all(additive_fuse(f, -f) == 0)

    def test_matches_addition(self):
        a, b = np.random.default_rng(8).standard_normal((2, 2, 3, 3))
        assert np.array_equal(additive_fuse(a, b), a + b)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ShapeError):
            additive_fuse(np.zeros((2, 3, 3)), np.zeros((3, 3, 3)))
