import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from munet.mu_layer import (
    CostVolume,
    assemble_motion_input,
    build_cost_volume,
    compute_motion,
    project_features,
    soft_argmin_displacement,
    soft_argmin_grad,
    uncertainty_map,
)
from munet.oracles import conv2d_loop, cosine_cost_volume_loop, hard_argmax_displacement, max_over_window_loop
from munet.synthetic import shifted_features
from munet.tensor_core import ShapeError, numeric_jacobian

features = arrays(np.float64, (3, 4, 5), elements=st.floats(-5, 5, allow_nan=False))


class TestProjectFeatures:
    def test_averaging_row(self):
        f = np.random.default_rng(0).standard_normal((4, 3, 3))
        out = project_features(f, np.full((1, 4, 1, 1), 0.25))
        np.testing.assert_allclose(out[0], f.mean(axis=0), atol=1e-15)

    def test_zero_weights(self):
        f = np.random.default_rng(1).standard_normal((8, 3, 3))
        assert np.all(project_features(f, np.zeros((2, 8, 1, 1)), np.zeros(2)) == 0)

    def test_matches_conv_oracle(self):
        rng = np.random.default_rng(2)
        f = rng.standard_normal((8, 5, 4))
        w, b = rng.standard_normal((2, 8, 1, 1)), rng.standard_normal(2)
        np.testing.assert_allclose(project_features(f, w, b), conv2d_loop(f, w, b), atol=1e-12)

    def test_rejects_indivisible_dimension(self):
        with pytest.raises(ShapeError):
            project_features(np.zeros((6, 2, 2)), np.zeros((1, 6, 1, 1)))


class TestCostVolume:
    def test_constant_features_give_one(self):
        f = np.ones((3, 5, 5)) * np.array([1.0, -2.0, 0.5])[:, None, None]
        c = build_cost_volume(f, f, (3, 3)).values
        np.testing.assert_allclose(c[c != -1.0], 1.0, atol=1e-12)

    def test_orthogonal_features_give_zero(self):
        a = np.zeros((2, 4, 4))
        b = np.zeros((2, 4, 4))
        a[0], b[1] = 1.0, 3.0
        c = build_cost_volume(a, b, (3, 3)).values
        inside = np.ones((3, 3, 4, 4), bool)
        inside[0, :, :, 0] = inside[2, :, :, -1] = inside[:, 0, 0, :] = inside[:, 2, -1, :] = False
        assert np.all(c[inside] == 0.0) and np.all(c[~inside] == -1.0)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(3)
        f_t, f_prev = rng.standard_normal((2, 8, 6, 6))
        c = build_cost_volume(f_t, f_prev, (3, 3))
        np.testing.assert_allclose(c.values, cosine_cost_volume_loop(f_t, f_prev, (3, 3)), atol=1e-12)

    def test_asymmetric_window_layout(self):
        rng = np.random.default_rng(4)
        f_t, f_prev = rng.standard_normal((2, 3, 5, 7))
        c = build_cost_volume(f_t, f_prev, (5, 3))
        assert c.values.shape == (5, 3, 5, 7) and c.radius == (2, 1)
        np.testing.assert_allclose(c.values, cosine_cost_volume_loop(f_t, f_prev, (5, 3)), atol=1e-12)

    def test_horizontal_offset_lives_on_first_axis(self):
        rng = np.random.default_rng(5)
        f_t, f_prev = shifted_features(rng, 6, 8, 8, (2, 0))
        c = build_cost_volume(f_t, f_prev, (5, 5))
        # slot (u=2, v=0) is exact for every query whose match is in view
        np.testing.assert_allclose(c.values[4, 2, :, :6], 1.0, atol=1e-12)

    def test_zero_features_do_not_produce_nan(self):
        c = build_cost_volume(np.zeros((2, 3, 3)), np.zeros((2, 3, 3)), (3, 3))
        assert np.all(np.isfinite(c.values))

    def test_rejects_shape_mismatch_and_even_window(self):
        with pytest.raises(ShapeError):
            build_cost_volume(np.zeros((2, 3, 3)), np.zeros((2, 3, 4)), (3, 3))
        with pytest.raises(ValueError):
            build_cost_volume(np.zeros((2, 3, 3)), np.zeros((2, 3, 3)), (4, 3))

    @settings(max_examples=40, deadline=None)
    @given(features, features)
    def test_cosine_bound(self, a, b):
        c = build_cost_volume(a, b, (3, 5)).values
        assert c.min() >= -1 - 1e-9 and c.max() <= 1 + 1e-9

    @settings(max_examples=40, deadline=None)
    @given(features)
    def test_zero_offset_identity(self, f):
        c = build_cost_volume(f, f, (3, 3)).values
        nonzero = np.linalg.norm(f, axis=0) > 1e-3
        np.testing.assert_allclose(c[1, 1][nonzero], 1.0, atol=1e-6)


class TestSoftArgmin:
    def test_uniform_volume_gives_zero(self):
        d = soft_argmin_displacement(CostVolume(np.full((5, 5, 3, 3), 0.2)))
        np.testing.assert_allclose(d, 0.0, atol=1e-15)

    def test_saturated_peak(self):
        v = np.zeros((5, 5, 2, 2))
        v[4, 3] = 50.0
        d = soft_argmin_displacement(CostVolume(v))
        np.testing.assert_allclose(d[0], 2.0, atol=1e-8)
        np.testing.assert_allclose(d[1], 1.0, atol=1e-8)

    def test_shifted_texture_recovers_offset(self):
        rng = np.random.default_rng(6)
        f_t, f_prev = shifted_features(rng, 8, 12, 12, (2, 1))
        cost = build_cost_volume(f_t, f_prev, (5, 5))
        hard = hard_argmax_displacement(cost.values)
        assert np.all(hard[0, 2:-2, 2:-2] == 2) and np.all(hard[1, 2:-2, 2:-2] == 1)
        d = soft_argmin_displacement(cost, beta=400.0)
        assert np.abs(d[0, 2:-2, 2:-2] - 2).max() < 0.35
        assert np.abs(d[1, 2:-2, 2:-2] - 1).max() < 0.35

    def test_negative_sign_prefers_worst_match(self):
        v = np.zeros((3, 3, 1, 1))
        v[0, 0] = -50.0
        d = soft_argmin_displacement(CostVolume(v), sign=-1)
        np.testing.assert_allclose(d[:, 0, 0], [-1.0, -1.0], atol=1e-8)

    def test_rejects_bad_sign(self):
        with pytest.raises(ValueError):
            soft_argmin_displacement(CostVolume(np.zeros((3, 3, 1, 1))), sign=0)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, (3, 5, 2, 2), elements=st.floats(-1, 1)), st.floats(-10, 10))
    def test_shift_invariance_and_bound(self, v, c):
        d = soft_argmin_displacement(CostVolume(v))
        np.testing.assert_allclose(soft_argmin_displacement(CostVolume(v + c)), d, atol=1e-12)
        assert np.all(np.abs(d[0]) <= 1 + 1e-12) and np.all(np.abs(d[1]) <= 2 + 1e-12)


class TestSoftArgminGrad:
    def test_uniform_volume(self):
        cost = CostVolume(np.zeros((3, 5, 2, 2)))
        up = np.zeros((2, 2, 2))
        up[0] = 1.0
        g = soft_argmin_grad(cost, up)
        du, _ = cost.offsets()
        np.testing.assert_allclose(g, np.broadcast_to((du / 15)[:, :, None, None], g.shape), atol=1e-15)

    def test_saturated_volume_is_flat(self):
        v = np.zeros((5, 5, 3, 3))
        v[1, 3] = 50.0
        g = soft_argmin_grad(CostVolume(v), np.ones((2, 3, 3)))
        assert np.abs(g).max() < 1e-6

    @pytest.mark.parametrize("sign,beta", [(1, 1.0), (-1, 1.0), (1, 7.5)])
    def test_matches_finite_differences(self, sign, beta):
        rng = np.random.default_rng(7)
        values = rng.uniform(-1, 1, (3, 3, 4, 4))
        up = rng.standard_normal((2, 4, 4))
        num = numeric_jacobian(
            lambda v: np.sum(up * soft_argmin_displacement(CostVolume(v), sign, beta)), values
        ).reshape(values.shape)
        ana = soft_argmin_grad(CostVolume(values), up, sign, beta)
        assert np.abs(num - ana).max() <= 1e-6 * np.abs(num).max()

    def test_rejects_bad_upstream(self):
        with pytest.raises(ShapeError):
            soft_argmin_grad(CostVolume(np.zeros((3, 3, 2, 2))), np.zeros((2, 3, 3)))


class TestUncertainty:
    def test_identical_constant_frames(self):
        f = np.ones((2, 4, 4))
        np.testing.assert_allclose(uncertainty_map(build_cost_volume(f, f, (3, 3))), 1.0, atol=1e-12)

    def test_constant_volume(self):
        assert np.all(uncertainty_map(CostVolume(np.full((3, 3, 2, 2), 0.3))) == 0.3)

    def test_matches_loop_max_exactly(self):
        v = np.random.default_rng(8).uniform(-1, 1, (5, 3, 4, 6))
        np.testing.assert_array_equal(uncertainty_map(CostVolume(v)), max_over_window_loop(v))

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, (3, 3, 2, 3), elements=st.floats(-1, 1)))
    def test_max_dominance(self, v):
        assert np.all(uncertainty_map(CostVolume(v))[0] >= v)


class TestMotionInput:
    def test_zero_displacement_unit_confidence(self):
        out = assemble_motion_input(np.zeros((2, 3, 3)), np.ones((1, 3, 3)), (25, 25))
        np.testing.assert_array_equal(out[:, 1, 1], [0.0, 0.0, 1.0])

    def test_radius_normalisation(self):
        disp = np.zeros((2, 2, 2))
        disp[0] = 12.0
        assert np.all(assemble_motion_input(disp, np.zeros((1, 2, 2)), (25, 25))[0] == 1.0)

    def test_matches_concatenation(self):
        rng = np.random.default_rng(9)
        disp, unc = rng.standard_normal((2, 4, 4)), rng.standard_normal((1, 4, 4))
        out = assemble_motion_input(disp, unc, (5, 7))
        np.testing.assert_array_equal(out[0], disp[0] / 2)
        np.testing.assert_array_equal(out[1], disp[1] / 3)
        np.testing.assert_array_equal(out[2], unc[0])

    def test_compute_motion_bundle_invariants(self):
        rng = np.random.default_rng(10)
        f_t, f_prev = rng.standard_normal((2, 4, 6, 6))
        bundle, cost = compute_motion(f_t, f_prev, (5, 5), beta=20.0)
        assert np.all(np.abs(bundle.motion_input[:2]) <= 1 + 1e-12)
        assert np.all(np.abs(bundle.uncertainty) <= 1 + 1e-9)
        np.testing.assert_array_equal(bundle.motion_input[2], bundle.uncertainty[0])
        assert cost.window == (5, 5)
