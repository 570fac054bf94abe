"""Level-of-detail blending, footprint math, and perspective warping."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrnet.model import evaluate_prefix, init_mrnet
from mrnet.rendering import (
    HorizonError,
    evaluate_points,
    lambda_to_level,
    heckbert_lambda,
    load_homography,
    lod_weight_matrix,
    lod_weights,
    reconstruct,
    stage_images,
    validate_homography,
    warp_render,
    zoom_reconstruct,
)
from mrnet.sampling import axis_coords


def random_net(stages=2, width=8, channels=1, seed=3):
    return init_mrnet(
        variant="M",
        num_stages=stages,
        width=width,
        input_dim=2,
        channels=channels,
        bands=[4.0 * 2**i for i in range(stages)],
        seed=seed,
    )


def const_net(stage_values, width=8):
    """Each stage outputs a constant: zero the linear weights, set the bias."""
    net = random_net(stages=len(stage_values), width=width)
    for s, v in zip(net.stages, stage_values):
        s.linear.weights[:] = 0.0
        s.linear.bias[:] = v
    return net


class TestLodWeights:
    def test_integer_levels(self):
        assert np.array_equal(lod_weights(1.0, 7), [1, 0, 0, 0, 0, 0, 0])
        assert np.array_equal(lod_weights(3.0, 4), [1, 1, 1, 0])
        assert np.array_equal(lod_weights(7.0, 7), np.ones(7))

    def test_fractional_level(self):
        assert np.array_equal(lod_weights(2.5, 4), [1.0, 1.0, 0.5, 0.0])
        assert np.allclose(lod_weights(1.25, 3), [1.0, 0.25, 0.0])

    def test_clamped_into_range(self):
        assert np.array_equal(lod_weights(0.2, 3), [1, 0, 0])
        assert np.array_equal(lod_weights(99.0, 3), [1, 1, 1])

    @given(st.floats(min_value=-5, max_value=20, allow_nan=False))
    @settings(max_examples=50, deadline=None)
    def test_sum_equals_clamped_level(self, lam):
        w = lod_weights(lam, 6)
        assert np.all((w >= 0) & (w <= 1))
        assert np.all(np.diff(w) <= 0)  # nonincreasing across stages
        assert w.sum() == pytest.approx(np.clip(lam, 1.0, 6.0), abs=1e-12)

    def test_matrix_matches_scalar(self):
        lams = np.array([1.0, 2.5, 0.1, 8.0])
        m = lod_weight_matrix(lams, 4)
        for row, lam in zip(m, lams):
            assert np.array_equal(row, lod_weights(lam, 4))

    def test_rejects_empty_stack(self):
        with pytest.raises(ValueError):
            lod_weights(1.0, 0)


class TestEvaluatePoints:
    def test_integer_level_matches_partial_sum_bitwise(self):
        net = random_net(stages=4)
        coords = np.random.default_rng(0).uniform(-1, 1, (100, 2))
        for k in range(1, 5):
            blended = evaluate_points(net, coords, lod_weights(float(k), 4))
            partial, _ = evaluate_prefix(net, coords, k)
            assert np.array_equal(blended, partial), f"level {k}"

    def test_per_point_weight_rows(self):
        net = const_net([0.2, 0.4])
        coords = np.zeros((3, 2))
        w = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        out = evaluate_points(net, coords, w)
        assert np.allclose(out[:, 0], [0.2, 0.4, 0.6], atol=1e-15)

    def test_weight_deltas_are_linear(self):
        net = random_net(stages=2)
        coords = np.random.default_rng(1).uniform(-1, 1, (50, 2))
        lo = evaluate_points(net, coords, [1.0, 0.3])
        hi = evaluate_points(net, coords, [1.0, 0.5])
        g2 = evaluate_points(net, coords, np.eye(2)[1])
        assert np.allclose(hi - lo, 0.2 * g2, atol=1e-12)

    def test_chunking_is_invisible(self):
        net = random_net()
        coords = np.random.default_rng(2).uniform(-1, 1, (50, 2))
        w = lod_weights(1.7, 2)
        # BLAS results on different slice shapes may differ in the last ulp,
        # so chunked evaluation is equal only up to rounding
        assert np.allclose(
            evaluate_points(net, coords, w, chunk=7),
            evaluate_points(net, coords, w),
            rtol=0,
            atol=1e-12,
        )

    def test_weight_validation(self):
        net = random_net()
        coords = np.zeros((4, 2))
        with pytest.raises(ValueError):
            evaluate_points(net, coords, [1.0, 0.5, 0.5])
        with pytest.raises(ValueError):
            evaluate_points(net, coords, [1.5, 0.0])
        with pytest.raises(ValueError):
            evaluate_points(net, coords, np.full((3, 2), 0.5))

    def test_coords_validation(self):
        with pytest.raises(ValueError):
            evaluate_points(random_net(), np.zeros((4, 3)))


class TestReconstruct:
    def test_constant_stages_blend(self):
        net = const_net([0.25, 0.1])
        assert np.allclose(reconstruct(net, 8, 1.0), 0.25, atol=1e-15)
        assert np.allclose(reconstruct(net, 8, 1.5), 0.30, atol=1e-15)
        assert np.allclose(reconstruct(net, 8, 2.0), 0.35, atol=1e-15)

    def test_default_level_is_finest(self):
        net = random_net()
        assert np.array_equal(reconstruct(net, 16), reconstruct(net, 16, 2.0))

    def test_clamp_toggle(self):
        net = const_net([1.5])
        assert np.all(reconstruct(net, 4) == 1.0)
        assert np.allclose(reconstruct(net, 4, clamp=False), 1.5, atol=1e-15)

    def test_color_shape(self):
        net = random_net(channels=3)
        assert reconstruct(net, 8).shape == (8, 8, 3)

    def test_bad_res(self):
        with pytest.raises(ValueError):
            reconstruct(random_net(), 0)


class TestStageImages:
    def test_constant_bands(self):
        net = const_net([0.2, 0.4])
        imgs = stage_images(net, 8)
        assert len(imgs) == 2
        assert np.allclose(imgs[0], 0.2, atol=1e-15)
        assert np.allclose(imgs[1], 0.4, atol=1e-15)

    def test_color_shape(self):
        imgs = stage_images(random_net(channels=3), 4)
        assert imgs[0].shape == (4, 4, 3)


class TestHomographyValidation:
    def test_flat_nine_accepted(self):
        H = validate_homography([1, 0, 0, 0, 1, 0, 0, 0, 1])
        assert H.shape == (3, 3)
        assert np.array_equal(H, np.eye(3))

    def test_singular_rejected(self):
        with pytest.raises(ValueError, match="singular"):
            validate_homography(np.zeros((3, 3)))

    def test_non_finite_rejected(self):
        H = np.eye(3)
        H[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            validate_homography(H)

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError, match="3x3"):
            validate_homography(np.eye(4))

    def test_load_from_json(self, tmp_path):
        p = tmp_path / "h.json"
        p.write_text(json.dumps([[2, 0, 0], [0, 2, 0], [0, 0, 1]]))
        assert np.array_equal(load_homography(p), np.diag([2.0, 2.0, 1.0]))
        p.write_text(json.dumps({"H": [1, 0, 0, 0, 1, 0, 0, 0, 1]}))
        assert np.array_equal(load_homography(p), np.eye(3))

    def test_load_rejects_missing_key(self, tmp_path):
        p = tmp_path / "h.json"
        p.write_text(json.dumps({"matrix": [1, 0, 0, 0, 1, 0, 0, 0, 1]}))
        with pytest.raises(ValueError, match="'H'"):
            load_homography(p)


class TestHeckbertLambda:
    def test_identity_is_one_texel(self):
        lam = heckbert_lambda(np.eye(3), 10, 20, 64, 64)
        assert isinstance(lam, float)
        assert lam == pytest.approx(1.0, abs=1e-15)

    def test_uniform_scale(self):
        H = np.diag([2.0, 2.0, 1.0])
        assert heckbert_lambda(H, 0, 0, 64, 64) == pytest.approx(2.0, abs=1e-14)

    def test_anisotropic_takes_the_longer_side(self):
        H = np.diag([0.5, 3.0, 1.0])
        assert heckbert_lambda(H, 5, 5, 64, 64) == pytest.approx(3.0, abs=1e-14)

    def test_rotation_preserves_footprint(self):
        th = 0.7
        H = np.array(
            [[np.cos(th), -np.sin(th), 0.0], [np.sin(th), np.cos(th), 0.0], [0.0, 0.0, 1.0]]
        )
        xs = np.arange(8, dtype=float)
        lam = heckbert_lambda(H, xs, xs[::-1], 32, 32)
        assert np.allclose(lam, 1.0, atol=1e-12)

    def test_texture_to_screen_ratio_scales(self):
        assert heckbert_lambda(np.eye(3), 3, 3, 256, 64) == pytest.approx(4.0, abs=1e-13)

    def test_matches_complex_step_jacobian(self):
        # independent derivative oracle: complex-step differentiation of the
        # inhomogeneous projective map, exact to machine precision
        def uv(H, sx, sy):
            U = H[0, 0] * sx + H[0, 1] * sy + H[0, 2]
            V = H[1, 0] * sx + H[1, 1] * sy + H[1, 2]
            W = H[2, 0] * sx + H[2, 1] * sy + H[2, 2]
            return U / W, V / W

        rng = np.random.default_rng(12)
        res, tex = 64, 256
        checked = 0
        while checked < 100:
            H = np.eye(3) + 0.3 * rng.normal(size=(3, 3))
            if abs(np.linalg.det(H)) < 1e-3:
                continue
            x = rng.integers(0, res, size=100).astype(float)
            y = rng.integers(0, res, size=100).astype(float)
            sx = -1.0 + (2.0 * x + 1.0) / res
            sy = -1.0 + (2.0 * y + 1.0) / res
            W = H[2, 0] * sx + H[2, 1] * sy + H[2, 2]
            if np.min(np.abs(W)) < 0.3:
                continue
            h = 1e-20
            ux, vx = uv(H, sx + 1j * h, sy)
            uy, vy = uv(H, sx, sy + 1j * h)
            col_x = np.hypot(ux.imag / h, vx.imag / h)
            col_y = np.hypot(uy.imag / h, vy.imag / h)
            expected = np.maximum(col_x, col_y) * (tex / res)
            got = heckbert_lambda(H, x, y, tex, res)
            rel = np.abs(got - expected) / np.abs(expected)
            assert np.max(rel) < 1e-9
            checked += 1

    def test_horizon_raises_with_pixel_list(self):
        res = 8
        sx0 = axis_coords(res)[0]
        H = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, -sx0]])
        x, y = np.meshgrid(np.arange(res, dtype=float), np.arange(res, dtype=float))
        with pytest.raises(HorizonError, match="horizon") as ei:
            heckbert_lambda(H, x.ravel(), y.ravel(), res, res)
        assert ei.value.total == res  # the whole first column sits on the horizon
        assert len(ei.value.pixels) <= 10
        assert all(c == 0 for _, c in ei.value.pixels)

    def test_bad_resolutions(self):
        with pytest.raises(ValueError):
            heckbert_lambda(np.eye(3), 0, 0, 0, 64)


class TestFootprintToLevel:
    @pytest.mark.parametrize(
        "lam,n,expected",
        [
            (1.0, 7, 7.0),
            (2.0, 7, 6.0),
            (4.0, 7, 5.0),
            (64.0, 7, 1.0),
            (1024.0, 7, 1.0),
            (0.25, 7, 7.0),  # magnification keeps full detail
            (2.0, 1, 1.0),
        ],
    )
    def test_octave_rule(self, lam, n, expected):
        assert lambda_to_level(lam, n) == pytest.approx(expected, abs=1e-12)

    def test_halfway_octave(self):
        assert lambda_to_level(2.0**1.5, 7) == pytest.approx(5.5, abs=1e-12)

    def test_array_input(self):
        out = lambda_to_level(np.array([1.0, 2.0, 4.0]), 3)
        assert np.allclose(out, [3.0, 2.0, 1.0], atol=1e-12)

    def test_rejects_empty_stack(self):
        with pytest.raises(ValueError):
            lambda_to_level(1.0, 0)


class TestWarpRender:
    def test_identity_equals_reconstruct(self):
        net = random_net()
        for aa in (True, False):
            assert np.array_equal(
                warp_render(net, np.eye(3), 16, antialias=aa), reconstruct(net, 16)
            )

    def test_everything_outside_gives_background(self):
        net = random_net()
        H = np.array([[1.0, 0.0, 10.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        out = warp_render(net, H, 8, background=0.3)
        assert np.all(out == 0.3)

    def test_half_plane_translation(self):
        net = const_net([0.7])
        H = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        out = warp_render(net, H, 8)
        assert np.allclose(out[:, :4], 0.7, atol=1e-15)  # u = sx + 1 <= 1
        assert np.all(out[:, 4:] == 0.0)

    def test_minification_drops_to_coarse_stages(self):
        net = const_net([0.2, 0.4])
        H = np.diag([8.0, 8.0, 1.0])  # each screen pixel covers 8 texels
        sharp = warp_render(net, H, 16, antialias=False)
        smooth = warp_render(net, H, 16)
        inside = np.abs(8.0 * axis_coords(16)) <= 1.0
        assert np.allclose(sharp[np.ix_(inside, inside)], 0.6, atol=1e-15)
        assert np.allclose(smooth[np.ix_(inside, inside)], 0.2, atol=1e-15)

    def test_tex_res_controls_footprint(self):
        net = const_net([0.2, 0.4])
        # identity map but the texture is 4x the screen: lambda = 4 -> level 1
        out = warp_render(net, np.eye(3), 8, tex_res=32)
        assert np.allclose(out, 0.2, atol=1e-15)

    def test_linear_mode_constant_field_keeps_full_detail(self):
        net = const_net([0.2, 0.4])
        out = warp_render(net, np.eye(3), 8, level_mode="linear")
        assert np.allclose(out, 0.6, atol=1e-15)

    def test_bad_level_mode(self):
        with pytest.raises(ValueError, match="level_mode"):
            warp_render(random_net(), np.eye(3), 8, level_mode="cubic")

    def test_horizon_raises(self):
        res = 8
        sx0 = axis_coords(res)[0]
        H = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, -sx0]])
        with pytest.raises(HorizonError):
            warp_render(random_net(), H, res)

    def test_singular_rejected(self):
        with pytest.raises(ValueError, match="singular"):
            warp_render(random_net(), np.zeros((3, 3)), 8)

    def test_color_output_shape(self):
        out = warp_render(random_net(channels=3), np.eye(3), 8)
        assert out.shape == (8, 8, 3)


class TestZoom:
    def test_downscale_uses_coarse_stages(self):
        net = const_net([0.2, 0.4])
        out = zoom_reconstruct(net, source_res=64, out_res=32)  # footprint 2 -> level 1
        assert out.shape == (32, 32)
        assert np.allclose(out, 0.2, atol=1e-15)

    def test_upscale_keeps_full_detail(self):
        net = const_net([0.2, 0.4])
        out = zoom_reconstruct(net, source_res=64, out_res=128)
        assert np.allclose(out, 0.6, atol=1e-15)

    def test_same_size_is_plain_reconstruct(self):
        net = random_net()
        assert np.array_equal(zoom_reconstruct(net, 32, 32), reconstruct(net, 32))

    def test_bad_res(self):
        with pytest.raises(ValueError):
            zoom_reconstruct(random_net(), 0, 32)
