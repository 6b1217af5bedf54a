import math

import numpy as np
import pytest

from dagrid import as_plane, as_tensor, box_filter, gaussian_filter, mesh_grids


class TestAsTensor:
    def test_coerces_lists(self):
        t = as_tensor([[[1, 2], [3, 4]]])
        assert t.shape == (1, 2, 2)
        assert t.dtype == np.float64
        assert t.flags["C_CONTIGUOUS"]

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            as_tensor(np.zeros((2, 2)))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            as_tensor(np.zeros((1, 0, 3)))

    def test_rejects_non_finite(self):
        bad = np.ones((1, 2, 2))
        bad[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            as_tensor(bad)

    def test_plane_rank(self):
        assert as_plane(np.zeros((3, 4))).shape == (3, 4)
        with pytest.raises(ValueError):
            as_plane(np.zeros((1, 3, 4)))


class TestMeshGrids:
    def test_2x2(self):
        mesh = mesh_grids(2, 2)
        np.testing.assert_array_equal(mesh.mx, [[0, 0], [1, 1]])
        np.testing.assert_array_equal(mesh.my, [[0, 1], [0, 1]])

    def test_1x3(self):
        mesh = mesh_grids(1, 3)
        np.testing.assert_array_equal(mesh.mx, [[0, 0, 0]])
        np.testing.assert_array_equal(mesh.my, [[0, 1, 2]])

    def test_3x1(self):
        mesh = mesh_grids(3, 1)
        np.testing.assert_array_equal(mesh.mx, [[0], [1], [2]])
        np.testing.assert_array_equal(mesh.my, [[0], [0], [0]])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            mesh_grids(0, 3)


class TestBoxFilter:
    def test_radius_zero_is_identity(self):
        rng = np.random.default_rng(0)
        t = rng.standard_normal((2, 5, 5))
        out = box_filter(t, 0)
        np.testing.assert_array_equal(out, t)
        assert out is not t

    def test_constant_passes_through(self):
        t = np.full((1, 7, 9), 5.0)
        for radius in (1, 2, 3):
            np.testing.assert_allclose(box_filter(t, radius), 5.0, rtol=0, atol=1e-12)

    def test_center_impulse_hand_case(self):
        t = np.zeros((1, 3, 3))
        t[0, 1, 1] = 9.0
        out = box_filter(t, 1)
        expected = np.array(
            [
                [9 / 4, 9 / 6, 9 / 4],
                [9 / 6, 9 / 9, 9 / 6],
                [9 / 4, 9 / 6, 9 / 4],
            ]
        )
        np.testing.assert_allclose(out[0], expected, rtol=0, atol=1e-12)

    def test_rejects_negative_radius(self):
        with pytest.raises(ValueError):
            box_filter(np.zeros((1, 3, 3)), -1)


class TestGaussianFilter:
    def test_constant_passes_through(self):
        t = np.full((1, 8, 8), 2.5)
        np.testing.assert_allclose(gaussian_filter(t, 1.0), 2.5, rtol=0, atol=1e-12)

    def test_impulse_center_weight_and_mass(self):
        # away from borders the response is the outer product of the 1-D
        # kernel with itself: center value w0^2, total mass exactly 1
        t = np.zeros((1, 15, 15))
        t[0, 7, 7] = 1.0
        out = gaussian_filter(t, 1.0)
        offsets = np.arange(-3, 4, dtype=np.float64)
        kernel = np.exp(-(offsets**2) / 2.0)
        kernel /= kernel.sum()
        w0 = kernel[3]
        np.testing.assert_allclose(out[0, 7, 7], w0 * w0, rtol=1e-13)
        np.testing.assert_allclose(out.sum(), 1.0, rtol=0, atol=1e-12)

    def test_tiny_sigma_is_near_identity(self):
        i, j = np.meshgrid(np.arange(9), np.arange(9), indexing="ij")
        t = np.cos(i / 3.0)[None] + np.sin(j / 4.0)[None]
        out = gaussian_filter(t, 0.1)
        assert np.max(np.abs(out - t)) < 1e-6

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            gaussian_filter(np.zeros((1, 3, 3)), 0.0)

    def test_kernel_halfwidth_is_three_sigma(self):
        # an impulse must not reach farther than ceil(3 sigma) cells
        t = np.zeros((1, 21, 21))
        t[0, 10, 10] = 1.0
        out = gaussian_filter(t, 1.5)
        half = math.ceil(3 * 1.5)
        assert np.all(out[0, 10 + half + 1 :, :] == 0)
        assert out[0, 10 + half, 10] > 0
