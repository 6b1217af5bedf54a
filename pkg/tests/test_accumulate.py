import numpy as np
import pytest

import oracles
from dagrid import (
    AccumulatorGrid,
    GridSet,
    KernelKind,
    SamplingGrid,
    UnsupportedKernelError,
    accumulate,
    accumulate_backward_grid,
    accumulate_backward_input,
    accumulate_weights,
    check,
    finite_difference,
    get_num_threads,
    grid_sample,
    mesh_grids,
    normalize,
    set_num_threads,
    slice_backward,
    slice_grid,
)
from dagrid.checks import adjoint_trials


def identity_grid(h, w):
    mesh = mesh_grids(h, w)
    return SamplingGrid(mesh.mx, mesh.my)


def random_grids(rng, n, h, w, target_h, target_w, slack=1.0):
    # slack > 0 pushes some taps out of bounds to exercise the drop rule
    return GridSet(
        [
            SamplingGrid(
                rng.uniform(-slack, target_h - 1 + slack, (h, w)),
                rng.uniform(-slack, target_w - 1 + slack, (h, w)),
            )
            for _ in range(n)
        ]
    )


class TestAccumulate:
    def test_identity_grid_reproduces_input(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal((2, 6, 5))
        grids = GridSet(identity_grid(6, 5))
        out = accumulate(u, grids, KernelKind.BILINEAR, (6, 5))
        np.testing.assert_array_equal(out, u)

    def test_all_to_one_cell(self):
        u = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        grid = SamplingGrid(np.zeros((2, 2)), np.zeros((2, 2)))
        out = accumulate(u, GridSet(grid), KernelKind.NEAREST, (1, 1))
        np.testing.assert_array_equal(out, [[[10.0]]])

    def test_matches_oracle(self):
        rng = np.random.default_rng(1)
        u = rng.standard_normal((1, 3, 3))
        grids = random_grids(rng, 2, 3, 3, 3, 3)
        for kind in ("bilinear", "nearest"):
            fast = accumulate(u, grids, kind, (3, 3))
            slow = oracles.oracle_accumulate(
                u, [(g.gx, g.gy) for g in grids], kind, (3, 3)
            )
            assert np.max(np.abs(fast - slow)) < 1e-12

    def test_linearity_in_input(self):
        rng = np.random.default_rng(2)
        u1 = rng.standard_normal((2, 5, 4))
        u2 = rng.standard_normal((2, 5, 4))
        grids = random_grids(rng, 2, 5, 4, 6, 6)
        combo = accumulate(3.0 * u1 - 2.0 * u2, grids, KernelKind.BILINEAR, (6, 6))
        parts = 3.0 * accumulate(u1, grids, KernelKind.BILINEAR, (6, 6)) - 2.0 * accumulate(
            u2, grids, KernelKind.BILINEAR, (6, 6)
        )
        np.testing.assert_allclose(combo, parts, rtol=0, atol=1e-12)

    def test_mass_conservation_in_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            u = rng.standard_normal((1, 8, 8)) + 2.0
            grids = random_grids(rng, 1, 8, 8, 9, 7, slack=0.0)
            out = accumulate(u, grids, KernelKind.BILINEAR, (9, 7))
            rel = abs(out.sum() - u.sum()) / abs(u.sum())
            assert rel < 1e-9

    def test_out_of_bounds_taps_drop(self):
        u = np.ones((1, 2, 2))
        grid = SamplingGrid(np.full((2, 2), -5.0), np.full((2, 2), -5.0))
        out = accumulate(u, GridSet(grid), KernelKind.BILINEAR, (3, 3))
        np.testing.assert_array_equal(out, np.zeros((1, 3, 3)))

    def test_half_mass_at_negative_edge(self):
        u = np.ones((1, 1, 1))
        grid = SamplingGrid(np.array([[-0.5]]), np.array([[0.0]]))
        out = accumulate(u, GridSet(grid), KernelKind.BILINEAR, (2, 2))
        assert out[0, 0, 0] == pytest.approx(0.5)
        assert out.sum() == pytest.approx(0.5)

    def test_deterministic_across_thread_counts(self):
        rng = np.random.default_rng(4)
        u = rng.standard_normal((1, 32, 32))
        grids = random_grids(rng, 2, 32, 32, 32, 32)
        before = get_num_threads()
        try:
            set_num_threads(1)
            single = accumulate(u, grids, KernelKind.BILINEAR, (32, 32))
            set_num_threads(4)
            multi = accumulate(u, grids, KernelKind.BILINEAR, (32, 32))
        finally:
            set_num_threads(before)
        np.testing.assert_array_equal(single, multi)

    def test_rejects_mismatched_grid_shapes(self):
        with pytest.raises(ValueError):
            SamplingGrid(np.zeros((2, 2)), np.zeros((3, 2)))

    def test_rejects_non_finite_grid(self):
        with pytest.raises(ValueError):
            SamplingGrid(np.full((2, 2), np.inf), np.zeros((2, 2)))


class TestAccumulateWeights:
    def test_identity_grid_gives_ones(self):
        grids = GridSet(identity_grid(4, 4))
        out = accumulate_weights(grids, KernelKind.BILINEAR, (4, 4), (4, 4))
        np.testing.assert_array_equal(out, np.ones((1, 4, 4)))

    def test_all_to_one_counts_contributors(self):
        grid = SamplingGrid(np.zeros((2, 2)), np.zeros((2, 2)))
        out = accumulate_weights(GridSet(grid), KernelKind.NEAREST, (2, 2), (1, 1))
        np.testing.assert_array_equal(out, [[[4.0]]])

    def test_total_weight_is_pixel_count_when_in_bounds(self):
        rng = np.random.default_rng(5)
        grids = random_grids(rng, 1, 10, 10, 8, 8, slack=0.0)
        out = accumulate_weights(grids, KernelKind.BILINEAR, (10, 10), (8, 8))
        assert abs(out.sum() - 100.0) < 1e-9


class TestNormalize:
    def test_weighted_average(self):
        acc = AccumulatorGrid(np.array([[[6.0]]]), np.array([[[2.0]]]), False)
        out = normalize(acc)
        np.testing.assert_allclose(out.values, [[[3.0]]], rtol=1e-7)
        assert out.normalized

    def test_zero_weight_cell_stays_zero(self):
        acc = AccumulatorGrid(np.zeros((1, 2, 2)), np.zeros((1, 2, 2)), False)
        out = normalize(acc)
        assert np.all(np.isfinite(out.values))
        np.testing.assert_array_equal(out.values, np.zeros((1, 2, 2)))

    def test_homogeneous_two_source_average(self):
        # (w1 v1, w1) + (w2 v2, w2) = (1*1 + 3*3, 1 + 3) -> 10/4
        v = np.array([[[1.0, 3.0]]])
        w = np.array([[[1.0, 3.0]]])
        grids = GridSet(SamplingGrid(np.zeros((1, 2)), np.zeros((1, 2))))
        values = accumulate(v * w, grids, KernelKind.NEAREST, (1, 1))
        weights = accumulate(w, grids, KernelKind.NEAREST, (1, 1))
        out = normalize(AccumulatorGrid(values, weights, False))
        np.testing.assert_allclose(out.values, [[[2.5]]], rtol=1e-7)

    def test_rejects_bad_epsilon(self):
        acc = AccumulatorGrid(np.ones((1, 1, 1)), np.ones((1, 1, 1)), False)
        with pytest.raises(ValueError):
            normalize(acc, epsilon=0.0)

    def test_rejects_double_normalize(self):
        acc = AccumulatorGrid(np.ones((1, 1, 1)), np.ones((1, 1, 1)), False)
        with pytest.raises(ValueError):
            normalize(normalize(acc))


class TestSliceGrid:
    def test_identity_grid(self):
        rng = np.random.default_rng(6)
        v = rng.standard_normal((1, 5, 5))
        grids = GridSet(identity_grid(5, 5))
        np.testing.assert_array_equal(slice_grid(v, grids, KernelKind.BILINEAR, (5, 5)), v)

    def test_single_grid_equals_grid_sample(self):
        rng = np.random.default_rng(7)
        v = rng.standard_normal((2, 4, 6))
        grid = SamplingGrid(rng.uniform(0, 3, (5, 5)), rng.uniform(0, 5, (5, 5)))
        sliced = slice_grid(v, GridSet(grid), KernelKind.BILINEAR, (5, 5))
        np.testing.assert_array_equal(sliced, grid_sample(v, grid, KernelKind.BILINEAR))

    def test_matches_oracle(self):
        rng = np.random.default_rng(8)
        v = rng.standard_normal((1, 3, 3))
        grids = random_grids(rng, 2, 4, 4, 3, 3)
        for kind in ("bilinear", "nearest"):
            fast = slice_grid(v, grids, kind, (4, 4))
            slow = oracles.oracle_slice(v, [(g.gx, g.gy) for g in grids], kind)
            assert np.max(np.abs(fast - slow)) < 1e-12

    def test_rejects_wrong_source_shape(self):
        v = np.zeros((1, 3, 3))
        grids = GridSet(identity_grid(4, 4))
        with pytest.raises(ValueError):
            slice_grid(v, grids, KernelKind.BILINEAR, (5, 5))


class TestGridSample:
    def test_identity(self):
        rng = np.random.default_rng(9)
        u = rng.standard_normal((1, 4, 4))
        np.testing.assert_array_equal(
            grid_sample(u, identity_grid(4, 4), KernelKind.BILINEAR), u
        )

    def test_midpoint_average(self):
        u = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        grid = SamplingGrid(np.full((2, 2), 0.5), np.full((2, 2), 0.5))
        out = grid_sample(u, grid, KernelKind.BILINEAR)
        np.testing.assert_allclose(out, np.full((1, 2, 2), 2.5), rtol=0, atol=1e-15)

    def test_matches_oracle(self):
        rng = np.random.default_rng(10)
        u = rng.standard_normal((2, 3, 3))
        grid = SamplingGrid(rng.uniform(-1, 3, (4, 4)), rng.uniform(-1, 3, (4, 4)))
        for kind in ("bilinear", "nearest"):
            fast = grid_sample(u, grid, kind)
            slow = oracles.oracle_grid_sample(u, grid.gx, grid.gy, kind)
            assert np.max(np.abs(fast - slow)) < 1e-12


class TestAdjointIdentity:
    def test_inner_products_agree(self):
        rng = np.random.default_rng(11)
        result = adjoint_trials(rng, instances=20, max_size=16)
        assert result["instances"] == 20
        assert result["max_rel_err"] < 1e-10


class TestAccumulateBackwardInput:
    def test_identity_adjoint(self):
        grids = GridSet(identity_grid(3, 3))
        d_v = np.ones((1, 3, 3))
        out = accumulate_backward_input(d_v, grids, KernelKind.BILINEAR, (3, 3))
        np.testing.assert_array_equal(out, np.ones((1, 3, 3)))

    def test_single_grid_is_grid_sample(self):
        rng = np.random.default_rng(12)
        d_v = rng.standard_normal((1, 5, 5))
        grid = SamplingGrid(rng.uniform(0, 4, (3, 3)), rng.uniform(0, 4, (3, 3)))
        out = accumulate_backward_input(d_v, GridSet(grid), KernelKind.BILINEAR, (3, 3))
        np.testing.assert_array_equal(out, grid_sample(d_v, grid, KernelKind.BILINEAR))

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(13)
        u = rng.standard_normal((1, 4, 4))
        grids = random_grids(rng, 2, 4, 4, 4, 4)
        r = rng.standard_normal((1, 4, 4))

        def loss(x):
            return float(np.sum(accumulate(x, grids, KernelKind.BILINEAR, (4, 4)) * r))

        analytic = accumulate_backward_input(r, grids, KernelKind.BILINEAR, (4, 4))
        numeric = finite_difference(loss, u.copy())
        report = check("accumulate/input", analytic, numeric)
        assert report.passed, str(report)


class TestAccumulateBackwardGrid:
    def test_zero_input_gives_zero_gradient(self):
        u = np.zeros((1, 3, 3))
        grids = GridSet(identity_grid(3, 3))
        d_v = np.ones((1, 3, 3))
        grads = accumulate_backward_grid(d_v, u, grids)
        np.testing.assert_array_equal(grads[0].gx, np.zeros((3, 3)))
        np.testing.assert_array_equal(grads[0].gy, np.zeros((3, 3)))

    def test_hand_derived_tent_slope(self):
        # source value 1 splat at grid row 0.5 of a 2-row target with
        # d_v = [1, 0]: moving toward row 1 sheds weight on row 0, so
        # the row-coordinate gradient is exactly -1
        u = np.ones((1, 1, 1))
        grids = GridSet(SamplingGrid(np.array([[0.5]]), np.array([[0.0]])))
        d_v = np.array([[[1.0], [0.0]]])
        grads = accumulate_backward_grid(d_v, u, grids)
        assert grads[0].gx[0, 0] == -1.0
        assert grads[0].gy[0, 0] == 0.0

    def test_nearest_is_unsupported(self):
        u = np.ones((1, 2, 2))
        grids = GridSet(identity_grid(2, 2))
        with pytest.raises(UnsupportedKernelError):
            accumulate_backward_grid(u, u, grids, KernelKind.NEAREST)


class TestSliceBackward:
    def test_identity(self):
        rng = np.random.default_rng(14)
        d_u = rng.standard_normal((1, 4, 4))
        grids = GridSet(identity_grid(4, 4))
        np.testing.assert_array_equal(
            slice_backward(d_u, grids, KernelKind.BILINEAR, (4, 4)), d_u
        )

    def test_all_to_one_concentrates_sum(self):
        rng = np.random.default_rng(15)
        d_u = rng.standard_normal((1, 3, 3))
        grid = SamplingGrid(np.zeros((3, 3)), np.zeros((3, 3)))
        out = slice_backward(d_u, GridSet(grid), KernelKind.NEAREST, (1, 1))
        np.testing.assert_allclose(out, [[[d_u.sum()]]], rtol=0, atol=1e-12)
