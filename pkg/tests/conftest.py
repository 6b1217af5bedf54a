import numpy as np
import pytest

import dagrid


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile every jitted kernel once so timed tests measure steady state."""
    u = np.ones((1, 4, 4))
    grid = dagrid.SamplingGrid(np.full((4, 4), 1.25), np.full((4, 4), 2.25))
    grids = dagrid.GridSet(grid)
    for kind in ("bilinear", "nearest"):
        v = dagrid.accumulate(u, grids, kind, (4, 4))
        dagrid.slice_grid(v, grids, kind, (4, 4))
        dagrid.grid_sample(u, grid, kind)
    dagrid.accumulate_backward_grid(u, u, grids)
    cfg = dagrid.PolarConfig.for_image(4, 4, h_r=3, w_psi=8)
    slicer = dagrid.ParametricSlicer.bilinear_init(cfg, (4, 4))
    p = dagrid.polar_accumulate(u, cfg, "bilinear")
    dagrid.parametric_slice(p.values, slicer, cfg)
    dagrid.parametric_slice_backward(u, p.values, slicer, cfg)
