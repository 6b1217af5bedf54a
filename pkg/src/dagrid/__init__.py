"""Directed accumulator grids: differentiable scatter/gather image operators.

The core pair is accumulate (scatter source values to grid-addressed target
cells) and slice_grid (gather them back); grid_sample is the classical
gather with a target-shaped grid.  On top of these sit the polar
accumulator and the circular accumulator, plus hand-derived backward
passes verified against finite differences.
"""

from .accumulate import (
    AccumulatorGrid,
    GridSet,
    SamplingGrid,
    accumulate,
    accumulate_backward_grid,
    accumulate_backward_input,
    accumulate_weights,
    grid_sample,
    normalize,
    slice_backward,
    slice_grid,
)
from .checks import GRAD_OPS, KINK_MARGIN, adjoint_trials, margin_uniform, run_grad_trials
from .circular import (
    CircularAccumulation,
    CircularConfig,
    GradientField,
    circular_accumulate,
    circular_grids,
    detect_circle_center,
    sobel_gradient_field,
)
from .gradcheck import GradReport, OracleError, check, finite_difference
from .io import (
    DgtParseError,
    PgmParseError,
    read_dgt,
    read_pgm,
    synth,
    write_dgt,
    write_pgm,
)
from .kernels import KernelKind, Tap, UnsupportedKernelError, as_kernel, kernel_weight, taps
from .parallel import get_num_threads, set_num_threads
from .polar import (
    ParametricSlicer,
    PolarConfig,
    parametric_slice,
    parametric_slice_backward,
    polar_accumulate,
    polar_accumulate_raw,
    polar_grid,
    polar_roundtrip_filter,
    polar_sample,
    polar_slice,
    sector_variance,
)
from .tensor import MeshGrids, as_plane, as_tensor, box_filter, gaussian_filter, mesh_grids

__version__ = "0.1.0"

__all__ = [
    "AccumulatorGrid",
    "CircularAccumulation",
    "CircularConfig",
    "DgtParseError",
    "GRAD_OPS",
    "GradReport",
    "GradientField",
    "GridSet",
    "KINK_MARGIN",
    "KernelKind",
    "MeshGrids",
    "OracleError",
    "ParametricSlicer",
    "PgmParseError",
    "PolarConfig",
    "SamplingGrid",
    "Tap",
    "UnsupportedKernelError",
    "accumulate",
    "accumulate_backward_grid",
    "accumulate_backward_input",
    "accumulate_weights",
    "adjoint_trials",
    "as_kernel",
    "as_plane",
    "as_tensor",
    "box_filter",
    "check",
    "circular_accumulate",
    "circular_grids",
    "detect_circle_center",
    "finite_difference",
    "gaussian_filter",
    "get_num_threads",
    "grid_sample",
    "kernel_weight",
    "margin_uniform",
    "mesh_grids",
    "normalize",
    "run_grad_trials",
    "parametric_slice",
    "parametric_slice_backward",
    "polar_accumulate",
    "polar_accumulate_raw",
    "polar_grid",
    "polar_roundtrip_filter",
    "polar_sample",
    "polar_slice",
    "read_dgt",
    "read_pgm",
    "sector_variance",
    "set_num_threads",
    "slice_backward",
    "slice_grid",
    "sobel_gradient_field",
    "synth",
    "taps",
    "write_dgt",
    "write_pgm",
    "__version__",
]
