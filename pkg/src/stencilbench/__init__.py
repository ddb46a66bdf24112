"""Multicore-aware iterative stencil smoothers with wavefront temporal
blocking, plus verification and benchmarking harnesses."""

__version__ = "0.1.0"

from .grid import Grid3D, InitPattern, create_grid, flat_index
from .kernels import (
    GS_INTERLEAVED,
    GS_NAIVE,
    JACOBI,
    KERNELS,
    StencilCoeffs,
    gs_line_update,
    gs_line_update_interleaved,
    jacobi_line_update,
)
from .sweeps import SweepPlan, WavefrontConfig, run, run_serial

__all__ = [
    "GS_INTERLEAVED",
    "GS_NAIVE",
    "JACOBI",
    "KERNELS",
    "Grid3D",
    "InitPattern",
    "StencilCoeffs",
    "SweepPlan",
    "WavefrontConfig",
    "__version__",
    "create_grid",
    "flat_index",
    "gs_line_update",
    "gs_line_update_interleaved",
    "jacobi_line_update",
    "run",
    "run_serial",
]
