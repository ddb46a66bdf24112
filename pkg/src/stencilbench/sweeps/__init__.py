"""Sweep engines: serial oracle, plain threading, pipeline, wavefront."""

from ..errors import PlanError
from ..kernels import JACOBI
from .plan import (
    BARRIER_AUTO,
    PIPELINE,
    SERIAL,
    THREADED,
    VARIANTS,
    WAVEFRONT,
    SweepPlan,
    WavefrontConfig,
    choose_block_size,
    partition_blocks,
    wavefront_working_set_bytes,
)
from .serial import run_serial
from .threaded import run_pipeline_gs, run_threaded_jacobi
from .wavefront import (
    GroupBoundary,
    TempRing,
    run_wavefront,
    run_wavefront_gs,
    run_wavefront_jacobi,
)

__all__ = [
    "BARRIER_AUTO",
    "PIPELINE",
    "SERIAL",
    "THREADED",
    "VARIANTS",
    "WAVEFRONT",
    "SweepPlan",
    "WavefrontConfig",
    "GroupBoundary",
    "TempRing",
    "choose_block_size",
    "partition_blocks",
    "run",
    "run_pipeline_gs",
    "run_serial",
    "run_threaded_jacobi",
    "run_wavefront",
    "run_wavefront_gs",
    "run_wavefront_jacobi",
    "wavefront_working_set_bytes",
]


def run(plan, g, placement=None, stats=None, instrument=False):
    """Execute a plan on a grid and return the result grid.

    The threaded baseline of a Gauss-Seidel kernel is its pipeline-parallel
    form (a k-slab split would break the lexicographic order), so
    variant="threaded" with a GS kernel dispatches to run_pipeline_gs.
    """
    if plan.variant == SERIAL:
        return run_serial(plan, g, stats=stats)
    if plan.variant == THREADED:
        if plan.kernel == JACOBI:
            return run_threaded_jacobi(plan, g, placement=placement, stats=stats)
        return run_pipeline_gs(plan, g, placement=placement, stats=stats)
    if plan.variant == PIPELINE:
        return run_pipeline_gs(plan, g, placement=placement, stats=stats)
    if plan.variant == WAVEFRONT:
        return run_wavefront(
            plan, g, placement=placement, stats=stats, instrument=instrument
        )
    raise PlanError(f"unknown variant {plan.variant!r}")
