import numpy as np
import pytest

from stencilbench.errors import PartitionError, PlanError
from stencilbench.grid import InitPattern, create_grid
from stencilbench.kernels import StencilCoeffs
from stencilbench.sweeps import (
    SweepPlan,
    run,
    run_pipeline_gs,
    run_serial,
    run_threaded_jacobi,
)

RANDOM = InitPattern.seeded_random(42)
JC = StencilCoeffs(0.5, 0.1)
GC = StencilCoeffs(0.0, 1.0 / 6.0)


def serial_result(kernel, n, iters, coeffs):
    return run_serial(SweepPlan(kernel, "serial", iters, coeffs=coeffs),
                      create_grid(n, n, n, RANDOM))


def test_threaded_single_worker_equals_serial():
    want = serial_result("jacobi", 12, 3, JC)
    got = run_threaded_jacobi(SweepPlan("jacobi", "threaded", 3, threads=1, coeffs=JC),
                              create_grid(12, 12, 12, RANDOM))
    assert np.array_equal(want.data, got.data)


def test_threaded_four_workers_equals_serial():
    want = serial_result("jacobi", 34, 8, JC)
    got = run_threaded_jacobi(SweepPlan("jacobi", "threaded", 8, threads=4, coeffs=JC),
                              create_grid(34, 34, 34, RANDOM))
    assert np.array_equal(want.data, got.data)


def test_threaded_partition_error():
    with pytest.raises(PartitionError):
        run_threaded_jacobi(SweepPlan("jacobi", "threaded", 1, threads=5),
                            create_grid(4, 4, 4, RANDOM))


def test_threaded_rejects_gs_kernel():
    with pytest.raises(PlanError):
        run_threaded_jacobi(SweepPlan("gs-naive", "threaded", 1, threads=2),
                            create_grid(8, 8, 8, RANDOM))


def test_threaded_zero_iters():
    g = create_grid(6, 6, 6, RANDOM)
    before = g.data.copy()
    out = run_threaded_jacobi(SweepPlan("jacobi", "threaded", 0, threads=2), g)
    assert np.array_equal(out.data, before)


def test_pipeline_single_worker_equals_serial():
    want = serial_result("gs-naive", 12, 2, GC)
    got = run_pipeline_gs(SweepPlan("gs-naive", "pipeline", 2, threads=1, coeffs=GC),
                          create_grid(12, 12, 12, RANDOM))
    assert np.array_equal(want.data, got.data)


@pytest.mark.parametrize("kernel", ["gs-naive", "gs-interleaved"])
def test_pipeline_four_workers_equals_serial(kernel):
    want = serial_result(kernel, 34, 4, GC)
    got = run_pipeline_gs(SweepPlan(kernel, "pipeline", 4, threads=4, coeffs=GC),
                          create_grid(34, 34, 34, RANDOM))
    assert np.array_equal(want.data, got.data)


def test_pipeline_partition_error():
    with pytest.raises(PartitionError):
        run_pipeline_gs(SweepPlan("gs-naive", "pipeline", 1, threads=5),
                        create_grid(8, 4, 8, RANDOM))


def test_pipeline_stage_count():
    g = create_grid(10, 10, 10, RANDOM)
    stats = {}
    run_pipeline_gs(SweepPlan("gs-naive", "pipeline", 1, threads=4, coeffs=GC),
                    g, stats=stats)
    assert stats["stages_per_sweep"] == 10 + 4 - 1


def test_threaded_dispatch_for_gs_uses_pipeline():
    # the threaded baseline of a GS kernel is its pipeline form
    want = serial_result("gs-interleaved", 16, 4, GC)
    got = run(SweepPlan("gs-interleaved", "threaded", 4, threads=3, coeffs=GC),
              create_grid(16, 16, 16, RANDOM))
    assert np.array_equal(want.data, got.data)


def test_work_conservation():
    stats = {}
    run_threaded_jacobi(SweepPlan("jacobi", "threaded", 4, threads=3, coeffs=JC),
                        create_grid(10, 11, 12, RANDOM), stats=stats)
    assert stats["line_updates"] == 4 * 12 * 11
    stats = {}
    run_pipeline_gs(SweepPlan("gs-naive", "pipeline", 2, threads=3, coeffs=GC),
                    create_grid(10, 11, 12, RANDOM), stats=stats)
    assert stats["line_updates"] == 2 * 12 * 11
