import numpy as np
import pytest

import reference
from stencilbench.grid import InitPattern, create_grid
from stencilbench.kernels import StencilCoeffs
from stencilbench.sweeps import SweepPlan, run_serial

RANDOM = InitPattern.seeded_random(42)


def test_zero_iterations_bitwise_unchanged():
    g = create_grid(5, 5, 5, RANDOM)
    before = g.data.copy()
    out = run_serial(SweepPlan("jacobi", "serial", 0), g)
    assert out is g and np.array_equal(out.data, before)


def test_jacobi_identity_kernel_unchanged():
    g = create_grid(6, 6, 6, RANDOM)
    before = g.data.copy()
    out = run_serial(SweepPlan("jacobi", "serial", 7, coeffs=StencilCoeffs(1.0, 0.0)), g)
    assert np.array_equal(out.data, before)


@pytest.mark.parametrize("kernel", ["jacobi", "gs-naive", "gs-interleaved"])
def test_serial_matches_scalar_reference_bitwise(kernel):
    coeffs = StencilCoeffs(0.5, 0.1) if kernel == "jacobi" else StencilCoeffs(0.0, 1 / 6)
    g = create_grid(8, 8, 8, RANDOM)
    want = reference.run_reference(kernel, g.copy(), coeffs.a, coeffs.b, 3)
    out = run_serial(SweepPlan(kernel, "serial", 3, coeffs=coeffs), g)
    assert np.array_equal(out.data.ravel(), np.array(want))


@pytest.mark.parametrize("kernel", ["jacobi", "gs-naive", "gs-interleaved"])
def test_halo_never_written(kernel):
    g = create_grid(6, 7, 8, RANDOM)
    halo_mask = np.ones_like(g.data, dtype=bool)
    halo_mask[1:-1, 1:-1, 1:-1] = False
    halo_before = g.data[halo_mask].copy()
    out = run_serial(SweepPlan(kernel, "serial", 2), g)
    assert np.array_equal(out.data[halo_mask], halo_before)


def test_work_conservation_stats():
    g = create_grid(4, 5, 6, RANDOM)
    stats = {}
    run_serial(SweepPlan("gs-naive", "serial", 3), g, stats=stats)
    assert stats["line_updates"] == 3 * 6 * 5


def test_results_stay_finite():
    g = create_grid(6, 6, 6, RANDOM)
    out = run_serial(SweepPlan("gs-naive", "serial", 8), g)
    assert np.isfinite(out.data).all()


def test_serial_deterministic_across_runs():
    a = run_serial(SweepPlan("jacobi", "serial", 5, coeffs=StencilCoeffs(0.2, 0.13)),
                   create_grid(7, 6, 5, RANDOM))
    b = run_serial(SweepPlan("jacobi", "serial", 5, coeffs=StencilCoeffs(0.2, 0.13)),
                   create_grid(7, 6, 5, RANDOM))
    assert np.array_equal(a.data, b.data)
