import numpy as np
import pytest

import reference
from stencilbench.errors import AliasingError, BoundsError, ShapeError
from stencilbench.grid import InitPattern, create_grid, flat_index
from stencilbench.kernels import (
    HAVE_NUMBA,
    KERNEL_COSTS,
    StencilCoeffs,
    _gs_window_interleaved_py,
    _gs_window_py,
    _jacobi_window_np,
    gs_line_update,
    gs_line_update_interleaved,
    gs_window,
    gs_window_interleaved,
    jacobi_line_update,
    jacobi_window,
)


def random_grid(n=6, seed=42, lo=0.0, hi=1.0):
    return create_grid(n, n, n, InitPattern.seeded_random(seed, lo, hi))


def test_coeffs_validation():
    with pytest.raises(ValueError):
        StencilCoeffs(float("nan"), 0.1)
    with pytest.raises(ValueError):
        StencilCoeffs(0.1, float("inf"))


def test_jacobi_identity_case():
    src = random_grid()
    dst = create_grid(6, 6, 6, InitPattern.uniform(0))
    jacobi_line_update(src, dst, StencilCoeffs(1.0, 0.0), 2, 3)
    assert np.array_equal(dst.data[3, 4, 1:-1], src.data[3, 4, 1:-1])


def test_jacobi_uniform_fixed_point():
    src = create_grid(6, 6, 6, InitPattern.uniform(3.0))
    dst = create_grid(6, 6, 6, InitPattern.uniform(0))
    jacobi_line_update(src, dst, StencilCoeffs(0.0, 1.0 / 6.0), 1, 4)
    assert np.all(dst.data[2, 5, 1:-1] == 3.0)


def test_jacobi_linear_fixed_point():
    src = create_grid(6, 6, 6, InitPattern.linear())
    dst = create_grid(6, 6, 6, InitPattern.uniform(0))
    k, j = 2, 3
    jacobi_line_update(src, dst, StencilCoeffs(0.0, 1.0 / 6.0), k, j)
    want = np.array([float(i + j + k) for i in range(6)])
    assert np.array_equal(dst.data[k + 1, j + 1, 1:-1], want)


def test_jacobi_line_matches_scalar_reference_bitwise():
    src = random_grid(6, 42)
    dst = create_grid(6, 6, 6, InitPattern.uniform(0))
    a, b = 0.5, 0.1
    k, j = 2, 3
    jacobi_line_update(src, dst, StencilCoeffs(a, b), k, j)
    cells = reference.to_cells(src)
    dj, dk = 8, 64
    for i in range(6):
        off = flat_index(src, k, j, i)
        want = reference.jacobi_cell(cells, off, a, b, 1, dj, dk)
        assert dst.data[k + 1, j + 1, i + 1] == want


def test_jacobi_never_reads_dst_never_writes_src():
    src = random_grid(6, 1)
    before = src.data.copy()
    dst = create_grid(6, 6, 6, InitPattern.uniform(float("nan")))
    jacobi_line_update(src, dst, StencilCoeffs(0.25, 0.125), 3, 2)
    assert np.isfinite(dst.data[4, 3, 1:-1]).all()  # NaN dst never read
    assert np.array_equal(src.data, before)


def test_jacobi_shape_and_aliasing_errors():
    src = random_grid(6)
    small = create_grid(5, 6, 6, InitPattern.uniform(0))
    with pytest.raises(ShapeError):
        jacobi_line_update(src, small, StencilCoeffs(0, 0.1), 0, 0)
    with pytest.raises(AliasingError):
        jacobi_line_update(src, src, StencilCoeffs(0, 0.1), 0, 0)


def test_line_bounds_errors():
    g = random_grid(4)
    dst = create_grid(4, 4, 4, InitPattern.uniform(0))
    with pytest.raises(BoundsError):
        jacobi_line_update(g, dst, StencilCoeffs(0, 0.1), 4, 0)
    with pytest.raises(BoundsError):
        gs_line_update(g, 0.1, 0, -1)


def test_gs_uniform_fixed_point():
    g = create_grid(6, 6, 6, InitPattern.uniform(2.5))
    gs_line_update(g, 1.0 / 6.0, 2, 2)
    assert np.all(g.data[3, 3, 1:-1] == 2.5)


def test_gs_linear_fixed_point():
    g = create_grid(6, 6, 6, InitPattern.linear())
    before = g.data[2, 2, 1:-1].copy()
    gs_line_update(g, 1.0 / 6.0, 1, 1)
    assert np.array_equal(g.data[2, 2, 1:-1], before)


def test_gs_line_matches_scalar_reference_bitwise():
    g = random_grid(6, 42)
    ref_cells = reference.to_cells(g)
    k, j = 1, 1
    gs_line_update(g, 1.0 / 6.0, k, j)
    dj, dk = 8, 64
    base = (k + 1) * dk + (j + 1) * dj + 1
    for i in range(6):
        off = base + i
        ref_cells[off] = (1.0 / 6.0) * (
            ref_cells[off - 1] + ref_cells[off + 1] + ref_cells[off - dj]
            + ref_cells[off + dj] + ref_cells[off - dk] + ref_cells[off + dk]
        )
    assert np.array_equal(g.data.ravel(), np.array(ref_cells))


def test_interleaved_bitwise_on_integer_data():
    # all partial sums exact in double -> reassociation is harmless
    g1 = create_grid(8, 8, 8, InitPattern.seeded_random(5))
    g1.data[:] = np.floor(g1.data * 8)
    g2 = g1.copy()
    for j in range(8):
        gs_line_update(g1, 0.125, 3, j)
        gs_line_update_interleaved(g2, 0.125, 3, j)
    assert np.array_equal(g1.data, g2.data)


def test_interleaved_uniform_unchanged():
    g = create_grid(6, 6, 6, InitPattern.uniform(1.75))
    gs_line_update_interleaved(g, 1.0 / 6.0, 2, 3)
    assert np.all(g.data == 1.75)


def test_interleaved_close_to_naive_on_random_data():
    g1 = random_grid(6, 42)
    g2 = g1.copy()
    gs_line_update(g1, 1.0 / 6.0, 2, 3)
    gs_line_update_interleaved(g2, 1.0 / 6.0, 2, 3)
    x = g1.data[3, 4, 1:-1]
    y = g2.data[3, 4, 1:-1]
    rel = np.abs(x - y) / np.maximum(np.abs(x), 1e-300)
    assert rel.max() <= 1e-13


def test_interleaved_matches_scalar_reference_bitwise():
    g = random_grid(7, 9)
    ref = reference.run_reference("gs-interleaved", g.copy(), 0.0, 1.0 / 6.0, 1)
    for k in range(7):
        for j in range(7):
            gs_line_update_interleaved(g, 1.0 / 6.0, k, j)
    assert np.array_equal(g.data.ravel(), np.array(ref))


def test_interleaved_single_column_falls_back():
    g = create_grid(1, 4, 4, InitPattern.seeded_random(3))
    g2 = g.copy()
    gs_line_update(g, 0.1, 1, 2)
    gs_line_update_interleaved(g2, 0.1, 1, 2)
    assert np.array_equal(g.data, g2.data)


def test_kernel_cost_table():
    assert KERNEL_COSTS["jacobi"] == (6, 2)
    assert KERNEL_COSTS["gs-naive"] == (5, 1)
    assert KERNEL_COSTS["gs-interleaved"] == (5, 1)


@pytest.mark.skipif(not HAVE_NUMBA, reason="compiled path not available")
def test_compiled_and_fallback_paths_agree_bitwise():
    rng = np.random.default_rng(0)
    km, kc, kp = (rng.random((9, 8)) for _ in range(3))
    d1 = np.zeros((9, 8))
    d2 = np.zeros((9, 8))
    jacobi_window(d1, km, kc, kp, 0.3, 0.09, 1, 8)
    _jacobi_window_np(d2, km, kc, kp, 0.3, 0.09, 1, 8)
    assert np.array_equal(d1, d2)

    kc1, kc2 = kc.copy(), kc.copy()
    gs_window(km, kc1, kp, 0.17, 1, 8)
    _gs_window_py(km, kc2, kp, 0.17, 1, 8)
    assert np.array_equal(kc1, kc2)

    kc1, kc2 = kc.copy(), kc.copy()
    gs_window_interleaved(km, kc1, kp, 0.17, 1, 8)
    _gs_window_interleaved_py(km, kc2, kp, 0.17, 1, 8)
    assert np.array_equal(kc1, kc2)
