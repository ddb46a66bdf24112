"""Per-line update kernels: Jacobi, Gauss-Seidel, and interleaved Gauss-Seidel.

All kernels fix the summation order (left to right as written) so that
every sweep engine built on top of them can be compared bitwise against
the serial reference.  The compiled (numba) and fallback (numpy / pure
Python) paths perform the identical IEEE operation sequence per cell.

Kernels operate on 2D padded planes: `km`, `kc`, `kp` are the k-1, k,
k+1 planes of a padded grid and the row range [jp0, jp1) is given in
padded j coordinates.  The i loop always covers the full interior.

Gauss-Seidel is recursive along i (and through the in-place update along
j and k), which rules out SIMD vectorization of its inner loop; the
Jacobi inner loop carries no dependence and is written so a compiler can
vectorize it.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import AliasingError, BoundsError, ShapeError

JACOBI = "jacobi"
GS_NAIVE = "gs-naive"
GS_INTERLEAVED = "gs-interleaved"
KERNELS = (JACOBI, GS_NAIVE, GS_INTERLEAVED)

# (adds, muls) per cell update, used by the reporting module
KERNEL_COSTS = {JACOBI: (6, 2), GS_NAIVE: (5, 1), GS_INTERLEAVED: (5, 1)}

_FORCE_PURE = os.environ.get("STENCILBENCH_PURE", "") not in ("", "0")

try:  # compiled fast path; pure fallback keeps the package importable anywhere
    if _FORCE_PURE:
        raise ImportError("pure path forced via STENCILBENCH_PURE")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


@dataclass(frozen=True)
class StencilCoeffs:
    """Center weight a (Jacobi only) and neighbor weight b."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"non-finite stencil coefficients ({self.a}, {self.b})")


# ---------------------------------------------------------------------------
# fallback implementations

def _jacobi_window_np(dst, km, kc, kp, a, b, jp0, jp1):
    if jp1 <= jp0:
        return
    c = kc[jp0:jp1, 1:-1]
    acc = kc[jp0:jp1, 0:-2] + kc[jp0:jp1, 2:]
    acc += kc[jp0 - 1:jp1 - 1, 1:-1]
    acc += kc[jp0 + 1:jp1 + 1, 1:-1]
    acc += km[jp0:jp1, 1:-1]
    acc += kp[jp0:jp1, 1:-1]
    dst[jp0:jp1, 1:-1] = a * c + b * acc


def _jacobi_window_jlow_np(dst, km, kc, kp, ov, a, b, jp0, jp1):
    if jp1 <= jp0:
        return
    _jacobi_window_np(dst, km, kc, kp, a, b, jp0 + 1, jp1)
    c = kc[jp0, 1:-1]
    acc = kc[jp0, 0:-2] + kc[jp0, 2:]
    acc += ov[1:-1]
    acc += kc[jp0 + 1, 1:-1]
    acc += km[jp0, 1:-1]
    acc += kp[jp0, 1:-1]
    dst[jp0, 1:-1] = a * c + b * acc


def _gs_window_py(km, kc, kp, b, jp0, jp1):
    nip = kc.shape[1]
    for j in range(jp0, jp1):
        line = kc[j].tolist()
        jm = kc[j - 1].tolist()
        jp = kc[j + 1].tolist()
        dn = km[j].tolist()
        up = kp[j].tolist()
        for i in range(1, nip - 1):
            line[i] = b * (line[i - 1] + line[i + 1] + jm[i] + jp[i] + dn[i] + up[i])
        kc[j, 1:nip - 1] = line[1:nip - 1]


def _gs_window_interleaved_py(km, kc, kp, b, jp0, jp1):
    nip = kc.shape[1]
    if nip - 2 < 2:  # single-column line: interleaving is meaningless
        _gs_window_py(km, kc, kp, b, jp0, jp1)
        return
    for j in range(jp0, jp1):
        line = kc[j].tolist()
        jm = kc[j - 1].tolist()
        jp = kc[j + 1].tolist()
        dn = km[j].tolist()
        up = kp[j].tolist()
        tmp1 = line[2] + jm[1] + jp[1] + dn[1] + up[1]
        tmp2 = 0.0
        for i in range(1, nip - 1):
            if i + 1 < nip - 1:
                tmp2 = line[i + 2] + jm[i + 1] + jp[i + 1] + dn[i + 1] + up[i + 1]
            line[i] = b * (line[i - 1] + tmp1)
            tmp1 = tmp2
        kc[j, 1:nip - 1] = line[1:nip - 1]


# ---------------------------------------------------------------------------
# compiled implementations (same operation order, cell for cell)

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _jacobi_window_nb(dst, km, kc, kp, a, b, jp0, jp1):
        nip = kc.shape[1]
        for j in range(jp0, jp1):
            for i in range(1, nip - 1):
                dst[j, i] = a * kc[j, i] + b * (
                    kc[j, i - 1] + kc[j, i + 1]
                    + kc[j - 1, i] + kc[j + 1, i]
                    + km[j, i] + kp[j, i]
                )

    @njit(cache=True, nogil=True)
    def _jacobi_window_jlow_nb(dst, km, kc, kp, ov, a, b, jp0, jp1):
        # row jp0 takes its j-1 neighbor values from `ov` instead of kc
        nip = kc.shape[1]
        for i in range(1, nip - 1):
            dst[jp0, i] = a * kc[jp0, i] + b * (
                kc[jp0, i - 1] + kc[jp0, i + 1]
                + ov[i] + kc[jp0 + 1, i]
                + km[jp0, i] + kp[jp0, i]
            )
        for j in range(jp0 + 1, jp1):
            for i in range(1, nip - 1):
                dst[j, i] = a * kc[j, i] + b * (
                    kc[j, i - 1] + kc[j, i + 1]
                    + kc[j - 1, i] + kc[j + 1, i]
                    + km[j, i] + kp[j, i]
                )

    @njit(cache=True, nogil=True)
    def _gs_window_nb(km, kc, kp, b, jp0, jp1):
        nip = kc.shape[1]
        for j in range(jp0, jp1):
            for i in range(1, nip - 1):
                kc[j, i] = b * (
                    kc[j, i - 1] + kc[j, i + 1]
                    + kc[j - 1, i] + kc[j + 1, i]
                    + km[j, i] + kp[j, i]
                )

    @njit(cache=True, nogil=True)
    def _gs_window_interleaved_nb(km, kc, kp, b, jp0, jp1):
        nip = kc.shape[1]
        if nip - 2 < 2:
            for j in range(jp0, jp1):
                for i in range(1, nip - 1):
                    kc[j, i] = b * (
                        kc[j, i - 1] + kc[j, i + 1]
                        + kc[j - 1, i] + kc[j + 1, i]
                        + km[j, i] + kp[j, i]
                    )
            return
        for j in range(jp0, jp1):
            tmp1 = kc[j, 2] + kc[j - 1, 1] + kc[j + 1, 1] + km[j, 1] + kp[j, 1]
            tmp2 = 0.0
            for i in range(1, nip - 1):
                if i + 1 < nip - 1:
                    tmp2 = (
                        kc[j, i + 2] + kc[j - 1, i + 1] + kc[j + 1, i + 1]
                        + km[j, i + 1] + kp[j, i + 1]
                    )
                kc[j, i] = b * (kc[j, i - 1] + tmp1)
                tmp1 = tmp2

    jacobi_window = _jacobi_window_nb
    jacobi_window_jlow = _jacobi_window_jlow_nb
    gs_window = _gs_window_nb
    gs_window_interleaved = _gs_window_interleaved_nb
else:
    jacobi_window = _jacobi_window_np
    jacobi_window_jlow = _jacobi_window_jlow_np
    gs_window = _gs_window_py
    gs_window_interleaved = _gs_window_interleaved_py


def warmup():
    """Trigger JIT compilation outside of timed regions."""
    if not HAVE_NUMBA:
        return
    p = np.zeros((4, 4))
    ov = np.zeros(4)
    jacobi_window(p.copy(), p, p.copy(), p, 0.0, 0.0, 1, 3)
    jacobi_window_jlow(p.copy(), p, p.copy(), p, ov, 0.0, 0.0, 1, 3)
    gs_window(p, p.copy(), p, 0.0, 1, 3)
    gs_window_interleaved(p, p.copy(), p, 0.0, 1, 3)


# ---------------------------------------------------------------------------
# contract-checked line-level operations

def _check_line(g, k, j):
    if not (0 <= k < g.nk and 0 <= j < g.nj):
        raise BoundsError(f"line (k={k}, j={j}) outside interior of {g.nk}x{g.nj} planes")


def jacobi_line_update(src, dst, coeffs, k, j):
    """Out-of-place 7-point update of interior line (k, j): dst only written,
    src only read."""
    if not src.same_extents(dst):
        raise ShapeError(
            f"src {src.ni}x{src.nj}x{src.nk} vs dst {dst.ni}x{dst.nj}x{dst.nk}"
        )
    if np.shares_memory(src.data, dst.data):
        raise AliasingError("jacobi_line_update requires distinct src/dst storage")
    _check_line(src, k, j)
    jacobi_window(
        dst.data[k + 1], src.data[k], src.data[k + 1], src.data[k + 2],
        coeffs.a, coeffs.b, j + 1, j + 2,
    )


def gs_line_update(g, b, k, j):
    """In-place lexicographic Gauss-Seidel update of interior line (k, j)."""
    _check_line(g, k, j)
    gs_window(g.data[k], g.data[k + 1], g.data[k + 2], b, j + 1, j + 2)


def gs_line_update_interleaved(g, b, k, j):
    """Same recurrence as gs_line_update with two updates interleaved to
    break the register dependency chain; differs from the naive kernel by
    one reassociated addition per cell."""
    _check_line(g, k, j)
    gs_window_interleaved(g.data[k], g.data[k + 1], g.data[k + 2], b, j + 1, j + 2)


def window_fn(kernel):
    """Map kernel name to its plane-window implementation."""
    if kernel == JACOBI:
        return jacobi_window
    if kernel == GS_NAIVE:
        return gs_window
    if kernel == GS_INTERLEAVED:
        return gs_window_interleaved
    raise ValueError(f"unknown kernel {kernel!r}")
