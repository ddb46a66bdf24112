"""Halo-padded 3D scalar fields and their initialization patterns.

Layout is k-outer / j-middle / i-contiguous, one ghost layer on every
face.  Halo cells hold Dirichlet boundary data: they are written once at
creation and never touched by any update kernel.
"""

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError, DimensionError

HALO = 1
ALIGN = 64  # cache-line bytes; base allocation is aligned to this


def _aligned_empty(shape):
    """float64 array whose first element sits on a 64-byte boundary."""
    count = int(np.prod(shape))
    buf = np.empty(count + ALIGN // 8, dtype=np.float64)
    off = (-buf.ctypes.data // 8) % (ALIGN // 8)
    return buf[off:off + count].reshape(shape)


@dataclass(frozen=True)
class InitPattern:
    """Deterministic fill rule for a new grid.

    kind:
      uniform  -- every cell (halo included) holds `value`
      linear   -- cell (k, j, i) holds float(i + j + k), halo included
      random   -- interior is seeded-uniform in [lo, hi), halo is 0.0
    """

    kind: str
    value: float = 0.0
    seed: int = 0
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "linear", "random"):
            raise ValueError(f"unknown pattern kind {self.kind!r}")

    @staticmethod
    def uniform(value):
        return InitPattern("uniform", value=float(value))

    @staticmethod
    def linear():
        return InitPattern("linear")

    @staticmethod
    def seeded_random(seed, lo=0.0, hi=1.0):
        return InitPattern("random", seed=int(seed), lo=float(lo), hi=float(hi))


@dataclass
class Grid3D:
    """ni x nj x nk interior cells wrapped in a one-cell ghost layer.

    `data` has shape (nk+2, nj+2, ni+2); interior cell (k, j, i) lives at
    data[k+1, j+1, i+1].  The i axis is unit stride.
    """

    ni: int
    nj: int
    nk: int
    data: np.ndarray = field(repr=False)

    @property
    def shape_padded(self):
        return (self.nk + 2, self.nj + 2, self.ni + 2)

    @property
    def interior(self):
        return self.data[1:-1, 1:-1, 1:-1]

    def flat_index(self, k, j, i):
        return flat_index(self, k, j, i)

    def copy(self):
        out = _aligned_empty(self.shape_padded)
        np.copyto(out, self.data)
        return Grid3D(self.ni, self.nj, self.nk, data=out)

    def same_extents(self, other):
        return (self.ni, self.nj, self.nk) == (other.ni, other.nj, other.nk)


def create_grid(ni, nj, nk, pattern):
    """Allocate and fill a grid; halo participates per the pattern rule."""
    for name, n in (("ni", ni), ("nj", nj), ("nk", nk)):
        if int(n) != n or n < 1:
            raise DimensionError(f"{name} must be a positive integer, got {n!r}")
    ni, nj, nk = int(ni), int(nj), int(nk)

    try:
        data = _aligned_empty((nk + 2, nj + 2, ni + 2))
    except MemoryError as exc:
        raise MemoryError(
            f"cannot allocate {(nk + 2) * (nj + 2) * (ni + 2) * 8} bytes for grid"
        ) from exc

    if pattern.kind == "uniform":
        data.fill(pattern.value)
    elif pattern.kind == "linear":
        ks = np.arange(-1.0, nk + 1.0)
        js = np.arange(-1.0, nj + 1.0)
        is_ = np.arange(-1.0, ni + 1.0)
        data[...] = ks[:, None, None] + js[None, :, None] + is_[None, None, :]
    else:  # random: zero halo, seeded interior
        data.fill(0.0)
        rng = np.random.default_rng(pattern.seed)
        u = rng.random((nk, nj, ni), dtype=np.float64)
        if (pattern.lo, pattern.hi) != (0.0, 1.0):
            u = pattern.lo + (pattern.hi - pattern.lo) * u
        data[1:-1, 1:-1, 1:-1] = u

    return Grid3D(ni, nj, nk, data=data)


def flat_index(g, k, j, i):
    """Flat offset of padded coordinate (k, j, i); halo addresses allowed."""
    if not (-1 <= k <= g.nk and -1 <= j <= g.nj and -1 <= i <= g.ni):
        raise BoundsError(
            f"coordinate ({k}, {j}, {i}) outside padded box "
            f"[-1, {g.nk}] x [-1, {g.nj}] x [-1, {g.ni}]"
        )
    return (k + 1) * (g.nj + 2) * (g.ni + 2) + (j + 1) * (g.ni + 2) + (i + 1)


def dump_binary(g, path):
    """Write interior extents and interior data for external diffing.

    Format: header of 3 little-endian int64 (ni, nj, nk), then interior
    values in k-outer / j-middle / i-contiguous order as little-endian
    float64.
    """
    with open(path, "wb") as fh:
        fh.write(struct.pack("<qqq", g.ni, g.nj, g.nk))
        fh.write(np.ascontiguousarray(g.interior, dtype="<f8").tobytes())


def summary(g):
    """min/max/checksum text line for quick eyeballing of a dump."""
    interior = np.ascontiguousarray(g.interior)
    digest = hashlib.sha256(interior.tobytes()).hexdigest()[:16]
    return (
        f"grid {g.ni}x{g.nj}x{g.nk} min={interior.min():.17g} "
        f"max={interior.max():.17g} sha256[:16]={digest}"
    )
