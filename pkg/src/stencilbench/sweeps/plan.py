"""Sweep plans, wavefront configuration, and spatial partitioning."""

import math
import logging
from dataclasses import dataclass, field

from ..errors import ConfigError, PartitionError, PlanError
from ..kernels import GS_INTERLEAVED, GS_NAIVE, JACOBI, KERNELS, StencilCoeffs

log = logging.getLogger(__name__)

SERIAL = "serial"
THREADED = "threaded"
PIPELINE = "pipeline"
WAVEFRONT = "wavefront"
VARIANTS = (SERIAL, THREADED, PIPELINE, WAVEFRONT)

BARRIER_AUTO = "auto"


@dataclass
class WavefrontConfig:
    """Thread-group geometry: N groups of t threads over B j-blocks.

    t doubles as the temporal blocking factor; the temporary plane ring
    holds 2*t planes.
    """

    num_groups: int = 1
    threads_per_group: int = 1
    blocks: int = 1
    temp_planes: int | None = None
    barrier: str = BARRIER_AUTO

    def __post_init__(self):
        if self.num_groups < 1 or self.threads_per_group < 1:
            raise ConfigError(
                f"need num_groups >= 1 and threads_per_group >= 1, got "
                f"({self.num_groups}, {self.threads_per_group})"
            )
        if self.blocks < self.num_groups:
            raise ConfigError(
                f"blocks ({self.blocks}) must be >= num_groups ({self.num_groups})"
            )
        if self.temp_planes is None:
            self.temp_planes = 2 * self.threads_per_group
        elif self.temp_planes != 2 * self.threads_per_group:
            raise ConfigError(
                f"temp_planes must equal 2*threads_per_group "
                f"(= {2 * self.threads_per_group}), got {self.temp_planes}"
            )

    @property
    def total_threads(self):
        return self.num_groups * self.threads_per_group


@dataclass
class SweepPlan:
    """What to run: kernel x variant x sweep count, plus team geometry."""

    kernel: str
    variant: str
    iter_end: int
    config: WavefrontConfig | None = None
    threads: int = 1  # team size for threaded / pipeline variants
    coeffs: StencilCoeffs = field(default_factory=lambda: StencilCoeffs(0.0, 1.0 / 6.0))
    verify: bool = False

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise PlanError(f"unknown kernel {self.kernel!r}")
        if self.variant not in VARIANTS:
            raise PlanError(f"unknown variant {self.variant!r}")
        if self.iter_end < 0:
            raise PlanError(f"iter_end must be >= 0, got {self.iter_end}")
        if self.variant == WAVEFRONT:
            if self.config is None:
                raise PlanError("wavefront plans need a WavefrontConfig")
            t = self.config.threads_per_group
            if self.iter_end % t != 0:
                raise PlanError(
                    f"wavefront iter_end ({self.iter_end}) must be a multiple of "
                    f"threads_per_group ({t}); pad with plain sweeps externally"
                )
            if self.kernel == JACOBI and t > 1 and t % 2 != 0:
                raise PlanError(
                    "wavefront Jacobi needs threads_per_group == 1 or even: the "
                    "ring/source write alternation ends on the source grid only "
                    "for even update counts"
                )
        if self.variant in (THREADED, PIPELINE) and self.threads < 1:
            raise PlanError(f"threads must be >= 1, got {self.threads}")
        if self.variant == PIPELINE and self.kernel == JACOBI:
            raise PlanError("pipeline variant applies to Gauss-Seidel kernels only")

    @property
    def barrier_kind(self):
        return self.config.barrier if self.config is not None else BARRIER_AUTO

    @property
    def is_gs(self):
        return self.kernel in (GS_NAIVE, GS_INTERLEAVED)


def partition_blocks(extent, count):
    """Split [0, extent) into `count` contiguous ranges, sizes differing by
    at most one, larger blocks first."""
    if count < 1:
        raise PartitionError(f"need at least one block, got {count}")
    if count > extent:
        raise PartitionError(f"cannot split extent {extent} into {count} blocks")
    base, rem = divmod(extent, count)
    ranges = []
    pos = 0
    for b in range(count):
        size = base + (1 if b < rem else 0)
        ranges.append((pos, pos + size))
        pos += size
    return ranges


def wavefront_working_set_bytes(t, ni, block_nj):
    """Per-group cache footprint estimate: t+2 resident source planes plus
    2t temporary planes of one padded j-block."""
    return (3 * t + 2) * (ni + 2) * (block_nj + 2) * 8


def choose_block_size(topo, t, ni, nj, num_groups=1):
    """Smallest B whose per-group working set fits in half the outermost
    cache; clamped to [num_groups, nj].  Unknown cache size -> B = num_groups
    with a warning."""
    lo = max(num_groups, 1)
    if lo > nj:
        raise PartitionError(f"num_groups {num_groups} exceeds nj {nj}")
    sizes = [g.size_bytes for g in topo.groups if g.size_bytes]
    if not sizes:
        log.warning("choose_block_size: outermost cache size unknown; using B=%d", lo)
        return lo
    budget = 0.5 * min(sizes)
    for b in range(lo, nj + 1):
        block_nj = math.ceil(nj / b)
        if wavefront_working_set_bytes(t, ni, block_nj) <= budget:
            return b
    log.warning(
        "choose_block_size: even single-line blocks exceed half the cache "
        "(%d bytes); returning B=nj=%d", int(budget), nj,
    )
    return nj
