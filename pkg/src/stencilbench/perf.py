"""Timing methodology, STREAM-triad bandwidth probe, and the bandwidth
ceiling model.

The model: with main memory saturated, a cell update moves at least one
8-byte load and one 8-byte store between memory and the cache hierarchy,
so peak performance is bounded by

    P0 = M_S / bytes_per_lup   [lattice site updates per second]

with M_S the sustained bandwidth of the STREAM triad a[i] = b[i] + s*c[i].
Without non-temporal stores the store stream additionally drags a
write-allocate transfer through the bus, hence 24 vs 16 B/LUP for
out-of-place Jacobi and 32 vs 24 B/element in the triad accounting.
Wavefront blocking with factor t touches memory once per t sweeps, so
its traffic is the plain value divided by t.
"""

import logging
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from statistics import median

import numpy as np

from .errors import ConfigError, DomainError
from .kernels import GS_INTERLEAVED, GS_NAIVE, HAVE_NUMBA, JACOBI
from .sync import barrier_create
from .sweeps import run as run_plan
from .sweeps.team import ThreadTeam

log = logging.getLogger(__name__)

STREAM_BYTES_NT = 24  # read b, read c, streaming-store a
STREAM_BYTES_NONT = 32  # read b, read c, write-allocate a, store a

if HAVE_NUMBA:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _triad_slab(a, b, c, s, lo, hi):
        for i in range(lo, hi):
            a[i] = b[i] + s * c[i]

    _TRIAD_KERNEL = "compiled"
else:

    def _triad_slab(a, b, c, s, lo, hi):
        # two ufunc passes; traffic exceeds the 3-stream ideal, flagged below
        np.multiply(c[lo:hi], s, out=a[lo:hi])
        np.add(a[lo:hi], b[lo:hi], out=a[lo:hi])

    _TRIAD_KERNEL = "numpy-twopass"


def host_fingerprint(topo=None):
    try:
        import numba

        numba_version = numba.__version__
    except ImportError:
        numba_version = None
    info = {
        "hostname": platform.node(),
        "machine": platform.machine(),
        "platform": platform.platform(),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "numba": numba_version,
        "cpu_count": os.cpu_count(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if topo is not None:
        info["topology_source"] = topo.source
        info["physical_cores"] = topo.physical_cores
        sizes = [g.size_bytes for g in topo.groups if g.size_bytes]
        info["outer_cache_bytes"] = min(sizes) if sizes else None
    return info


def predict_p0(ms, bytes_per_lup):
    """Bandwidth-limited ceiling in LUP/s: exact quotient M_S / bytes."""
    if not (ms > 0 and bytes_per_lup > 0):
        raise DomainError(
            f"predict_p0 needs positive inputs, got ({ms}, {bytes_per_lup})"
        )
    return ms / bytes_per_lup


_PLAIN_ALIASES = ("plain", "serial", "threaded", "pipeline")


def predict_traffic(kernel, variant, t=1, nt_stores=None):
    """Main-memory bytes per lattice-site update, as an exact Fraction.

    plain Jacobi: 16 (NT stores) or 24 (write-allocate included);
    plain Gauss-Seidel: 16 (the in-place store hits the loaded line);
    wavefront with blocking factor t: the plain value divided by t.
    """
    if t < 1:
        raise DomainError(f"blocking factor must be >= 1, got {t}")
    if kernel in (GS_NAIVE, GS_INTERLEAVED, "gs"):
        if nt_stores:
            raise DomainError("non-temporal stores are inapplicable to in-place GS")
        plain = Fraction(16)
    elif kernel == JACOBI:
        plain = Fraction(16) if nt_stores else Fraction(24)
    else:
        raise DomainError(f"unknown kernel {kernel!r}")
    if variant in _PLAIN_ALIASES:
        return plain
    if variant == "wavefront":
        return plain / t
    raise DomainError(f"unknown variant {variant!r}")


@dataclass
class StreamResult:
    bandwidth_bytes_per_s: float
    threads: int
    elements: int
    nt_requested: bool
    nt_supported: bool
    bytes_per_element: int
    seconds: list
    kernel: str
    validated: bool
    pinned: bool | None = None

    def to_dict(self):
        return dict(self.__dict__)


def stream_triad(threads, elements, nt_stores=False, topo=None, placement=None,
                 repetitions=5, warmup=1):
    """Sustained bandwidth of a[i] = b[i] + s*c[i] over `threads` workers.

    Streaming stores are outside this runtime's reach, so nt_stores=True
    falls back to regular stores with the result flagged and counted at
    the 32 B/element write-allocate convention.
    """
    if threads < 1:
        raise ConfigError(f"need at least one thread, got {threads}")
    if elements <= 0:
        raise ConfigError(f"need a positive element count, got {elements}")
    if topo is not None:
        sizes = [g.size_bytes for g in topo.groups if g.size_bytes]
        if sizes and 3 * 8 * elements < 4 * min(sizes):
            raise ConfigError(
                f"{elements} elements ({3 * 8 * elements} bytes over three arrays) "
                f"do not exceed the {min(sizes)}-byte outermost cache 4x over"
            )

    nt_supported = False
    if nt_stores and not nt_supported:
        log.warning("stream_triad: streaming stores unsupported here; "
                    "falling back to regular stores (flagged)")
    s = 3.0
    a = np.zeros(elements)
    b = np.full(elements, 1.5)
    c = np.full(elements, 0.25)
    rng = np.random.default_rng(7)
    idx = rng.integers(0, elements, size=min(elements, 4))
    b[idx] = rng.random(len(idx))
    c[idx] = rng.random(len(idx))

    chunk = -(-elements // threads)
    slabs = [(r * chunk, min((r + 1) * chunk, elements)) for r in range(threads)]
    bar = barrier_create(threads, "central-spin")
    seconds = []
    t_mark = [0.0]

    def body(rank):
        lo, hi = slabs[rank]
        for rep in range(warmup + repetitions):
            bar.wait(rank)
            if rank == 0:
                t_mark[0] = time.perf_counter()
            _triad_slab(a, b, c, s, lo, hi)
            bar.wait(rank)
            if rank == 0 and rep >= warmup:
                seconds.append(time.perf_counter() - t_mark[0])

    team = ThreadTeam(threads, placement=placement, barriers=[bar])
    team.run(body)

    stride = max(1, elements // 4096)
    sample = slice(0, elements, stride)
    validated = np.array_equal(a[sample], b[sample] + s * c[sample])
    if not validated:
        raise ArithmeticError("stream_triad validation failed: a != b + s*c")

    bytes_per_element = STREAM_BYTES_NT if (nt_stores and nt_supported) else STREAM_BYTES_NONT
    best = median(seconds)
    return StreamResult(
        bandwidth_bytes_per_s=elements * bytes_per_element / best,
        threads=threads,
        elements=elements,
        nt_requested=bool(nt_stores),
        nt_supported=nt_supported,
        bytes_per_element=bytes_per_element,
        seconds=seconds,
        kernel=_TRIAD_KERNEL,
        validated=validated,
        pinned=team.pinned,
    )


@dataclass
class Measurement:
    kernel: str
    variant: str
    iter_end: int
    ni: int
    nj: int
    nk: int
    seconds: list
    repetitions: int
    warmup: int
    mlups: float  # from the median repetition
    config: dict = field(default_factory=dict)
    pinned: bool | None = None
    flags: list = field(default_factory=list)
    host: dict = field(default_factory=dict)

    @property
    def median_seconds(self):
        return median(self.seconds)

    def to_dict(self):
        d = dict(self.__dict__)
        d["median_seconds"] = self.median_seconds
        return d


def measure(plan, grid_factory, repetitions=5, warmup=1, placement=None, topo=None):
    """Run `plan` on identical fresh inputs: `warmup` untimed runs, then
    `repetitions` timed ones; MLUP/s derives from the median wall time."""
    if repetitions < 1:
        raise ConfigError(f"need at least one repetition, got {repetitions}")
    seconds = []
    pinned = None
    updates = None
    for rep in range(warmup + repetitions):
        g = grid_factory()
        stats = {}
        t0 = time.perf_counter()
        run_plan(plan, g, placement=placement, stats=stats)
        dt = time.perf_counter() - t0
        if rep >= warmup:
            seconds.append(dt)
        pinned = stats.get("pinned", pinned)
        updates = stats.get("line_updates", updates)

    med = median(seconds)
    g = grid_factory()
    total_lups = plan.iter_end * g.ni * g.nj * g.nk
    flags = []
    res = time.get_clock_info("perf_counter").resolution
    if med > 0 and res > 0.01 * med:
        flags.append("timer-resolution")
        log.warning(
            "measure: timer resolution %.3g s exceeds 1%% of a %.3g s repetition; "
            "consider increasing iter_end", res, med,
        )
    if pinned is False:
        flags.append("unpinned")

    cfg = {"threads": plan.threads}
    if plan.config is not None:
        cfg.update(
            num_groups=plan.config.num_groups,
            threads_per_group=plan.config.threads_per_group,
            blocks=plan.config.blocks,
            barrier=plan.config.barrier,
        )
    return Measurement(
        kernel=plan.kernel,
        variant=plan.variant,
        iter_end=plan.iter_end,
        ni=g.ni,
        nj=g.nj,
        nk=g.nk,
        seconds=seconds,
        repetitions=repetitions,
        warmup=warmup,
        mlups=(total_lups / med / 1e6) if med > 0 else math.inf,
        config=cfg,
        pinned=pinned,
        flags=flags,
        host=host_fingerprint(topo),
    )
