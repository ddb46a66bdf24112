"""Plain threaded engines without temporal blocking.

run_threaded_jacobi splits the k range into one contiguous slab per
thread (Jacobi cell updates are order-independent within a sweep, so one
barrier per sweep suffices).  run_pipeline_gs splits the j range and
shifts plane updates in time so the exact lexicographic update order of
the serial Gauss-Seidel is preserved; both engines are bitwise equal to
run_serial.
"""

import os

from ..errors import PartitionError, PlanError
from ..kernels import JACOBI, jacobi_window, window_fn
from ..sync import CENTRAL, TREE, barrier_create
from .plan import BARRIER_AUTO, partition_blocks
from .team import ThreadTeam


def resolve_barrier_kind(kind, team_size, physical_cores=None):
    """auto -> central spin while the team fits on physical cores, else tree."""
    if kind != BARRIER_AUTO:
        return kind
    cores = physical_cores or os.cpu_count() or 1
    return CENTRAL if team_size <= cores else TREE


def run_threaded_jacobi(plan, g, placement=None, stats=None):
    p = plan.threads
    if plan.kernel != JACOBI:
        raise PlanError(f"threaded engine is Jacobi-only, got kernel {plan.kernel!r}")
    if p > g.nk:
        raise PartitionError(f"{p} threads cannot split nk={g.nk} planes")
    if plan.iter_end == 0:
        if stats is not None:
            stats["line_updates"] = 0
        return g

    slabs = partition_blocks(g.nk, p)
    njp = g.nj + 2
    a, b = plan.coeffs.a, plan.coeffs.b
    grids = [g, g.copy()]
    bar = barrier_create(p, resolve_barrier_kind(plan.barrier_kind, p))

    def body(rank):
        k_lo, k_hi = slabs[rank]
        for sweep in range(plan.iter_end):
            sd = grids[sweep % 2].data
            dd = grids[(sweep + 1) % 2].data
            for k in range(k_lo, k_hi):
                jacobi_window(dd[k + 1], sd[k], sd[k + 1], sd[k + 2], a, b, 1, njp - 1)
            bar.wait(rank)

    team = ThreadTeam(p, placement=placement, barriers=[bar])
    team.run(body)
    if stats is not None:
        stats["line_updates"] = plan.iter_end * g.nk * g.nj
        stats["pinned"] = team.pinned
    return grids[plan.iter_end % 2]


def run_pipeline_gs(plan, g, placement=None, stats=None):
    p = plan.threads
    if plan.kernel == JACOBI:
        raise PlanError("pipeline engine applies to Gauss-Seidel kernels only")
    if p > g.nj:
        raise PartitionError(f"{p} threads cannot split nj={g.nj} lines")
    if plan.iter_end == 0:
        if stats is not None:
            stats["line_updates"] = 0
        return g

    jblocks = partition_blocks(g.nj, p)
    nk = g.nk
    b = plan.coeffs.b
    win = window_fn(plan.kernel)
    d = g.data
    bar = barrier_create(p, resolve_barrier_kind(plan.barrier_kind, p))
    stages = nk + p - 1  # pipeline fill and drain cost p-1 stages each

    def body(rank):
        j_lo, j_hi = jblocks[rank]
        for _ in range(plan.iter_end):
            for s in range(stages):
                k = s - rank
                if 0 <= k < nk:
                    win(d[k], d[k + 1], d[k + 2], b, j_lo + 1, j_hi + 1)
                bar.wait(rank)

    team = ThreadTeam(p, placement=placement, barriers=[bar])
    team.run(body)
    if stats is not None:
        stats["line_updates"] = plan.iter_end * nk * g.nj
        stats["pinned"] = team.pinned
        stats["stages_per_sweep"] = stages
    return g
