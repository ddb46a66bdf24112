"""Wavefront temporal blocking: t stacked sweep iterations per pass.

Each thread group runs t wavefronts through the k dimension of one
j-block at once; wavefront r computes sweep-iteration r of the current
round and trails wavefront r-1 by two planes, so every cell it reads
already holds the previous iteration's value.  One barrier (spanning all
N*t workers) follows every plane update.

Jacobi round structure (update numbers 1..t, rank = number - 1):
odd-numbered updates write x-y planes into a per-group ring of 2t
temporary planes; even-numbered updates write back into the source grid,
whose original planes they overwrite only two planes behind the reader
that still needs them.  The final update lands in the source grid, so no
second full grid exists.  t therefore must be even, or 1: with a single
thread the one update computes into a two-plane ring and a copy-back
trailing one plane returns it to the source grid.

Spatial blocking walks B j-blocks round-robin over the N groups, one
block per group per block-step, groups delayed by a fixed phase offset
so adjacent blocks exchange data safely.  Within a block-step, the
j-window of iteration m is the block shifted down by m-1 lines
(parallelogram skewing); a drain step after the last block finishes the
remaining lines.  The two interface lines per ring-writing iteration
that the next block needs are saved per plane into a boundary buffer of
t z-x planes and replayed into the ring by the next block's writers.

Gauss-Seidel needs no temporaries: all t iterations update the one grid
in place, groups are skewed one extra plane apart (the pipeline shift),
and the schedule reproduces the exact serial lexicographic order.
"""

import numpy as np

from ..errors import PlanError
from ..kernels import (
    JACOBI,
    jacobi_window,
    jacobi_window_jlow,
    window_fn,
)
from ..sync import barrier_create
from .plan import partition_blocks
from .team import ThreadTeam
from .threaded import resolve_barrier_kind


class TempRing:
    """2t temporary x-y planes per group, reused round robin along k.

    Each ring-writing wavefront owns a fixed alias set: 4 slots for t >= 2
    (a reader two planes behind touches planes k-3..k-1 while plane k is
    written, so four residues never collide), 2 slots for the t == 1
    copy-back scheme.  Slots are full-width padded planes; only the rows
    of the current j-window plus the replayed interface rows are touched,
    so the cache footprint stays proportional to the block size.
    """

    def __init__(self, t, njp, nip, instrument=False):
        self.capacity = 2 * t
        self.slots_per_writer = 4 if t >= 2 else 2
        self.planes = np.zeros((self.capacity, njp, nip))
        self.wtag = np.full(self.capacity, -1, dtype=np.int64) if instrument else None

    def index(self, writer, k):
        return writer * self.slots_per_writer + k % self.slots_per_writer

    def slot(self, writer, k):
        return self.planes[self.index(writer, k)]

    def tag_write(self, writer, k):
        if self.wtag is not None:
            self.wtag[self.index(writer, k)] = k

    def check_read(self, writer, k):
        if self.wtag is not None and self.wtag[self.index(writer, k)] != k:
            raise AssertionError(
                f"ring slot for plane {k} of writer {writer} holds plane "
                f"{self.wtag[self.index(writer, k)]}"
            )


class GroupBoundary:
    """Interface carry planes between consecutive j-blocks.

    Per group and ring-writing wavefront: two z-x planes (the top two
    window lines at that iteration number) double-buffered by block-step
    parity, so a group may overwrite its buffer while the group behind it
    still consumes last step's planes.  Holds 2 * (t/2) = t planes per
    parity, matching the t-plane boundary array of the scheme; the t == 1
    copy-back variant stores one plane of pre-update values instead.
    """

    def __init__(self, num_groups, writers, rows, nk, nip, instrument=False):
        self.rows = rows
        self.buf = np.zeros((num_groups, writers, 2, rows, nk, nip))
        self.tag = (
            np.full((num_groups, writers, 2, nk), -1, dtype=np.int64)
            if instrument
            else None
        )

    def outgoing(self, group, writer, q, num_groups):
        return self.buf[group, writer, (q // num_groups) % 2]

    def incoming(self, q, writer, num_groups):
        """Buffer written while block q-1 was processed."""
        return self.buf[(q - 1) % num_groups, writer, ((q - 1) // num_groups) % 2]

    def tag_write(self, group, writer, q, num_groups, k):
        if self.tag is not None:
            self.tag[group, writer, (q // num_groups) % 2, k] = q

    def check_read(self, q, writer, num_groups, k):
        if self.tag is not None:
            got = self.tag[(q - 1) % num_groups, writer, ((q - 1) // num_groups) % 2, k]
            if got != q - 1:
                raise AssertionError(
                    f"boundary buffer for interface {q - 1}|{q} plane {k} "
                    f"holds step {got}"
                )


def _window(start, end, shift, nj):
    return max(start - shift, 0), min(end - shift, nj)


def run_wavefront(plan, g, placement=None, stats=None, instrument=False):
    """Dispatch to the Jacobi or Gauss-Seidel wavefront engine."""
    if plan.kernel == JACOBI:
        return _run_wavefront_jacobi(plan, g, placement, stats, instrument)
    return _run_wavefront_gs(plan, g, placement, stats, instrument)


def run_wavefront_jacobi(plan, g, placement=None, stats=None, instrument=False):
    if plan.kernel != JACOBI:
        raise PlanError(f"jacobi wavefront engine got kernel {plan.kernel!r}")
    return _run_wavefront_jacobi(plan, g, placement, stats, instrument)


def run_wavefront_gs(plan, g, placement=None, stats=None, instrument=False):
    if plan.kernel == JACOBI:
        raise PlanError("gs wavefront engine needs a Gauss-Seidel kernel")
    return _run_wavefront_gs(plan, g, placement, stats, instrument)


def _schedule(plan, g):
    """Common block schedule: extended block list, steps per round."""
    cfg = plan.config
    if cfg is None:
        raise PlanError("wavefront engines need a plan with a WavefrontConfig")
    t = cfg.threads_per_group
    n = cfg.num_groups
    blocks = partition_blocks(g.nj, cfg.blocks)
    if t >= 2:
        blocks = blocks + [(g.nj, g.nj + t - 1)]  # drain pseudo-block
    steps = -(-len(blocks) // n)
    return t, n, blocks, steps


def _run_wavefront_jacobi(plan, g, placement, stats, instrument):
    t, n, blocks, steps = _schedule(plan, g)
    if plan.iter_end == 0:
        if stats is not None:
            stats["line_updates"] = 0
        return g

    nk, nj = g.nk, g.nj
    njp, nip = nj + 2, g.ni + 2
    a, b = plan.coeffs.a, plan.coeffs.b
    sd = g.data
    rounds = plan.iter_end // t
    delta = 2  # inter-group phase delay; see module docstring
    length = nk + 2 * (t - 1) if t >= 2 else nk + 1
    if n > 1:
        # a block step must outlast the group delays, or a group would reach
        # its next block before the previous block's interface lines exist
        length = max(length, delta * (n - 1) + 2)
    span = rounds * steps * length
    phases = span + delta * (n - 1)
    nblocks = len(blocks)
    writers = max(t // 2, 1)

    rings = [TempRing(t, njp, nip, instrument) for _ in range(n)]
    bounds = GroupBoundary(n, writers, 2 if t >= 2 else 1, nk, nip, instrument)
    bar = barrier_create(
        n * t, resolve_barrier_kind(plan.barrier_kind, n * t), debug=instrument
    )
    progress = [(-1, -1)] * (n * t) if instrument else None
    counts = [0] * (n * t)

    def jacobi_even(gid, r, q, k, start, end):
        ring = rings[gid]
        w0, w1 = _window(start, end, r, nj)
        cw0, cw1 = _window(start, end, r + 1, nj)
        if w1 <= w0 and cw1 <= cw0:
            return
        w = r // 2
        slot = ring.slot(w, k)
        srcp = sd[k + 1]
        slot[0, :] = srcp[0, :]
        slot[njp - 1, :] = srcp[njp - 1, :]
        if q >= 1:
            bin_ = bounds.incoming(q, w, n)
            replayed = False
            for bi, row in ((0, start - r - 2), (1, start - r - 1)):
                if 0 <= row < nj:
                    slot[row + 1, :] = bin_[bi, k, :]
                    replayed = True
            if replayed and instrument:
                bounds.check_read(q, w, n, k)
        if cw1 > cw0:
            slot[cw0 + 1:cw1 + 1, 0] = srcp[cw0 + 1:cw1 + 1, 0]
            slot[cw0 + 1:cw1 + 1, nip - 1] = srcp[cw0 + 1:cw1 + 1, nip - 1]
        if w1 > w0:
            jacobi_window(slot, sd[k], sd[k + 1], sd[k + 2], a, b, w0 + 1, w1 + 1)
            counts[gid * t + r] += w1 - w0
        ring.tag_write(w, k)
        bout = bounds.outgoing(gid, w, q, n)
        saved = False
        for bi, row in ((0, end - r - 2), (1, end - r - 1)):
            if 0 <= row < nj:
                if w0 <= row < w1:
                    bout[bi, k, :] = slot[row + 1, :]
                else:  # width-1 block: finalized one interface earlier
                    bout[bi, k, :] = bounds.incoming(q, w, n)[1, k, :]
                saved = True
        if saved:
            bounds.tag_write(gid, w, q, n, k)

    def jacobi_odd(gid, r, q, k, start, end):
        w0, w1 = _window(start, end, r, nj)
        if w1 <= w0:
            return
        ring = rings[gid]
        w = (r - 1) // 2

        def rd(kq):
            if 0 <= kq < nk:
                if instrument:
                    ring.check_read(w, kq)
                return ring.slot(w, kq)
            return sd[kq + 1]  # boundary planes never change

        jacobi_window(sd[k + 1], rd(k - 1), rd(k), rd(k + 1), a, b, w0 + 1, w1 + 1)
        counts[gid * t + r] += w1 - w0

    def jacobi_t1(gid, q, pi, start, end):
        ring = rings[gid]
        if pi < nk:
            k = pi
            slot = ring.slot(0, k)
            if q >= 1:
                if instrument:
                    bounds.check_read(q, 0, n, k)
                ov = bounds.incoming(q, 0, n)[0, k]
                jacobi_window_jlow(
                    slot, sd[k], sd[k + 1], sd[k + 2], ov, a, b, start + 1, end + 1
                )
            else:
                jacobi_window(slot, sd[k], sd[k + 1], sd[k + 2], a, b, start + 1, end + 1)
            ring.tag_write(0, k)
            counts[gid * t] += end - start
        kk = pi - 1
        if 0 <= kk < nk:
            # save the pre-update top line, then retire the plane in place
            bounds.outgoing(gid, 0, q, n)[0, kk, :] = sd[kk + 1][end, :]
            bounds.tag_write(gid, 0, q, n, kk)
            if instrument:
                ring.check_read(0, kk)
            sd[kk + 1][start + 1:end + 1, 1:nip - 1] = ring.slot(0, kk)[
                start + 1:end + 1, 1:nip - 1
            ]

    def body(idx):
        gid, r = divmod(idx, t)
        my_delay = delta * gid
        for phi in range(phases):
            local = phi - my_delay
            if 0 <= local < span:
                sg, pi = divmod(local, length)
                q = (sg % steps) * n + gid
                if q < nblocks:
                    start, end = blocks[q]
                    if t == 1:
                        jacobi_t1(gid, q, pi, start, end)
                    else:
                        k = pi - 2 * r
                        if 0 <= k < nk:
                            if instrument and r > 0:
                                pw0, pw1 = _window(start, end, r - 1, nj)
                                if pw1 > pw0:
                                    psg, pk = progress[idx - 1]
                                    if not (psg == sg and pk >= min(k + 1, nk - 1)):
                                        raise AssertionError(
                                            f"skew violation: rank {r} at plane {k} "
                                            f"but rank {r - 1} progress {(psg, pk)}"
                                        )
                            if r % 2 == 0:
                                jacobi_even(gid, r, q, k, start, end)
                            else:
                                jacobi_odd(gid, r, q, k, start, end)
                            if instrument:
                                progress[idx] = (sg, k)
            bar.wait(idx)

    team = ThreadTeam(n * t, placement=placement, barriers=[bar])
    team.run(body)
    if stats is not None:
        stats["line_updates"] = sum(counts)
        stats["barrier_phases"] = phases
        stats["pinned"] = team.pinned
    return g


def _run_wavefront_gs(plan, g, placement, stats, instrument):
    t, n, blocks, steps = _schedule(plan, g)
    if plan.iter_end == 0:
        if stats is not None:
            stats["line_updates"] = 0
        return g

    nk, nj = g.nk, g.nj
    b = plan.coeffs.b
    win = window_fn(plan.kernel)
    d = g.data
    rounds = plan.iter_end // t
    delta = 1  # pipeline shift between groups preserves lexicographic order
    length = nk + 2 * (t - 1)
    if n > 1:
        length = max(length, delta * (n - 1) + 2)
    span = rounds * steps * length
    phases = span + delta * (n - 1)
    nblocks = len(blocks)

    bar = barrier_create(
        n * t, resolve_barrier_kind(plan.barrier_kind, n * t), debug=instrument
    )
    progress = [(-1, -1)] * (n * t) if instrument else None
    counts = [0] * (n * t)

    def body(idx):
        gid, r = divmod(idx, t)
        my_delay = delta * gid
        for phi in range(phases):
            local = phi - my_delay
            if 0 <= local < span:
                sg, pi = divmod(local, length)
                q = (sg % steps) * n + gid
                if q < nblocks:
                    start, end = blocks[q]
                    k = pi - 2 * r
                    if 0 <= k < nk:
                        w0, w1 = _window(start, end, r, nj)
                        if w1 > w0:
                            if instrument and r > 0:
                                pw0, pw1 = _window(start, end, r - 1, nj)
                                if pw1 > pw0:
                                    psg, pk = progress[idx - 1]
                                    if not (psg == sg and pk >= min(k + 1, nk - 1)):
                                        raise AssertionError(
                                            f"skew violation: rank {r} at plane {k} "
                                            f"but rank {r - 1} progress {(psg, pk)}"
                                        )
                            win(d[k], d[k + 1], d[k + 2], b, w0 + 1, w1 + 1)
                            counts[idx] += w1 - w0
                            if instrument:
                                progress[idx] = (sg, k)
            bar.wait(idx)

    team = ThreadTeam(n * t, placement=placement, barriers=[bar])
    team.run(body)
    if stats is not None:
        stats["line_updates"] = sum(counts)
        stats["barrier_phases"] = phases
        stats["pinned"] = team.pinned
    return g
