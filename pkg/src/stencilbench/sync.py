"""Reusable phase barriers for fixed thread teams.

Two forms: a centralized spin barrier (single arrival counter plus a
release epoch) for small teams, and an arity-2 tree barrier that scales
better once hardware threads are oversubscribed.  Both are pure
spin-and-yield constructs -- no condition variables -- because sweep
phases are short and a sleeping barrier would dominate them.

CPython notes: the GIL makes single attribute/list-slot reads and writes
atomic and sequentially consistent, and `next()` on an itertools.count
is an atomic fetch-and-increment.  The relax hint is `time.sleep(0)`
(yield the GIL); a bounded backoff caps burn when a partner thread is
descheduled.
"""

import itertools
import math
import threading
import time

from .errors import ConfigError

CENTRAL = "central-spin"
TREE = "tree"
KINDS = (CENTRAL, TREE)

_BACKOFF_AFTER = 256
_BACKOFF_SECONDS = 50e-6


class BarrierPoisoned(RuntimeError):
    """Raised in waiters after poison(): a teammate died, unwind."""


def _relax(spins):
    if spins < _BACKOFF_AFTER:
        time.sleep(0)
    else:
        time.sleep(_BACKOFF_SECONDS)


class CentralSpinBarrier:
    """Single atomic arrival counter + monotone release epoch."""

    kind = CENTRAL

    def __init__(self, team_size, debug=False):
        if team_size < 1:
            raise ConfigError(f"barrier team size must be >= 1, got {team_size}")
        self.team_size = team_size
        self._arrivals = itertools.count()
        self._released = 0  # number of fully completed phases
        self._phase = [0] * team_size
        self._debug = debug
        self._poisoned = False

    def poison(self):
        self._poisoned = True

    def wait(self, rank):
        if self._poisoned:
            raise BarrierPoisoned("barrier poisoned by a failed teammate")
        p = self._phase[rank]
        n = next(self._arrivals)
        if self._debug and n // self.team_size != p:
            raise RuntimeError(
                f"barrier misuse: rank {rank} arrival {n} outside phase {p} block"
            )
        if n + 1 == (p + 1) * self.team_size:
            self._released = p + 1
        else:
            spins = 0
            while self._released <= p:
                if self._poisoned:
                    raise BarrierPoisoned("barrier poisoned by a failed teammate")
                _relax(spins)
                spins += 1
        self._phase[rank] = p + 1
        return p


class TreeBarrier:
    """Arity-2 tree: leaf-to-root arrival, root-to-leaf release.

    Ranks form a binary heap; node r waits for children 2r+1 and 2r+2,
    propagates its arrival epoch upward, then fans the release epoch back
    down.  Epoch counters never reset, so the barrier is reusable without
    reinitialization and a fast thread cannot release phase-p waiters
    from phase p+1.
    """

    kind = TREE
    arity = 2

    def __init__(self, team_size, debug=False):
        if team_size < 1:
            raise ConfigError(f"barrier team size must be >= 1, got {team_size}")
        self.team_size = team_size
        self._arrive = [0] * team_size
        self._release = [0] * team_size
        self._phase = [0] * team_size
        self._debug = debug
        self._entered = [0] * team_size
        self._poisoned = False

    @property
    def levels(self):
        return 0 if self.team_size == 1 else math.ceil(math.log2(self.team_size))

    def poison(self):
        self._poisoned = True

    def _spin(self, slot_list, idx, epoch):
        spins = 0
        while slot_list[idx] < epoch:
            if self._poisoned:
                raise BarrierPoisoned("barrier poisoned by a failed teammate")
            _relax(spins)
            spins += 1

    def wait(self, rank):
        if self._poisoned:
            raise BarrierPoisoned("barrier poisoned by a failed teammate")
        e = self._phase[rank] + 1
        if self._debug:
            if self._entered[rank] >= e:
                raise RuntimeError(f"barrier misuse: rank {rank} re-entered phase {e - 1}")
            self._entered[rank] = e
        t = self.team_size
        c1 = 2 * rank + 1
        c2 = c1 + 1
        if c1 < t:
            self._spin(self._arrive, c1, e)
        if c2 < t:
            self._spin(self._arrive, c2, e)
        if rank != 0:
            self._arrive[rank] = e
            self._spin(self._release, rank, e)
        if c1 < t:
            self._release[c1] = e
        if c2 < t:
            self._release[c2] = e
        self._phase[rank] = e
        return e - 1


def barrier_create(team_size, kind, debug=False):
    if kind in (CENTRAL, "central"):
        return CentralSpinBarrier(team_size, debug=debug)
    if kind == TREE:
        return TreeBarrier(team_size, debug=debug)
    raise ConfigError(f"unknown barrier kind {kind!r}")


def barrier_wait(barrier, rank):
    return barrier.wait(rank)


def measure_barrier_latency(kind, team_size, phases=20000):
    """Seconds per completed phase for a full team; plumbing, no reference
    value to compare against."""
    bar = barrier_create(team_size, kind)
    t0 = [0.0]
    t1 = [0.0]

    def body(rank):
        if rank == 0:
            t0[0] = time.perf_counter()
        for _ in range(phases):
            bar.wait(rank)
        if rank == 0:
            t1[0] = time.perf_counter()

    threads = [threading.Thread(target=body, args=(r,)) for r in range(team_size)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    return (t1[0] - t0[0]) / phases
