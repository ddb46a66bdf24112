"""Fixed worker-thread team with optional pinning and failure containment."""

import logging
import threading

from ..errors import PlacementError
from ..topo import PinningError, pin_current_thread

log = logging.getLogger(__name__)


class ThreadTeam:
    """Spawns `size` workers once, runs one body(rank) in each, joins.

    If a placement list is given, worker `rank` is pinned to
    placement[rank]; pinning failures downgrade to a warning and the team
    reports pinned=False.  A worker exception poisons the supplied
    barriers so sibling workers unwind from their spin loops instead of
    deadlocking, and is re-raised in the caller.
    """

    def __init__(self, size, placement=None, barriers=()):
        if placement is not None and len(placement) < size:
            raise PlacementError(
                f"placement lists {len(placement)} hardware threads, need {size}"
            )
        self.size = size
        self.placement = list(placement)[:size] if placement is not None else None
        self.barriers = list(barriers)
        self.pinned = None if placement is None else True

    def run(self, body):
        errors = [None] * self.size

        def worker(rank):
            if self.placement is not None:
                try:
                    pin_current_thread(self.placement[rank])
                except PinningError as exc:
                    log.warning("UNPINNED: worker %d not pinned: %s", rank, exc)
                    self.pinned = False
            try:
                body(rank)
            except BaseException as exc:  # noqa: BLE001 - forwarded to caller
                errors[rank] = exc
                for bar in self.barriers:
                    poison = getattr(bar, "poison", None)
                    if poison:
                        poison()

        if self.size == 1:
            worker(0)
        else:
            threads = [
                threading.Thread(target=worker, args=(r,), name=f"sweep-worker-{r}")
                for r in range(self.size)
            ]
            for th in threads:
                th.start()
            for th in threads:
                th.join()
        for exc in errors:
            if exc is not None:
                raise exc
        return self
