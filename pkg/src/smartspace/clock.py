"""Virtual and wall clocks behind one scheduling contract.

The virtual clock only moves when told to, which makes every
schedule-dependent behavior deterministic in tests and in the scenario
harness. Both implementations are safe for concurrent schedule/cancel.
"""

from __future__ import annotations

import heapq
import itertools
import threading
from datetime import datetime, timedelta
from typing import Callable, List, Optional


class ScheduleHandle:
    """Cancellation handle; a cancelled handle never fires."""

    __slots__ = ("at", "_cancelled", "_fired", "_timer")

    def __init__(self, at: datetime):
        self.at = at
        self._cancelled = False
        self._fired = False
        self._timer: Optional[threading.Timer] = None

    def cancel(self) -> None:
        self._cancelled = True
        if self._timer is not None:
            self._timer.cancel()

    @property
    def cancelled(self) -> bool:
        return self._cancelled

    @property
    def fired(self) -> bool:
        return self._fired


class Clock:
    """Time source plus one-shot scheduling. now() is monotone."""

    def now(self) -> datetime:
        raise NotImplementedError

    def schedule(self, at: datetime, callback: Callable[[], None]) -> ScheduleHandle:
        raise NotImplementedError


class VirtualClock(Clock):
    """Test-controlled clock; wakeups fire inline during advance().

    Due wakeups with equal timestamps fire in scheduling order, which the
    engine relies on for deterministic simultaneous fires.
    """

    def __init__(self, start: datetime):
        self._now = start
        self._heap: List = []
        self._counter = itertools.count()
        self._lock = threading.RLock()

    def now(self) -> datetime:
        with self._lock:
            return self._now

    def schedule(self, at: datetime, callback: Callable[[], None]) -> ScheduleHandle:
        handle = ScheduleHandle(at)
        with self._lock:
            heapq.heappush(self._heap, (at, next(self._counter), handle, callback))
        return handle

    def advance(self, delta: timedelta) -> datetime:
        return self.advance_to(self.now() + delta)

    def advance_to(self, target: datetime) -> datetime:
        """Move time forward, firing every due wakeup in timestamp order."""
        if target < self.now():
            raise ValueError("virtual clock cannot move backwards")
        while True:
            with self._lock:
                if not self._heap or self._heap[0][0] > target:
                    break
                at, _, handle, callback = heapq.heappop(self._heap)
                if handle.cancelled:
                    continue
                # Wakeups fire at their own timestamp, never before.
                self._now = max(self._now, at)
                handle._fired = True
            callback()
        with self._lock:
            self._now = max(self._now, target)
            return self._now

    @property
    def pending_count(self) -> int:
        with self._lock:
            return sum(1 for _, _, h, _ in self._heap if not h.cancelled and not h.fired)


class WallClock(Clock):
    """Real-time clock backed by threading.Timer."""

    def __init__(self):
        self._lock = threading.Lock()
        self._last = datetime.now()

    def now(self) -> datetime:
        with self._lock:
            # Guard monotonicity against system clock regressions.
            current = datetime.now()
            if current > self._last:
                self._last = current
            return self._last

    def schedule(self, at: datetime, callback: Callable[[], None]) -> ScheduleHandle:
        handle = ScheduleHandle(at)
        delay = max(0.0, (at - self.now()).total_seconds())

        def fire() -> None:
            if not handle.cancelled:
                handle._fired = True
                callback()

        timer = threading.Timer(delay, fire)
        timer.daemon = True
        handle._timer = timer
        timer.start()
        return handle
