"""In-process publisher-consumer fabric: per-device action and event queues.

Queue paths mimic broker topic paths ("devices/<id>/actions",
"devices/<id>/events") so a networked broker adapter could be slotted in
behind the same publish/subscribe contract. Delivery is run-to-completion:
publishes that happen while a message is being delivered are queued and
drained in order, which gives every subscriber a single total order per
queue even with re-entrant producers.
"""

from __future__ import annotations

import itertools
import threading
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Dict, List, Optional, Union

from .model import Action, DeviceState


class RoutingError(Exception):
    """Publish or subscribe against a queue that was never registered."""


def action_queue(device_id: str) -> str:
    return f"devices/{device_id}/actions"


def event_queue(device_id: str) -> str:
    return f"devices/{device_id}/events"


@dataclass(frozen=True)
class ActionPayload:
    action: Action
    # Log entry that initiated this action; threaded through to the
    # resulting state change so causality chains survive restarts.
    cause_entry_seq: Optional[int] = None


@dataclass(frozen=True)
class StateChangePayload:
    old: DeviceState
    new: DeviceState
    cause_entry_seq: Optional[int] = None


Payload = Union[ActionPayload, StateChangePayload]


@dataclass(frozen=True)
class QueueMessage:
    queue_id: str
    seq: int
    at: datetime
    payload: Payload


class Subscription:
    __slots__ = ("queue_id", "consumer", "active")

    def __init__(self, queue_id: str, consumer: Callable[[QueueMessage], None]):
        self.queue_id = queue_id
        self.consumer = consumer
        self.active = True


@dataclass
class _Queue:
    queue_id: str
    seq: int = 0
    subscribers: List[Subscription] = field(default_factory=list)
    history: List[QueueMessage] = field(default_factory=list)


class MessageBus:
    """Session-scoped bus. Thread-safe; delivery order is publish order."""

    def __init__(self):
        self._queues: Dict[str, _Queue] = {}
        self._lock = threading.RLock()
        self._pending: deque = deque()
        self._dispatching = False
        self._taps: List[Callable[[QueueMessage], None]] = []
        self._sub_counter = itertools.count()

    def register_device(self, device_id: str) -> None:
        with self._lock:
            for qid in (action_queue(device_id), event_queue(device_id)):
                self._queues.setdefault(qid, _Queue(qid))

    def queue_ids(self) -> List[str]:
        with self._lock:
            return list(self._queues)

    def history(self, queue_id: str) -> List[QueueMessage]:
        with self._lock:
            return list(self._require(queue_id).history)

    def add_tap(self, consumer: Callable[[QueueMessage], None]) -> None:
        """Observe every message on every queue (UI stream feed)."""
        with self._lock:
            self._taps.append(consumer)

    def subscribe(self, queue_id: str, consumer: Callable[[QueueMessage], None]) -> Subscription:
        with self._lock:
            queue = self._require(queue_id)
            sub = Subscription(queue_id, consumer)
            queue.subscribers.append(sub)
            return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            sub.active = False
            queue = self._queues.get(sub.queue_id)
            if queue and sub in queue.subscribers:
                queue.subscribers.remove(sub)

    def publish(self, queue_id: str, payload: Payload, at: datetime) -> int:
        """Assign a seq, enqueue for delivery, and drain if not already doing so."""
        with self._lock:
            queue = self._require(queue_id)
            queue.seq += 1
            message = QueueMessage(queue_id=queue_id, seq=queue.seq, at=at, payload=payload)
            queue.history.append(message)
            # Snapshot receivers at publish time: a later subscriber must not
            # see messages published before it subscribed.
            receivers = list(queue.subscribers) + list(self._taps)
            self._pending.append((message, receivers))
            if self._dispatching:
                return message.seq
            self._dispatching = True
        while True:
            self._drain()
            with self._lock:
                # The flag is only cleared under the lock with an empty
                # backlog, so messages published concurrently are never
                # stranded: either this drainer sees them or the publisher
                # becomes the drainer.
                if not self._pending:
                    self._dispatching = False
                    return message.seq

    def _drain(self) -> None:
        while True:
            with self._lock:
                if not self._pending:
                    return
                message, receivers = self._pending.popleft()
            for receiver in receivers:
                if isinstance(receiver, Subscription):
                    if receiver.active:
                        receiver.consumer(message)
                else:
                    receiver(message)

    def _require(self, queue_id: str) -> _Queue:
        queue = self._queues.get(queue_id)
        if queue is None:
            raise RoutingError(f"unknown queue {queue_id!r}")
        return queue
