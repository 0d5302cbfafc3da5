from __future__ import annotations

import random
from datetime import datetime

import pytest

from smartspace.bus import (ActionPayload, MessageBus, RoutingError,
                            StateChangePayload, action_queue, event_queue)
from smartspace.model import Action, ActionKind

AT = datetime(2021, 1, 4, 7, 0)


def _payload(device_id: str = "light-1") -> ActionPayload:
    return ActionPayload(Action(device_id, ActionKind.TURN_ON))


def make_bus(*device_ids: str) -> MessageBus:
    bus = MessageBus()
    for device_id in device_ids or ("light-1",):
        bus.register_device(device_id)
    return bus


def test_queue_paths_are_exact():
    assert action_queue("light-1") == "devices/light-1/actions"
    assert event_queue("light-1") == "devices/light-1/events"


def test_publish_assigns_increasing_seq():
    bus = make_bus()
    seqs = [bus.publish(action_queue("light-1"), _payload(), AT) for _ in range(5)]
    assert seqs == [1, 2, 3, 4, 5]


def test_unknown_queue_raises():
    bus = make_bus()
    with pytest.raises(RoutingError):
        bus.publish("devices/ghost/actions", _payload("ghost"), AT)


def test_subscriber_receives_in_order():
    bus = make_bus()
    seen = []
    bus.subscribe(action_queue("light-1"), lambda m: seen.append(m.seq))
    for _ in range(4):
        bus.publish(action_queue("light-1"), _payload(), AT)
    assert seen == [1, 2, 3, 4]


def test_unsubscribe_stops_delivery():
    bus = make_bus()
    seen = []
    sub = bus.subscribe(action_queue("light-1"), lambda m: seen.append(m.seq))
    bus.unsubscribe(sub)
    bus.publish(action_queue("light-1"), _payload(), AT)
    assert seen == []


def test_two_subscribers_both_receive():
    bus = make_bus()
    a, b = [], []
    bus.subscribe(action_queue("light-1"), lambda m: a.append(m.seq))
    bus.subscribe(action_queue("light-1"), lambda m: b.append(m.seq))
    for _ in range(3):
        bus.publish(action_queue("light-1"), _payload(), AT)
    assert a == b == [1, 2, 3]


def test_late_subscriber_misses_backlog():
    bus = make_bus()
    bus.publish(action_queue("light-1"), _payload(), AT)
    seen = []
    bus.subscribe(action_queue("light-1"), lambda m: seen.append(m.seq))
    bus.publish(action_queue("light-1"), _payload(), AT)
    assert seen == [2]


def test_reentrant_publish_keeps_fifo():
    # A consumer that publishes onto another queue must not reorder the
    # queue it is consuming.
    bus = make_bus("light-1", "light-2")
    seen_one, seen_two = [], []

    def chain(message):
        seen_one.append(message.seq)
        if message.seq == 1:
            bus.publish(action_queue("light-2"), _payload("light-2"), AT)
            bus.publish(action_queue("light-2"), _payload("light-2"), AT)

    bus.subscribe(action_queue("light-1"), chain)
    bus.subscribe(action_queue("light-2"), lambda m: seen_two.append(m.seq))
    bus.publish(action_queue("light-1"), _payload(), AT)
    bus.publish(action_queue("light-1"), _payload(), AT)
    assert seen_one == [1, 2]
    assert seen_two == [1, 2]


def test_multi_producer_interleaving_preserves_fifo():
    # Stress oracle: whatever the interleaving of producers, each
    # subscriber observes exactly the per-queue publish order, gap-free.
    rng = random.Random(20210104)
    device_ids = [f"d{i}" for i in range(4)]
    bus = make_bus(*device_ids)
    observed = {d: [] for d in device_ids}
    for device_id in device_ids:
        bus.subscribe(action_queue(device_id),
                      lambda m, d=device_id: observed[d].append(m.seq))
    published = {d: 0 for d in device_ids}
    for _ in range(500):
        device_id = rng.choice(device_ids)
        seq = bus.publish(action_queue(device_id), _payload(device_id), AT)
        published[device_id] += 1
        assert seq == published[device_id]
    for device_id in device_ids:
        assert observed[device_id] == list(range(1, published[device_id] + 1))
