"""Simulated device controllers.

Each simulator consumes its device's action queue, applies the action to
its local state and publishes exactly one state change iff the state
actually changed. Sensors can additionally run a scripted timeline of
states against the virtual clock, which is how scenario tests drive
event rules.
"""

from __future__ import annotations

from datetime import datetime
from typing import Dict, Iterable, Optional, Sequence, Tuple

from .bus import (ActionPayload, MessageBus, QueueMessage, StateChangePayload,
                  action_queue, event_queue)
from .clock import Clock
from .model import DeviceDescriptor, DeviceState, Value, apply_action


class ScenarioError(Exception):
    pass


class SimulatedDevice:
    def __init__(self, descriptor: DeviceDescriptor, bus: MessageBus, clock: Clock):
        self.descriptor = descriptor
        self.bus = bus
        self.clock = clock
        self.state = DeviceState(descriptor.id, descriptor.initial_value(), clock.now())
        self._timeline_active = False
        bus.subscribe(action_queue(descriptor.id), self._on_action)

    def _on_action(self, message: QueueMessage) -> None:
        payload = message.payload
        if not isinstance(payload, ActionPayload):
            return
        old = self.state
        new = apply_action(old, payload.action, message.at)
        if new.value == old.value:
            return  # idempotent action: no transition, no event
        self.state = new
        self.bus.publish(
            event_queue(self.descriptor.id),
            StateChangePayload(old=old, new=new, cause_entry_seq=payload.cause_entry_seq),
            at=message.at,
        )

    def set_state(self, value: Value, at: Optional[datetime] = None) -> None:
        """External injection (scenario step or sim endpoint)."""
        at = at or self.clock.now()
        old = self.state
        if old.value == value:
            return
        new = DeviceState(self.descriptor.id, value, at)
        self.state = new
        self.bus.publish(
            event_queue(self.descriptor.id),
            StateChangePayload(old=old, new=new, cause_entry_seq=None),
            at=at,
        )

    def run_timeline(self, timeline: Sequence[Tuple[datetime, Value]]) -> None:
        """Schedule a scripted sequence of states against the clock."""
        if self._timeline_active:
            raise ScenarioError(f"device {self.descriptor.id!r} already runs a scenario")
        last: Optional[datetime] = None
        for at, _ in timeline:
            if last is not None and at <= last:
                raise ScenarioError("timeline timestamps must be strictly increasing")
            last = at
        if not timeline:
            return
        self._timeline_active = True
        remaining = len(timeline)

        def make_step(value: Value, at: datetime):
            def step() -> None:
                nonlocal remaining
                self.set_state(value, at)
                remaining -= 1
                if remaining == 0:
                    self._timeline_active = False

            return step

        for at, value in timeline:
            self.clock.schedule(at, make_step(value, at))


def build_devices(
    registry: Iterable[DeviceDescriptor], bus: MessageBus, clock: Clock
) -> Dict[str, SimulatedDevice]:
    devices: Dict[str, SimulatedDevice] = {}
    for descriptor in registry:
        bus.register_device(descriptor.id)
        devices[descriptor.id] = SimulatedDevice(descriptor, bus, clock)
    return devices
