from __future__ import annotations

from datetime import datetime
from typing import List, Optional, Sequence

import pytest

from smartspace.bus import MessageBus
from smartspace.causality import CommandLog
from smartspace.clock import VirtualClock
from smartspace.devices import SimulatedDevice, build_devices
from smartspace.engine import Engine
from smartspace.model import ActionKind, DeviceDescriptor, DeviceKind

TOGGLE_ACTIONS = frozenset({ActionKind.TURN_ON, ActionKind.TURN_OFF})

START = datetime(2021, 1, 4, 7, 0)  # a Monday morning


def toggleable(device_id: str, name: str) -> DeviceDescriptor:
    return DeviceDescriptor(device_id, name, DeviceKind.TOGGLEABLE, TOGGLE_ACTIONS)


def sensor(device_id: str, name: str, unit: str = "") -> DeviceDescriptor:
    return DeviceDescriptor(device_id, name, DeviceKind.SENSOR, frozenset(),
                            emits_events=True, unit=unit)


def demo_registry() -> List[DeviceDescriptor]:
    return [
        toggleable("bedroom-light", "bedroom light"),
        toggleable("living-room-light", "living room light"),
        toggleable("kitchen-light", "kitchen light"),
        toggleable("toaster", "toaster"),
        sensor("motion-sensor", "motion sensor"),
        sensor("temperature-sensor", "temperature sensor", unit="degrees"),
        DeviceDescriptor("thermostat", "thermostat", DeviceKind.THERMOSTAT,
                         frozenset({ActionKind.SET_VALUE}), unit="degrees"),
    ]


class Harness:
    """One wired engine over simulated devices and a virtual clock."""

    def __init__(self, registry: Sequence[DeviceDescriptor], start: datetime = START,
                 log: Optional[CommandLog] = None):
        self.clock = VirtualClock(start)
        self.bus = MessageBus()
        self.log = log if log is not None else CommandLog()
        self.devices = build_devices(registry, self.bus, self.clock)
        self.engine = Engine(registry, self.bus, self.clock, self.log)

    def device(self, device_id: str) -> SimulatedDevice:
        return self.devices[device_id]


@pytest.fixture
def registry() -> List[DeviceDescriptor]:
    return demo_registry()


@pytest.fixture
def harness(registry) -> Harness:
    return Harness(registry)


@pytest.fixture
def two_lights() -> List[DeviceDescriptor]:
    return [
        toggleable("bedroom-light", "bedroom light"),
        toggleable("living-room-light", "living room light"),
    ]
