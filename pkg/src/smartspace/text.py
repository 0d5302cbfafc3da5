"""Canonical English rendering of times, actions, conditions and commands.

Reply wording is part of the test contract (golden transcripts), so every
string produced here is frozen: change one and the goldens must change
with it. Two clock styles exist on purpose: compact ("8 AM") for why
answers, full ("8:00 AM") for rule listings.
"""

from __future__ import annotations

from datetime import time
from typing import TYPE_CHECKING, Mapping

from .model import (Action, ActionKind, Condition, Direction, PredicateKind,
                    TimeSpecKind)

if TYPE_CHECKING:  # pragma: no cover
    from .engine import Command
    from .model import DeviceDescriptor


def clock_compact(t: time) -> str:
    """"8 AM", "7:50 AM", "5 PM"."""
    hour = t.hour % 12 or 12
    suffix = "AM" if t.hour < 12 else "PM"
    if t.minute:
        return f"{hour}:{t.minute:02d} {suffix}"
    return f"{hour} {suffix}"


def clock_full(t: time) -> str:
    """"8:00 AM", "4:00 PM"."""
    hour = t.hour % 12 or 12
    suffix = "AM" if t.hour < 12 else "PM"
    return f"{hour}:{t.minute:02d} {suffix}"


def _device_name(registry: Mapping[str, "DeviceDescriptor"], device_id: str) -> str:
    descriptor = registry.get(device_id)
    return descriptor.name if descriptor else device_id


def action_phrase(action: Action, registry: Mapping[str, "DeviceDescriptor"]) -> str:
    name = _device_name(registry, action.device_id)
    if action.kind is ActionKind.TURN_ON:
        return f"turn on the {name}"
    if action.kind is ActionKind.TURN_OFF:
        return f"turn off the {name}"
    assert action.argument is not None
    return f"set the {name} to {action.argument}"


def onoff_word(action: Action) -> str:
    return "off" if action.kind is ActionKind.TURN_OFF else "on"


def condition_phrase(cond: Condition, registry: Mapping[str, "DeviceDescriptor"],
                     past: bool = False) -> str:
    name = _device_name(registry, cond.device_id)
    if cond.predicate is PredicateKind.ACTIVATED:
        verb = "was activated" if past else "is activated"
    elif cond.predicate is PredicateKind.BECAME_ON:
        verb = "turned on" if past else "turns on"
    elif cond.predicate is PredicateKind.BECAME_OFF:
        verb = "turned off" if past else "turns off"
    else:
        direction = "above" if cond.direction is Direction.UP else "below"
        verb = ("went" if past else "goes") + f" {direction} {cond.threshold:g}"
    return f"the {name} {verb}"


def describe_command(cmd: "Command", registry: Mapping[str, "DeviceDescriptor"]) -> str:
    """Lowercase clause, e.g. "turn on the bedroom light every day at 8:00 AM"."""
    base = action_phrase(cmd.action, registry)
    spec = cmd.time
    kind = cmd.kind.value
    if kind == "direct":
        return base
    if kind == "event_rule":
        assert cmd.trigger is not None
        return f"{base} when {condition_phrase(cmd.trigger, registry)}"
    assert spec is not None
    if kind == "delayed":
        if cmd.scheduled_for is not None:
            return f"{base} at {clock_full(cmd.scheduled_for.time())}"
        if spec.kind is TimeSpecKind.INSTANT and spec.instant is not None:
            return f"{base} at {clock_full(spec.instant.time())}"
        return f"{base} in {spec.delay_seconds:g} seconds"
    if kind == "period":
        assert spec.period_start is not None and spec.period_end is not None
        return (f"{base} from {clock_full(spec.period_start.time())}"
                f" to {clock_full(spec.period_end.time())}")
    if kind == "repeating":
        assert spec.at is not None
        return f"{base} every day at {clock_full(spec.at)}"
    assert spec.start is not None and spec.end is not None
    return f"{base} every day from {clock_full(spec.start)} to {clock_full(spec.end)}"


def sentence(clause: str) -> str:
    return clause[0].upper() + clause[1:] + "."
