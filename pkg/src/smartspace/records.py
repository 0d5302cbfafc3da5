"""Plain-dict encodings of the domain types.

Single authority for the field names that appear in the registry file,
the command log and the wire API. FORMATS.md documents them; golden
fixtures in the test suite freeze them.
"""

from __future__ import annotations

from datetime import datetime, time
from typing import Optional

from .causality import Actor, ActorKind, Effect, EffectKind, LogEntry
from .model import (Action, ActionKind, Condition, DeviceDescriptor,
                    DeviceKind, DeviceState, Direction, OnOff, PredicateKind,
                    Scalar, TimeSpec, TimeSpecKind, Value)


def device_to_record(descriptor: DeviceDescriptor) -> dict:
    record = {
        "id": descriptor.id,
        "name": descriptor.name,
        "kind": descriptor.kind.value,
        "supported_actions": sorted(a.value for a in descriptor.supported_actions),
        "emits_events": descriptor.emits_events,
    }
    if descriptor.unit:
        record["unit"] = descriptor.unit
    return record


def device_from_record(record: dict) -> DeviceDescriptor:
    return DeviceDescriptor(
        id=record["id"],
        name=record["name"],
        kind=DeviceKind(record["kind"]),
        supported_actions=frozenset(ActionKind(a) for a in record["supported_actions"]),
        emits_events=record.get("emits_events", False),
        unit=record.get("unit", ""),
    )


def value_to_record(value: Value) -> dict:
    if isinstance(value, OnOff):
        return {"on": value.on}
    return {"value": value.value, "unit": value.unit}


def value_from_record(record: dict) -> Value:
    if "on" in record:
        return OnOff(on=record["on"])
    return Scalar(value=record["value"], unit=record.get("unit", ""))


def state_to_record(state: DeviceState) -> dict:
    return {
        "device_id": state.device_id,
        "value": value_to_record(state.value),
        "updated_at": state.updated_at.isoformat(),
    }


def state_from_record(record: dict) -> DeviceState:
    return DeviceState(
        device_id=record["device_id"],
        value=value_from_record(record["value"]),
        updated_at=datetime.fromisoformat(record["updated_at"]),
    )


def action_to_record(action: Action) -> dict:
    record: dict = {"device_id": action.device_id, "kind": action.kind.value}
    if action.argument is not None:
        record["argument"] = {"value": action.argument.value, "unit": action.argument.unit}
    return record


def action_from_record(record: dict) -> Action:
    argument: Optional[Scalar] = None
    if record.get("argument") is not None:
        argument = Scalar(record["argument"]["value"], record["argument"].get("unit", ""))
    return Action(device_id=record["device_id"], kind=ActionKind(record["kind"]),
                  argument=argument)


def condition_to_record(cond: Condition) -> dict:
    record: dict = {"device_id": cond.device_id, "predicate": cond.predicate.value}
    if cond.direction is not None:
        record["direction"] = cond.direction.value
    if cond.threshold is not None:
        record["threshold"] = cond.threshold
    return record


def condition_from_record(record: dict) -> Condition:
    return Condition(
        device_id=record["device_id"],
        predicate=PredicateKind(record["predicate"]),
        direction=Direction(record["direction"]) if record.get("direction") else None,
        threshold=record.get("threshold"),
    )


def timespec_to_record(spec: TimeSpec) -> dict:
    record: dict = {"kind": spec.kind.value}
    if spec.instant is not None:
        record["instant"] = spec.instant.isoformat()
    if spec.delay_seconds is not None:
        record["delay_seconds"] = spec.delay_seconds
    if spec.at is not None:
        record["at"] = spec.at.isoformat()
    if spec.start is not None:
        record["start"] = spec.start.isoformat()
    if spec.end is not None:
        record["end"] = spec.end.isoformat()
    if spec.period_start is not None:
        record["period_start"] = spec.period_start.isoformat()
    if spec.period_end is not None:
        record["period_end"] = spec.period_end.isoformat()
    return record


def timespec_from_record(record: dict) -> TimeSpec:
    return TimeSpec(
        kind=TimeSpecKind(record["kind"]),
        instant=datetime.fromisoformat(record["instant"]) if record.get("instant") else None,
        delay_seconds=record.get("delay_seconds"),
        at=time.fromisoformat(record["at"]) if record.get("at") else None,
        start=time.fromisoformat(record["start"]) if record.get("start") else None,
        end=time.fromisoformat(record["end"]) if record.get("end") else None,
        period_start=(datetime.fromisoformat(record["period_start"])
                      if record.get("period_start") else None),
        period_end=(datetime.fromisoformat(record["period_end"])
                    if record.get("period_end") else None),
    )


def actor_to_record(actor: Actor) -> dict:
    record: dict = {"kind": actor.kind.value}
    if actor.utterance is not None:
        record["utterance"] = actor.utterance
    if actor.command_id is not None:
        record["command_id"] = actor.command_id
    if actor.provoking_seq is not None:
        record["provoking_seq"] = actor.provoking_seq
    if actor.cause_entry_seq is not None:
        record["cause_entry_seq"] = actor.cause_entry_seq
    return record


def actor_from_record(record: dict) -> Actor:
    return Actor(
        kind=ActorKind(record["kind"]),
        utterance=record.get("utterance"),
        command_id=record.get("command_id"),
        provoking_seq=record.get("provoking_seq"),
        cause_entry_seq=record.get("cause_entry_seq"),
    )


def effect_to_record(effect: Effect) -> dict:
    record: dict = {"kind": effect.kind.value}
    if effect.action is not None:
        record["action"] = action_to_record(effect.action)
    if effect.old is not None:
        record["old"] = state_to_record(effect.old)
    if effect.new is not None:
        record["new"] = state_to_record(effect.new)
    if effect.command_id is not None:
        record["command_id"] = effect.command_id
    if effect.command_payload is not None:
        record["command"] = effect.command_payload
    return record


def effect_from_record(record: dict) -> Effect:
    return Effect(
        kind=EffectKind(record["kind"]),
        action=action_from_record(record["action"]) if record.get("action") else None,
        old=state_from_record(record["old"]) if record.get("old") else None,
        new=state_from_record(record["new"]) if record.get("new") else None,
        command_id=record.get("command_id"),
        command_payload=record.get("command"),
    )


def entry_to_record(entry: LogEntry) -> dict:
    return {
        "seq": entry.seq,
        "at": entry.at.isoformat(),
        "actor": actor_to_record(entry.actor),
        "effect": effect_to_record(entry.effect),
    }


def entry_from_record(record: dict) -> LogEntry:
    return LogEntry(
        seq=record["seq"],
        at=datetime.fromisoformat(record["at"]),
        actor=actor_from_record(record["actor"]),
        effect=effect_from_record(record["effect"]),
    )
