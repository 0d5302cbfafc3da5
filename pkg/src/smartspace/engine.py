"""Undoable command engine over the device fabric.

Commands cover six behaviors: immediate actions, scheduled one-shots,
bounded do-then-undo periods (a three-state machine), daily repeating
rules that reschedule themselves forever, daily repeating periods, and
event rules that react to device state transitions.

Every state mutation is serialized through the engine lock: clock
wakeups, bus messages and user turns all funnel into it, so submission
arrival order is execution order. The engine subscribes one listener per
device event queue at startup; event rules are dispatched from a central
observer table, never from per-rule listeners.
"""

from __future__ import annotations

import itertools
import re
import threading
from collections import OrderedDict
from dataclasses import dataclass
from datetime import datetime, time, timedelta
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .bus import (ActionPayload, MessageBus, QueueMessage, StateChangePayload,
                  action_queue, event_queue)
from .causality import Actor, CommandLog, Effect, LogEntry
from .clock import Clock, ScheduleHandle
from .model import (Action, ActionKind, Condition, ConditionTypeError,
                    DeviceDescriptor, DeviceState, ModelError, OnOff, Scalar,
                    TimeSpec, TimeSpecKind, apply_action, eval_condition,
                    next_occurrence)
from .records import (action_from_record, action_to_record,
                      condition_from_record, condition_to_record,
                      timespec_from_record, timespec_to_record)
from .text import describe_command


class EngineError(Exception):
    pass


class UnknownDeviceError(EngineError):
    pass


class CapabilityError(EngineError):
    """The device does not support the requested action."""


class CommandStateError(EngineError):
    """Lifecycle violation, e.g. undoing an already-cancelled command."""


class RescheduleError(EngineError):
    """The command's timing cannot be rewritten to a single time of day."""


class CommandKind(str, Enum):
    DIRECT = "direct"
    DELAYED = "delayed"
    PERIOD = "period"
    REPEATING = "repeating"
    REPEATING_PERIOD = "repeating_period"
    EVENT_RULE = "event_rule"


class LifecycleState(str, Enum):
    CREATED = "created"
    FIRST_PENDING = "first_pending"
    FIRST_DONE = "first_done"
    COMPLETED = "completed"
    RESCHEDULING = "rescheduling"
    CANCELLED = "cancelled"


#: Kinds that are reconstructed from the log on restart. One-shot commands
#: (delayed, period) are never re-fired by replay.
REPLAYABLE_KINDS = frozenset(
    {CommandKind.REPEATING, CommandKind.REPEATING_PERIOD, CommandKind.EVENT_RULE}
)

ACTIVE_STATES = frozenset(
    {LifecycleState.FIRST_PENDING, LifecycleState.FIRST_DONE, LifecycleState.RESCHEDULING}
)


@dataclass
class Command:
    """One undoable unit of behavior."""

    id: str
    kind: CommandKind
    action: Action
    second_action: Optional[Action] = None  # period kinds carry a paired action
    time: Optional[TimeSpec] = None
    trigger: Optional[Condition] = None
    created_by: str = ""
    created_at: Optional[datetime] = None
    user_initiated: bool = True
    lifecycle: LifecycleState = LifecycleState.CREATED
    pending_handle: Optional[ScheduleHandle] = None
    creation_entry_seq: Optional[int] = None
    prior_state: Optional[DeviceState] = None  # direct undo snapshot
    scheduled_for: Optional[datetime] = None
    next_boundary: str = "start"  # repeating_period phase

    def __post_init__(self) -> None:
        timed = {CommandKind.DELAYED, CommandKind.PERIOD,
                 CommandKind.REPEATING, CommandKind.REPEATING_PERIOD}
        if self.kind in timed and self.time is None:
            raise ModelError(f"{self.kind.value} command needs a time spec")
        if self.kind is CommandKind.EVENT_RULE and self.trigger is None:
            raise ModelError("event rule needs a trigger condition")
        if self.kind is CommandKind.DIRECT and (self.time or self.trigger):
            raise ModelError("direct command carries neither time nor trigger")
        paired = {CommandKind.PERIOD, CommandKind.REPEATING_PERIOD}
        if self.kind in paired and self.second_action is None:
            raise ModelError(f"{self.kind.value} command needs its paired action")

    def actions(self) -> Tuple[Action, ...]:
        if self.second_action is not None:
            return (self.action, self.second_action)
        return (self.action,)

    def to_payload(self) -> dict:
        payload = {
            "id": self.id,
            "kind": self.kind.value,
            "action": action_to_record(self.action),
            "created_by": self.created_by,
            "created_at": self.created_at.isoformat() if self.created_at else None,
            "user_initiated": self.user_initiated,
        }
        if self.second_action is not None:
            payload["second_action"] = action_to_record(self.second_action)
        if self.time is not None:
            payload["time"] = timespec_to_record(self.time)
        if self.trigger is not None:
            payload["trigger"] = condition_to_record(self.trigger)
        return payload

    @classmethod
    def from_payload(cls, payload: dict) -> "Command":
        created_at = payload.get("created_at")
        return cls(
            id=payload["id"],
            kind=CommandKind(payload["kind"]),
            action=action_from_record(payload["action"]),
            second_action=(action_from_record(payload["second_action"])
                           if payload.get("second_action") else None),
            time=timespec_from_record(payload["time"]) if payload.get("time") else None,
            trigger=(condition_from_record(payload["trigger"])
                     if payload.get("trigger") else None),
            created_by=payload.get("created_by", ""),
            created_at=datetime.fromisoformat(created_at) if created_at else None,
            user_initiated=payload.get("user_initiated", True),
        )


@dataclass(frozen=True)
class ObserverRegistration:
    command_id: str
    condition: Condition
    queue: str


@dataclass(frozen=True)
class ExecutionReceipt:
    command: Command
    entries: Tuple[LogEntry, ...]
    scheduled_for: Optional[datetime] = None


@dataclass(frozen=True)
class UndoReceipt:
    command: Command
    entries: Tuple[LogEntry, ...]
    cancelled_handles: int = 0


#: Timing drafts carry grammar-level times of day; the engine resolves them
#: against the clock when the command is created.
@dataclass(frozen=True)
class TimingDraft:
    family: str  # delay | at | period | daily | daily_period
    delay_seconds: Optional[float] = None
    at: Optional[time] = None
    start: Optional[time] = None
    end: Optional[time] = None


def inverse_action(action: Action) -> Action:
    if action.kind is ActionKind.TURN_ON:
        return Action(action.device_id, ActionKind.TURN_OFF)
    if action.kind is ActionKind.TURN_OFF:
        return Action(action.device_id, ActionKind.TURN_ON)
    raise ModelError("set_value has no natural inverse")


def restoring_action(snapshot: DeviceState) -> Action:
    """Action that brings a device back to a recorded state."""
    if isinstance(snapshot.value, OnOff):
        kind = ActionKind.TURN_ON if snapshot.value.on else ActionKind.TURN_OFF
        return Action(snapshot.device_id, kind)
    return Action(snapshot.device_id, ActionKind.SET_VALUE, argument=snapshot.value)


class Engine:
    """Central executor owning commands, observers and the state mirror."""

    def __init__(self, registry: Sequence[DeviceDescriptor], bus: MessageBus,
                 clock: Clock, log: CommandLog):
        self._lock = threading.RLock()
        self.registry: "OrderedDict[str, DeviceDescriptor]" = OrderedDict()
        for descriptor in registry:
            if descriptor.id in self.registry:
                raise ModelError(f"duplicate device id {descriptor.id!r}")
            self.registry[descriptor.id] = descriptor
        self.bus = bus
        self.clock = clock
        self.log = log
        self._states: Dict[str, DeviceState] = {
            d.id: DeviceState(d.id, d.initial_value(), clock.now())
            for d in self.registry.values()
        }
        self._observers: List[ObserverRegistration] = []
        self._commands: "OrderedDict[str, Command]" = OrderedDict()
        self._counter = itertools.count(1)
        self._subscriptions = []
        for device_id in self.registry:
            bus.register_device(device_id)
            self._subscriptions.append(
                bus.subscribe(event_queue(device_id), self.on_event)
            )

    # ------------------------------------------------------------------
    # Introspection used by the dialogue layer, the gateway and tests
    # ------------------------------------------------------------------

    @property
    def listener_count(self) -> int:
        return len(self._subscriptions)

    @property
    def observer_count(self) -> int:
        with self._lock:
            return len(self._observers)

    @property
    def observers(self) -> Tuple[ObserverRegistration, ...]:
        with self._lock:
            return tuple(self._observers)

    @property
    def pending_handle_count(self) -> int:
        with self._lock:
            return sum(
                1 for c in self._commands.values()
                if c.pending_handle is not None
                and not c.pending_handle.cancelled and not c.pending_handle.fired
            )

    def device_states(self) -> Dict[str, DeviceState]:
        with self._lock:
            return dict(self._states)

    def device_state(self, device_id: str) -> DeviceState:
        with self._lock:
            try:
                return self._states[device_id]
            except KeyError:
                raise UnknownDeviceError(f"unknown device {device_id!r}") from None

    def command(self, command_id: str) -> Optional[Command]:
        with self._lock:
            return self._commands.get(command_id)

    def commands(self) -> List[Command]:
        with self._lock:
            return list(self._commands.values())

    def active_rules(self) -> List[Command]:
        with self._lock:
            return [c for c in self._commands.values() if c.lifecycle in ACTIVE_STATES]

    def rules_for(self, device_id: str) -> List[Command]:
        return [c for c in self.active_rules()
                if any(a.device_id == device_id for a in c.actions())]

    def now(self) -> datetime:
        return self.clock.now()

    # ------------------------------------------------------------------
    # Command creation
    # ------------------------------------------------------------------

    def create(
        self,
        action: Action,
        *,
        second_action: Optional[Action] = None,
        timing: Optional[TimingDraft] = None,
        trigger: Optional[Condition] = None,
        created_by: str = "",
        user_initiated: bool = True,
    ) -> ExecutionReceipt:
        """Build a command from draft parts, then execute it."""
        with self._lock:
            now = self.clock.now()
            kind, spec = self._resolve_kind(timing, trigger, now)
            if kind in (CommandKind.PERIOD, CommandKind.REPEATING_PERIOD) and second_action is None:
                second_action = inverse_action(action)
            cmd = Command(
                id=f"cmd-{next(self._counter)}",
                kind=kind,
                action=action,
                second_action=second_action,
                time=spec,
                trigger=trigger,
                created_by=created_by,
                created_at=now,
                user_initiated=user_initiated,
            )
            return self.execute(cmd)

    def _resolve_kind(self, timing: Optional[TimingDraft], trigger: Optional[Condition],
                      now: datetime) -> Tuple[CommandKind, Optional[TimeSpec]]:
        if trigger is not None:
            if timing is not None:
                raise ModelError("a command carries either a time or a trigger")
            return CommandKind.EVENT_RULE, None
        if timing is None:
            return CommandKind.DIRECT, None
        if timing.family == "delay":
            assert timing.delay_seconds is not None
            return CommandKind.DELAYED, TimeSpec.delay(timing.delay_seconds)
        if timing.family == "at":
            assert timing.at is not None
            return CommandKind.DELAYED, TimeSpec.instant_at(next_occurrence(timing.at, now))
        if timing.family == "period":
            assert timing.start is not None and timing.end is not None
            start = next_occurrence(timing.start, now)
            end = next_occurrence(timing.end, start)
            return CommandKind.PERIOD, TimeSpec.window(start, end)
        if timing.family == "daily":
            assert timing.at is not None
            return CommandKind.REPEATING, TimeSpec.daily_at(timing.at)
        if timing.family == "daily_period":
            assert timing.start is not None and timing.end is not None
            return CommandKind.REPEATING_PERIOD, TimeSpec.daily_period(timing.start, timing.end)
        raise ModelError(f"unknown timing family {timing.family!r}")

    # ------------------------------------------------------------------
    # Execute / undo
    # ------------------------------------------------------------------

    def execute(self, cmd: Command) -> ExecutionReceipt:
        with self._lock:
            if cmd.lifecycle is not LifecycleState.CREATED:
                raise CommandStateError(f"command {cmd.id} was already executed")
            self._validate(cmd)
            if cmd.id in self._commands:
                raise CommandStateError(f"duplicate command id {cmd.id}")
            now = self.clock.now()
            self._commands[cmd.id] = cmd
            if cmd.kind is CommandKind.DIRECT:
                cmd.prior_state = self._states[cmd.action.device_id]
                entry = self._publish_action(cmd.action, Actor.user(cmd.created_by))
                cmd.lifecycle = LifecycleState.COMPLETED
                return ExecutionReceipt(cmd, (entry,))
            # Scheduled and event commands log their creation first
            # (write-ahead), then arm the clock or the observer table.
            entry = self.log.append(
                Actor.user(cmd.created_by),
                Effect.rule_created(cmd.id, cmd.to_payload()),
                at=now,
            )
            cmd.creation_entry_seq = entry.seq
            self._activate(cmd, now)
            return ExecutionReceipt(cmd, (entry,), scheduled_for=cmd.scheduled_for)

    def undo(self, command: Union[Command, str], utterance: str = "") -> UndoReceipt:
        with self._lock:
            cmd = command if isinstance(command, Command) else self._commands.get(command)
            if cmd is None:
                raise CommandStateError(f"unknown command {command!r}")
            if cmd.lifecycle is LifecycleState.CANCELLED:
                raise CommandStateError(f"command {cmd.id} is already cancelled")
            if cmd.lifecycle is LifecycleState.CREATED:
                raise CommandStateError(f"command {cmd.id} was never executed")
            now = self.clock.now()
            actor = Actor.user(utterance or f"undo {cmd.id}")
            entries: List[LogEntry] = []
            cancelled = 0
            if cmd.pending_handle is not None and not cmd.pending_handle.fired \
                    and not cmd.pending_handle.cancelled:
                cmd.pending_handle.cancel()
                cancelled += 1
            if cmd.kind is CommandKind.DIRECT:
                assert cmd.prior_state is not None
                entries.append(self._publish_action(restoring_action(cmd.prior_state), actor))
            else:
                if (cmd.kind is CommandKind.PERIOD
                        and cmd.lifecycle is LifecycleState.FIRST_DONE):
                    # Mid-window: publish the restoring half immediately.
                    assert cmd.second_action is not None
                    entries.append(self._publish_action(cmd.second_action, actor))
                if cmd.kind is CommandKind.EVENT_RULE:
                    self._observers = [o for o in self._observers
                                       if o.command_id != cmd.id]
                entries.append(self.log.append(actor, Effect.rule_removed(cmd.id), at=now))
            cmd.lifecycle = LifecycleState.CANCELLED
            cmd.pending_handle = None
            cmd.scheduled_for = None
            return UndoReceipt(cmd, tuple(entries), cancelled_handles=cancelled)

    # ------------------------------------------------------------------
    # Cancel-last and reschedule (conversation-driven operations)
    # ------------------------------------------------------------------

    def peek_cancel_candidate(self) -> Optional[Command]:
        """Most recent user-initiated command that is not yet cancelled.

        Rule and event firings are consequences, not commands, and never
        appear here: only commands the user created are eligible.
        """
        with self._lock:
            for cmd in reversed(self._commands.values()):
                if cmd.user_initiated and cmd.lifecycle is not LifecycleState.CANCELLED:
                    return cmd
            return None

    def cancel_last(self, utterance: str = "") -> Tuple[str, Optional[UndoReceipt]]:
        with self._lock:
            candidate = self.peek_cancel_candidate()
            if candidate is None:
                return "There is nothing to cancel.", None
            receipt = self.undo(candidate, utterance)
            clause = describe_command(candidate, self.registry)
            return f'Okay, I cancelled "{clause}".', receipt

    def reschedule(self, command_id: str, new_time: time, utterance: str = "") -> Command:
        """Replace a rule's time of day: undo the old rule, create a fresh one."""
        with self._lock:
            old = self._commands.get(command_id)
            if old is None:
                raise CommandStateError(f"unknown command {command_id!r}")
            if old.lifecycle is LifecycleState.CANCELLED:
                raise CommandStateError(f"command {command_id} is already cancelled")
            if old.kind is CommandKind.REPEATING:
                timing = TimingDraft("daily", at=new_time)
            elif old.kind is CommandKind.DELAYED:
                timing = TimingDraft("at", at=new_time)
            else:
                raise RescheduleError(
                    f"{old.kind.value} commands have two boundaries; "
                    "cannot move them to a single time"
                )
            self.undo(old, utterance)
            receipt = self.create(
                old.action,
                second_action=old.second_action,
                timing=timing,
                created_by=utterance or old.created_by,
            )
            return receipt.command

    # ------------------------------------------------------------------
    # Event dispatch and replay support
    # ------------------------------------------------------------------

    def on_event(self, message: QueueMessage) -> List[Command]:
        """Central observer dispatch for one event-queue message."""
        payload = message.payload
        if not isinstance(payload, StateChangePayload):
            return []
        with self._lock:
            device_id = payload.new.device_id
            if device_id in self._states:
                self._states[device_id] = payload.new
            fired: List[Command] = []
            for registration in list(self._observers):
                if registration.condition.device_id != device_id:
                    continue
                try:
                    matched = eval_condition(registration.condition, payload.old, payload.new)
                except ConditionTypeError:
                    matched = False
                if not matched:
                    continue
                cmd = self._commands.get(registration.command_id)
                if cmd is None or cmd.lifecycle is LifecycleState.CANCELLED:
                    continue
                actor = Actor.event(cmd.id, provoking_seq=message.seq,
                                    cause_entry_seq=payload.cause_entry_seq)
                self._publish_action(cmd.action, actor)
                fired.append(cmd)
            return fired

    def restore_command(self, payload: dict, creation_entry_seq: int) -> Command:
        """Re-arm a replayed rule without logging a new creation entry."""
        with self._lock:
            cmd = Command.from_payload(payload)
            if cmd.kind not in REPLAYABLE_KINDS:
                raise CommandStateError(f"{cmd.kind.value} commands are not replayed")
            if cmd.id in self._commands:
                raise CommandStateError(f"duplicate command id {cmd.id}")
            self._validate(cmd)
            cmd.creation_entry_seq = creation_entry_seq
            match = re.fullmatch(r"cmd-(\d+)", cmd.id)
            if match:
                floor = int(match.group(1)) + 1
                self._counter = itertools.count(max(next(self._counter), floor))
            self._commands[cmd.id] = cmd
            self._activate(cmd, self.clock.now())
            return cmd

    # ------------------------------------------------------------------
    # Internals
    # ------------------------------------------------------------------

    def _validate(self, cmd: Command) -> None:
        for action in cmd.actions():
            descriptor = self.registry.get(action.device_id)
            if descriptor is None:
                raise UnknownDeviceError(f"unknown device {action.device_id!r}")
            if action.kind not in descriptor.supported_actions:
                raise CapabilityError(
                    f"device {descriptor.id!r} does not support {action.kind.value}"
                )
        if cmd.trigger is not None and cmd.trigger.device_id not in self.registry:
            raise UnknownDeviceError(f"unknown device {cmd.trigger.device_id!r}")

    def _activate(self, cmd: Command, now: datetime) -> None:
        if cmd.kind is CommandKind.DELAYED:
            assert cmd.time is not None
            if cmd.time.kind is TimeSpecKind.DELAY:
                target = now + timedelta(seconds=cmd.time.delay_seconds or 0)
            else:
                assert cmd.time.instant is not None
                target = cmd.time.instant
                if target <= now:
                    raise CommandStateError("one-shot target lies in the past")
            self._arm(cmd, target, lambda: self._fire_delayed(cmd))
            cmd.lifecycle = LifecycleState.FIRST_PENDING
        elif cmd.kind is CommandKind.PERIOD:
            assert cmd.time is not None and cmd.time.period_start is not None
            if cmd.time.period_start <= now:
                raise CommandStateError("period start lies in the past")
            self._arm(cmd, cmd.time.period_start, lambda: self._fire_period_first(cmd))
            cmd.lifecycle = LifecycleState.FIRST_PENDING
        elif cmd.kind is CommandKind.REPEATING:
            assert cmd.time is not None and cmd.time.at is not None
            target = next_occurrence(cmd.time.at, now)
            self._arm(cmd, target, lambda: self._fire_repeating(cmd))
            cmd.lifecycle = LifecycleState.RESCHEDULING
        elif cmd.kind is CommandKind.REPEATING_PERIOD:
            assert cmd.time is not None and cmd.time.start is not None
            cmd.next_boundary = "start"
            target = next_occurrence(cmd.time.start, now)
            self._arm(cmd, target, lambda: self._fire_repeating_period(cmd))
            cmd.lifecycle = LifecycleState.RESCHEDULING
        elif cmd.kind is CommandKind.EVENT_RULE:
            assert cmd.trigger is not None
            self._observers.append(ObserverRegistration(
                command_id=cmd.id,
                condition=cmd.trigger,
                queue=event_queue(cmd.trigger.device_id),
            ))
            cmd.lifecycle = LifecycleState.RESCHEDULING
        else:  # pragma: no cover - direct commands never reach _activate
            raise ModelError("direct commands are not scheduled")

    def _arm(self, cmd: Command, target: datetime, callback) -> None:
        cmd.pending_handle = self.clock.schedule(target, callback)
        cmd.scheduled_for = target

    def _fire_delayed(self, cmd: Command) -> None:
        with self._lock:
            if cmd.lifecycle is LifecycleState.CANCELLED:
                return
            cmd.pending_handle = None
            cmd.scheduled_for = None
            self._publish_action(cmd.action, Actor.rule(cmd.id))
            cmd.lifecycle = LifecycleState.COMPLETED

    def _fire_period_first(self, cmd: Command) -> None:
        with self._lock:
            if cmd.lifecycle is LifecycleState.CANCELLED:
                return
            assert cmd.time is not None and cmd.time.period_end is not None
            self._publish_action(cmd.action, Actor.rule(cmd.id))
            cmd.lifecycle = LifecycleState.FIRST_DONE
            self._arm(cmd, cmd.time.period_end, lambda: self._fire_period_second(cmd))

    def _fire_period_second(self, cmd: Command) -> None:
        with self._lock:
            if cmd.lifecycle is LifecycleState.CANCELLED:
                return
            assert cmd.second_action is not None
            cmd.pending_handle = None
            cmd.scheduled_for = None
            self._publish_action(cmd.second_action, Actor.rule(cmd.id))
            cmd.lifecycle = LifecycleState.COMPLETED

    def _fire_repeating(self, cmd: Command) -> None:
        with self._lock:
            if cmd.lifecycle is LifecycleState.CANCELLED:
                return
            assert cmd.time is not None and cmd.time.at is not None
            self._publish_action(cmd.action, Actor.rule(cmd.id))
            # now == fire time, so the next occurrence lands tomorrow.
            target = next_occurrence(cmd.time.at, self.clock.now())
            self._arm(cmd, target, lambda: self._fire_repeating(cmd))

    def _fire_repeating_period(self, cmd: Command) -> None:
        with self._lock:
            if cmd.lifecycle is LifecycleState.CANCELLED:
                return
            assert cmd.time is not None
            assert cmd.time.start is not None and cmd.time.end is not None
            if cmd.next_boundary == "start":
                self._publish_action(cmd.action, Actor.rule(cmd.id))
                cmd.next_boundary = "end"
                target = next_occurrence(cmd.time.end, self.clock.now())
            else:
                assert cmd.second_action is not None
                self._publish_action(cmd.second_action, Actor.rule(cmd.id))
                cmd.next_boundary = "start"
                target = next_occurrence(cmd.time.start, self.clock.now())
            self._arm(cmd, target, lambda: self._fire_repeating_period(cmd))

    def _publish_action(self, action: Action, actor: Actor) -> LogEntry:
        descriptor = self.registry.get(action.device_id)
        if descriptor is None:
            raise UnknownDeviceError(f"unknown device {action.device_id!r}")
        now = self.clock.now()
        old = self._states[action.device_id]
        new = apply_action(old, action, now)
        entry = self.log.append(actor, Effect.action_performed(action, old, new), at=now)
        self.bus.publish(
            action_queue(action.device_id),
            ActionPayload(action=action, cause_entry_seq=entry.seq),
            at=now,
        )
        return entry
