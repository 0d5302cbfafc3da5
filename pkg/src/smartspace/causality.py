"""Append-only command log and "why did that happen?" resolution.

The log is the single durable record: every performed action, rule
creation and rule removal lands here before its effects propagate
(write-ahead). Causality queries search it backwards from the moment the
queried condition last became true, select the earliest independent
cause, and follow actor references into a chain ordered
most-immediate-first.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import (TYPE_CHECKING, Callable, Dict, Iterable, List, Optional,
                    Sequence, Tuple)

from .model import (Action, ActionKind, Condition, DeviceState, Direction,
                    OnOff, PredicateKind, Scalar, Value)

if TYPE_CHECKING:  # pragma: no cover
    from .engine import Command


class StorageError(Exception):
    """A log append could not be persisted; the triggering action is aborted."""


class ActorKind(str, Enum):
    USER = "user"
    RULE = "rule"
    EVENT = "event"


@dataclass(frozen=True)
class Actor:
    """Who or what provoked a log entry."""

    kind: ActorKind
    utterance: Optional[str] = None       # user
    command_id: Optional[str] = None      # rule / event
    provoking_seq: Optional[int] = None   # event: seq on the source event queue
    cause_entry_seq: Optional[int] = None  # event: log entry behind that state change

    @classmethod
    def user(cls, utterance: str) -> "Actor":
        return cls(ActorKind.USER, utterance=utterance)

    @classmethod
    def rule(cls, command_id: str) -> "Actor":
        return cls(ActorKind.RULE, command_id=command_id)

    @classmethod
    def event(cls, command_id: str, provoking_seq: int,
              cause_entry_seq: Optional[int] = None) -> "Actor":
        return cls(ActorKind.EVENT, command_id=command_id,
                   provoking_seq=provoking_seq, cause_entry_seq=cause_entry_seq)


class EffectKind(str, Enum):
    ACTION_PERFORMED = "action_performed"
    RULE_CREATED = "rule_created"
    RULE_REMOVED = "rule_removed"


@dataclass(frozen=True)
class Effect:
    kind: EffectKind
    action: Optional[Action] = None
    old: Optional[DeviceState] = None
    new: Optional[DeviceState] = None
    command_id: Optional[str] = None
    command_payload: Optional[dict] = None  # serialized command, for replay

    @classmethod
    def action_performed(cls, action: Action, old: DeviceState, new: DeviceState) -> "Effect":
        return cls(EffectKind.ACTION_PERFORMED, action=action, old=old, new=new)

    @classmethod
    def rule_created(cls, command_id: str, command_payload: dict) -> "Effect":
        return cls(EffectKind.RULE_CREATED, command_id=command_id,
                   command_payload=command_payload)

    @classmethod
    def rule_removed(cls, command_id: str) -> "Effect":
        return cls(EffectKind.RULE_REMOVED, command_id=command_id)


@dataclass(frozen=True)
class LogEntry:
    seq: int
    at: datetime
    actor: Actor
    effect: Effect


class CommandLog:
    """In-memory log with an optional write-ahead sink.

    Single writer (the engine executor); the sink is invoked before the
    entry becomes visible, so a persistence failure aborts the append with
    no partial effects.
    """

    def __init__(self, entries: Optional[Iterable[LogEntry]] = None,
                 sink: Optional[Callable[[LogEntry], None]] = None):
        self._entries: List[LogEntry] = list(entries or [])
        self._sink = sink
        self._listeners: List[Callable[[LogEntry], None]] = []
        self._last_at: Optional[datetime] = self._entries[-1].at if self._entries else None

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(list(self._entries))

    @property
    def entries(self) -> Tuple[LogEntry, ...]:
        return tuple(self._entries)

    @property
    def next_seq(self) -> int:
        return self._entries[-1].seq + 1 if self._entries else 1

    def add_listener(self, listener: Callable[[LogEntry], None]) -> None:
        self._listeners.append(listener)

    def append(self, actor: Actor, effect: Effect, at: datetime) -> LogEntry:
        if self._last_at is not None and at < self._last_at:
            raise ValueError("log timestamps must be non-decreasing")
        entry = LogEntry(seq=self.next_seq, at=at, actor=actor, effect=effect)
        if self._sink is not None:
            self._sink(entry)  # write-ahead; may raise StorageError
        self._entries.append(entry)
        self._last_at = at
        for listener in self._listeners:
            listener(entry)
        return entry

    def since(self, seq: int) -> List[LogEntry]:
        return [e for e in self._entries if e.seq > seq]

    def find(self, seq: int) -> Optional[LogEntry]:
        lo, hi = 0, len(self._entries) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            if self._entries[mid].seq == seq:
                return self._entries[mid]
            if self._entries[mid].seq < seq:
                lo = mid + 1
            else:
                hi = mid - 1
        return None


# ---------------------------------------------------------------------------
# Cause predicates
# ---------------------------------------------------------------------------


def state_satisfies(cond: Condition, value: Value) -> bool:
    """Does a state value exhibit the condition's target?"""
    if cond.predicate in (PredicateKind.BECAME_ON, PredicateKind.ACTIVATED):
        return isinstance(value, OnOff) and value.on
    if cond.predicate is PredicateKind.BECAME_OFF:
        return isinstance(value, OnOff) and not value.on
    if not isinstance(value, Scalar) or cond.threshold is None:
        return False
    if cond.direction is Direction.UP:
        return value.value >= cond.threshold
    return value.value <= cond.threshold


def action_could_cause(action: Action, cond: Condition) -> bool:
    if action.device_id != cond.device_id:
        return False
    if cond.predicate in (PredicateKind.BECAME_ON, PredicateKind.ACTIVATED):
        return action.kind is ActionKind.TURN_ON
    if cond.predicate is PredicateKind.BECAME_OFF:
        return action.kind is ActionKind.TURN_OFF
    if action.kind is not ActionKind.SET_VALUE or action.argument is None:
        return False
    return state_satisfies(cond, Scalar(action.argument.value, action.argument.unit))


def could_have_caused(cmd: "Command", cond: Condition) -> bool:
    """True iff any of the command's actions can make the condition true."""
    return any(action_could_cause(action, cond) for action in cmd.actions())


# ---------------------------------------------------------------------------
# Why-resolution
# ---------------------------------------------------------------------------


class CausePolicy(str, Enum):
    EARLIEST_CAUSE = "earliest_cause"
    LATEST_CAUSE = "latest_cause"
    HEURISTIC = "heuristic"  # pluggable slot; no heuristic is defined


@dataclass(frozen=True)
class CausalAnswer:
    condition: Condition
    chain: Tuple[LogEntry, ...]  # most-immediate-first
    policy: CausePolicy
    exhausted: bool  # chain reached a user-root


def resolve_why(
    cond: Condition,
    log: Iterable[LogEntry],
    query_time: datetime,
    policy: CausePolicy = CausePolicy.EARLIEST_CAUSE,
) -> Optional[CausalAnswer]:
    """Find the causal chain behind a condition, or None if there is none.

    The manifesting entry is the earliest log entry after the most recent
    contrary transition whose resulting state satisfies the condition (the
    earliest-cause policy: among several candidates that could all have
    made the condition true, the first one actually did). The chain then
    follows actor references backwards: rule fires append their creation
    entry, event fires continue through the state change that provoked
    them, user entries are roots.
    """
    if policy is CausePolicy.HEURISTIC:
        raise NotImplementedError("no relevance heuristic is defined")
    if policy is CausePolicy.LATEST_CAUSE:
        raise NotImplementedError("latest-cause applies to rendering, not selection")

    entries = list(log.entries if isinstance(log, CommandLog) else log)
    by_seq: Dict[int, LogEntry] = {e.seq: e for e in entries}

    relevant = [
        e for e in entries
        if e.at <= query_time
        and e.effect.kind is EffectKind.ACTION_PERFORMED
        and e.effect.action is not None
        and e.effect.action.device_id == cond.device_id
    ]
    # Walk backwards: collect the maximal suffix whose resulting states all
    # satisfy the condition. The first non-satisfying entry is the most
    # recent contrary transition and closes the candidate window.
    window: List[LogEntry] = []
    for entry in reversed(relevant):
        assert entry.effect.new is not None
        if state_satisfies(cond, entry.effect.new.value):
            window.append(entry)
        else:
            break
    if not window:
        return None
    candidates = [e for e in reversed(window)
                  if e.effect.action is not None and action_could_cause(e.effect.action, cond)]
    if not candidates:
        return None
    selected = candidates[0]  # earliest within the window

    chain: List[LogEntry] = [selected]
    current = selected
    while True:
        actor = current.actor
        if actor.kind is ActorKind.USER:
            break
        if actor.kind is ActorKind.RULE:
            creation = _creation_entry(entries, actor.command_id, before=current.seq)
            if creation is None:
                break
            chain.append(creation)
            current = creation
            continue
        # Event fire: continue through the provoking state change if its
        # producing entry is known; otherwise fall back to the rule that
        # reacted, so the user still learns which rule fired.
        producer = by_seq.get(actor.cause_entry_seq) if actor.cause_entry_seq else None
        if producer is not None and producer.seq < current.seq:
            chain.append(producer)
            current = producer
            continue
        creation = _creation_entry(entries, actor.command_id, before=current.seq)
        if creation is None:
            break
        chain.append(creation)
        current = creation

    exhausted = chain[-1].actor.kind is ActorKind.USER
    return CausalAnswer(condition=cond, chain=tuple(chain),
                        policy=CausePolicy.EARLIEST_CAUSE, exhausted=exhausted)


def _creation_entry(entries: Sequence[LogEntry], command_id: Optional[str],
                    before: int) -> Optional[LogEntry]:
    for entry in entries:
        if (entry.seq < before
                and entry.effect.kind is EffectKind.RULE_CREATED
                and entry.effect.command_id == command_id):
            return entry
    return None
