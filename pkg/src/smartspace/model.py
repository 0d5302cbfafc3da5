"""Shared domain vocabulary: devices, actions, conditions and time specs.

Everything here is an immutable value object, freely shareable between
threads. Times are timezone-free local civil time throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, time, timedelta
from enum import Enum
from typing import Iterable, Optional, Union


class ModelError(Exception):
    """Base class for domain validation errors."""


class InvalidNameError(ModelError):
    pass


class ConditionTypeError(ModelError):
    """A boolean predicate was applied to a scalar value, or vice versa."""


class DeviceKind(str, Enum):
    TOGGLEABLE = "toggleable"
    SENSOR = "sensor"
    THERMOSTAT = "thermostat"


class ActionKind(str, Enum):
    TURN_ON = "turn_on"
    TURN_OFF = "turn_off"
    SET_VALUE = "set_value"


# ---------------------------------------------------------------------------
# Name normalization and device matching
# ---------------------------------------------------------------------------

_ARTICLES = frozenset({"the", "a", "an"})


def normalize_name(raw: str) -> str:
    """Canonical form of a device noun phrase.

    Lowercases, strips leading articles, collapses whitespace and drops a
    plural "s" from the final token only ("bedroom lights" -> "bedroom
    light"). Idempotent: words ending in "ss" are left alone so a second
    pass never strips further.
    """
    if not raw or not raw.strip():
        raise InvalidNameError("device name is empty")
    tokens = raw.lower().split()
    while tokens and tokens[0] in _ARTICLES:
        tokens.pop(0)
    if tokens:
        last = tokens[-1]
        if len(last) > 1 and last.endswith("s") and not last.endswith("ss"):
            tokens[-1] = last[:-1]
    if not tokens:
        raise InvalidNameError(f"nothing left of {raw!r} after normalization")
    return " ".join(tokens)


# ---------------------------------------------------------------------------
# Device state values (tagged union)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OnOff:
    on: bool

    def __str__(self) -> str:
        return "on" if self.on else "off"


@dataclass(frozen=True)
class Scalar:
    value: float
    unit: str = ""

    def __str__(self) -> str:
        return f"{self.value:g} {self.unit}".strip() if self.unit else f"{self.value:g}"


Value = Union[OnOff, Scalar]


@dataclass(frozen=True)
class DeviceDescriptor:
    """Registry entry for one simulated device."""

    id: str
    name: str
    kind: DeviceKind
    supported_actions: frozenset
    emits_events: bool = False
    unit: str = ""  # non-empty selects the scalar value variant

    def __post_init__(self) -> None:
        normalize_name(self.name)  # raises on empty / degenerate names
        if self.kind is DeviceKind.TOGGLEABLE:
            required = {ActionKind.TURN_ON, ActionKind.TURN_OFF}
            if not required <= set(self.supported_actions):
                raise ModelError(f"toggleable device {self.id!r} must support turn_on/turn_off")
        if self.kind is DeviceKind.SENSOR:
            if self.supported_actions:
                raise ModelError(f"sensor {self.id!r} cannot support actions")
            if not self.emits_events:
                raise ModelError(f"sensor {self.id!r} must emit events")

    @property
    def normalized_name(self) -> str:
        return normalize_name(self.name)

    @property
    def scalar_valued(self) -> bool:
        return self.kind is not DeviceKind.TOGGLEABLE and bool(self.unit)

    def initial_value(self) -> Value:
        return Scalar(0.0, self.unit) if self.scalar_valued else OnOff(False)


@dataclass(frozen=True)
class DeviceState:
    device_id: str
    value: Value
    updated_at: datetime


@dataclass(frozen=True)
class Action:
    """One actuation request against a device."""

    device_id: str
    kind: ActionKind
    argument: Optional[Scalar] = None

    def __post_init__(self) -> None:
        if self.kind is ActionKind.SET_VALUE and self.argument is None:
            raise ModelError("set_value requires an argument")
        if self.kind is not ActionKind.SET_VALUE and self.argument is not None:
            raise ModelError(f"{self.kind.value} takes no argument")


def apply_action(state: DeviceState, action: Action, at: datetime) -> DeviceState:
    """Pure device transition shared by the engine and the simulators."""
    if action.kind is ActionKind.TURN_ON:
        value: Value = OnOff(True)
    elif action.kind is ActionKind.TURN_OFF:
        value = OnOff(False)
    else:
        assert action.argument is not None
        unit = action.argument.unit
        if not unit and isinstance(state.value, Scalar):
            unit = state.value.unit
        value = Scalar(action.argument.value, unit)
    return DeviceState(device_id=state.device_id, value=value, updated_at=at)


# ---------------------------------------------------------------------------
# Conditions over state transitions
# ---------------------------------------------------------------------------


class PredicateKind(str, Enum):
    BECAME_ON = "became_on"
    BECAME_OFF = "became_off"
    ACTIVATED = "activated"  # alias of became_on, used for sensors
    CROSSED_THRESHOLD = "crossed_threshold"


class Direction(str, Enum):
    UP = "up"
    DOWN = "down"


@dataclass(frozen=True)
class Condition:
    device_id: str
    predicate: PredicateKind
    direction: Optional[Direction] = None
    threshold: Optional[float] = None

    def __post_init__(self) -> None:
        if self.predicate is PredicateKind.CROSSED_THRESHOLD:
            if self.direction is None or self.threshold is None:
                raise ModelError("crossed_threshold needs a direction and a threshold")
        elif self.direction is not None or self.threshold is not None:
            raise ModelError(f"{self.predicate.value} takes no direction/threshold")


def eval_condition(cond: Condition, old: DeviceState, new: DeviceState) -> bool:
    """True iff the (old, new) transition satisfies the condition.

    Threshold crossings are inclusive on the new value and exclusive on the
    old one, so a state landing exactly on the threshold fires once.
    """
    if not (cond.device_id == old.device_id == new.device_id):
        raise ModelError("condition and states reference different devices")
    if cond.predicate in (PredicateKind.BECAME_ON, PredicateKind.ACTIVATED, PredicateKind.BECAME_OFF):
        if not isinstance(old.value, OnOff) or not isinstance(new.value, OnOff):
            raise ConditionTypeError(f"{cond.predicate.value} needs on/off states")
        if cond.predicate is PredicateKind.BECAME_OFF:
            return old.value.on and not new.value.on
        return (not old.value.on) and new.value.on
    if not isinstance(old.value, Scalar) or not isinstance(new.value, Scalar):
        raise ConditionTypeError("crossed_threshold needs scalar states")
    t = cond.threshold
    assert t is not None
    if cond.direction is Direction.UP:
        return old.value.value < t <= new.value.value
    return old.value.value > t >= new.value.value


# ---------------------------------------------------------------------------
# Device matching
# ---------------------------------------------------------------------------


class MatchKind(str, Enum):
    UNIQUE = "unique"
    AMBIGUOUS = "ambiguous"
    NONE = "none"


@dataclass(frozen=True)
class MatchResult:
    kind: MatchKind
    devices: tuple

    @property
    def device(self) -> DeviceDescriptor:
        if self.kind is not MatchKind.UNIQUE:
            raise ModelError("no unique device in this match")
        return self.devices[0]


def match_device(phrase: str, registry: Iterable[DeviceDescriptor]) -> MatchResult:
    """Match a noun phrase against the registry by token containment.

    A device matches when its normalized name contains every token of the
    normalized phrase. Candidates are returned in registry insertion order
    so disambiguation prompts are deterministic.
    """
    try:
        wanted = set(normalize_name(phrase).split())
    except InvalidNameError:
        return MatchResult(MatchKind.NONE, ())
    hits = tuple(d for d in registry if wanted <= set(d.normalized_name.split()))
    if len(hits) == 1:
        return MatchResult(MatchKind.UNIQUE, hits)
    if hits:
        return MatchResult(MatchKind.AMBIGUOUS, hits)
    return MatchResult(MatchKind.NONE, ())


# ---------------------------------------------------------------------------
# Time specifications
# ---------------------------------------------------------------------------


class TimeSpecKind(str, Enum):
    INSTANT = "instant"
    DELAY = "delay"
    DAILY_AT = "daily_at"
    DAILY_PERIOD = "daily_period"
    PERIOD = "period"


@dataclass(frozen=True)
class TimeSpec:
    """When a command acts: one-shot instants/windows or daily schedules."""

    kind: TimeSpecKind
    instant: Optional[datetime] = None
    delay_seconds: Optional[float] = None
    at: Optional[time] = None
    start: Optional[time] = None
    end: Optional[time] = None
    period_start: Optional[datetime] = None
    period_end: Optional[datetime] = None

    @classmethod
    def instant_at(cls, when: datetime) -> "TimeSpec":
        return cls(TimeSpecKind.INSTANT, instant=when)

    @classmethod
    def delay(cls, seconds: float) -> "TimeSpec":
        if seconds <= 0:
            raise ModelError("delay must be positive")
        return cls(TimeSpecKind.DELAY, delay_seconds=seconds)

    @classmethod
    def daily_at(cls, at: time) -> "TimeSpec":
        return cls(TimeSpecKind.DAILY_AT, at=at)

    @classmethod
    def daily_period(cls, start: time, end: time) -> "TimeSpec":
        if start == end:
            raise ModelError("daily period must have distinct boundaries")
        return cls(TimeSpecKind.DAILY_PERIOD, start=start, end=end)

    @classmethod
    def window(cls, start: datetime, end: datetime) -> "TimeSpec":
        if not start < end:
            raise ModelError("period start must precede its end")
        return cls(TimeSpecKind.PERIOD, period_start=start, period_end=end)


def next_occurrence(tod: time, after: datetime) -> datetime:
    """First datetime with the given time of day strictly after `after`."""
    candidate = datetime.combine(after.date(), tod)
    if candidate <= after:
        candidate += timedelta(days=1)
    return candidate
