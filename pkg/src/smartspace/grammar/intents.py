"""Intent vocabulary produced by the parser.

The first ten kinds mirror the assistant's intent catalog one-to-one;
WhatCanYouDo is an addition so new users can discover the grammar.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import time
from enum import Enum
from typing import Dict, Optional, Union

from ..model import Direction, PredicateKind, Scalar, ActionKind


class IntentKind(str, Enum):
    DIRECT_ACTION = "DirectAction"
    DELAYED_ACTION = "DelayedAction"
    CONFIRM_THING_CHOICE = "ConfirmThingChoice"
    REPEATING = "Repeating"
    EVENT = "Event"
    WHY_DID_SOMETHING_HAPPEN = "WhyDidSomethingHappen"
    RULES_DEFINED = "RulesDefined"
    RULES_DEFINED_CHANGE_SINGLE_RULE = "RulesDefinedChangeSingleRule"
    CANCEL_COMMAND = "CancelCommand"
    CONFIRM_CANCEL = "ConfirmCancel"
    WHAT_CAN_YOU_DO = "WhatCanYouDo"


@dataclass(frozen=True)
class ActionSketch:
    """An action whose device is still a phrase, not a resolved id."""

    kind: ActionKind
    device_phrase: str
    argument: Optional[Scalar] = None


@dataclass(frozen=True)
class EventSketch:
    """A trigger condition whose device is still a phrase."""

    predicate: PredicateKind
    device_phrase: str
    direction: Optional[Direction] = None
    threshold: Optional[float] = None


@dataclass(frozen=True)
class TimingSketch:
    """Grammar-level timing; resolved against the clock at command creation."""

    family: str  # delay | at | period | daily | daily_period
    delay_seconds: Optional[float] = None
    delay_text: Optional[str] = None  # original wording, e.g. "5 minutes"
    at: Optional[time] = None
    start: Optional[time] = None
    end: Optional[time] = None


Resolved = Union[ActionSketch, EventSketch, TimingSketch, str, float]


@dataclass(frozen=True)
class EntityRef:
    entity_name: str
    raw_span: str
    resolved: Resolved


@dataclass(frozen=True)
class Intent:
    kind: IntentKind
    slots: Dict[str, EntityRef]
    matched_template: str
    utterance: str
    resolution_confidence: float = 1.0

    def slot(self, name: str) -> EntityRef:
        return self.slots[name]


@dataclass(frozen=True)
class NoMatch:
    reason: str
    nearest_template: Optional[str] = None


ParseResult = Union[Intent, NoMatch]
