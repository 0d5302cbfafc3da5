"""Conversational smart-space manager.

Parses natural-language utterances into intents, executes them through an
undoable command engine over a simulated publish-subscribe device fabric,
and answers "why did that happen?" from a persistent command log.
"""

from .model import (Action, ActionKind, Condition, DeviceDescriptor,
                    DeviceKind, DeviceState, Direction, MatchKind, OnOff,
                    PredicateKind, Scalar, TimeSpec, eval_condition,
                    match_device, normalize_name)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "Condition",
    "DeviceDescriptor",
    "DeviceKind",
    "DeviceState",
    "Direction",
    "MatchKind",
    "OnOff",
    "PredicateKind",
    "Scalar",
    "TimeSpec",
    "eval_condition",
    "match_device",
    "normalize_name",
    "__version__",
]
