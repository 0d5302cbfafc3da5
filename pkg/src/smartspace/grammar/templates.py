"""Fixed template catalog: every supported phrasing, one entry per shape.

Action clauses (turn on/off, switch, enable/disable, set-to) are crossed
with timing tails and event clauses programmatically, so the catalog is
wide but generated from a handful of form tables. Lenient variants exist
on purpose: articles are optional (the device slot swallows them and the
name normalizer strips them) and enable/disable are on/off synonyms.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from ..model import ActionKind, Direction, PredicateKind
from .intents import IntentKind

DEVICE_CHOICE_CONTEXT = "device-choice"
RULES_LIST_CONTEXT = "rules-list"
CANCEL_PENDING_CONTEXT = "cancel-pending"
CAUSAL_CHAIN_CONTEXT = "causal-chain"


class SlotKind(str, Enum):
    DEVICE = "device"
    TIME = "time"
    DURATION = "duration"
    VALUE = "value"
    NUMBER = "number"


@dataclass(frozen=True)
class Lit:
    text: str


@dataclass(frozen=True)
class Slot:
    name: str
    kind: SlotKind


Element = Union[Lit, Slot]


@dataclass(frozen=True)
class Template:
    id: str
    intent: IntentKind
    elements: Tuple[Element, ...]
    action_kind: Optional[ActionKind] = None
    predicate: Optional[PredicateKind] = None
    direction: Optional[Direction] = None
    timing_family: Optional[str] = None
    input_contexts: Tuple[str, ...] = ()
    answer: Optional[str] = None
    follow_up: bool = False

    @property
    def literal_count(self) -> int:
        return sum(1 for e in self.elements if isinstance(e, Lit))

    @property
    def slot_count(self) -> int:
        return sum(1 for e in self.elements if isinstance(e, Slot))

    @property
    def literal_texts(self) -> Tuple[str, ...]:
        return tuple(e.text for e in self.elements if isinstance(e, Lit))

    def pattern(self) -> str:
        parts = [e.text if isinstance(e, Lit) else f"<{e.name}>" for e in self.elements]
        return " ".join(parts)


def _lits(words: str) -> Tuple[Element, ...]:
    return tuple(Lit(w) for w in words.split())


def _device(name: str = "device") -> Slot:
    return Slot(name, SlotKind.DEVICE)


# (elements, action kind) — device slot named "device", set-argument "arg"
def _action_forms() -> List[Tuple[Tuple[Element, ...], ActionKind]]:
    forms: List[Tuple[Tuple[Element, ...], ActionKind]] = []
    for on_word, off_word in (("turn", "turn"), ("switch", "switch")):
        forms.append(((Lit(on_word), Lit("on"), _device()), ActionKind.TURN_ON))
        forms.append(((Lit(on_word), _device(), Lit("on")), ActionKind.TURN_ON))
        forms.append(((Lit(off_word), Lit("off"), _device()), ActionKind.TURN_OFF))
        forms.append(((Lit(off_word), _device(), Lit("off")), ActionKind.TURN_OFF))
    forms.append(((Lit("enable"), _device()), ActionKind.TURN_ON))
    forms.append(((Lit("disable"), _device()), ActionKind.TURN_OFF))
    forms.append(
        ((Lit("set"), _device(), Lit("to"), Slot("arg", SlotKind.VALUE)), ActionKind.SET_VALUE)
    )
    return forms


# (elements, predicate, direction) — device slot named "source",
# threshold slot named "threshold"
def _event_clauses() -> List[Tuple[Tuple[Element, ...], PredicateKind, Optional[Direction]]]:
    source = lambda: _device("source")
    threshold = lambda: Slot("threshold", SlotKind.VALUE)
    return [
        ((source(), Lit("turns"), Lit("on")), PredicateKind.BECAME_ON, None),
        ((source(), Lit("turns"), Lit("off")), PredicateKind.BECAME_OFF, None),
        ((source(), Lit("is"), Lit("activated")), PredicateKind.ACTIVATED, None),
        ((source(), Lit("activates")), PredicateKind.ACTIVATED, None),
        ((source(), Lit("goes"), Lit("above"), threshold()), PredicateKind.CROSSED_THRESHOLD,
         Direction.UP),
        ((source(), Lit("rises"), Lit("above"), threshold()), PredicateKind.CROSSED_THRESHOLD,
         Direction.UP),
        ((source(), Lit("goes"), Lit("below"), threshold()), PredicateKind.CROSSED_THRESHOLD,
         Direction.DOWN),
        ((source(), Lit("drops"), Lit("below"), threshold()), PredicateKind.CROSSED_THRESHOLD,
         Direction.DOWN),
    ]


_TIMING_TAILS: List[Tuple[str, str, Tuple[Element, ...], IntentKind]] = [
    ("delay", "in", (Lit("in"), Slot("duration", SlotKind.DURATION)), IntentKind.DELAYED_ACTION),
    ("at", "at", (Lit("at"), Slot("time", SlotKind.TIME)), IntentKind.DELAYED_ACTION),
    ("period", "from",
     (Lit("from"), Slot("time", SlotKind.TIME), Lit("to"), Slot("time2", SlotKind.TIME)),
     IntentKind.DELAYED_ACTION),
    ("daily", "everyday",
     (Lit("everyday"), Lit("at"), Slot("time", SlotKind.TIME)), IntentKind.REPEATING),
    ("daily", "every-day",
     (Lit("every"), Lit("day"), Lit("at"), Slot("time", SlotKind.TIME)), IntentKind.REPEATING),
    ("daily", "daily",
     (Lit("daily"), Lit("at"), Slot("time", SlotKind.TIME)), IntentKind.REPEATING),
    ("daily_period", "everyday",
     (Lit("everyday"), Lit("from"), Slot("time", SlotKind.TIME),
      Lit("to"), Slot("time2", SlotKind.TIME)), IntentKind.REPEATING),
    ("daily_period", "every-day",
     (Lit("every"), Lit("day"), Lit("from"), Slot("time", SlotKind.TIME),
      Lit("to"), Slot("time2", SlotKind.TIME)), IntentKind.REPEATING),
]


def _build_catalog() -> Tuple[Template, ...]:
    templates: List[Template] = []

    def add(prefix: str, **kwargs) -> None:
        templates.append(Template(id=f"{prefix}.{len(templates)}", **kwargs))

    action_forms = _action_forms()
    event_clauses = _event_clauses()

    # Event rules first: action + conjunction + event clause, both orders.
    for action_elements, action_kind in action_forms:
        for clause_elements, predicate, direction in event_clauses:
            for conjunction in ("when", "if"):
                add("event", intent=IntentKind.EVENT,
                    elements=action_elements + (Lit(conjunction),) + clause_elements,
                    action_kind=action_kind, predicate=predicate, direction=direction)
                add("event.inverted", intent=IntentKind.EVENT,
                    elements=(Lit(conjunction),) + clause_elements + action_elements,
                    action_kind=action_kind, predicate=predicate, direction=direction)

    # Timed actions: delayed, one-shot period, daily repeating (period).
    for action_elements, action_kind in action_forms:
        for family, _, tail, intent in _TIMING_TAILS:
            add(f"timed.{family}", intent=intent,
                elements=action_elements + tail,
                action_kind=action_kind, timing_family=family)

    # Direct actions.
    for action_elements, action_kind in action_forms:
        add("direct", intent=IntentKind.DIRECT_ACTION,
            elements=action_elements, action_kind=action_kind)

    # Causality queries.
    add("why", intent=IntentKind.WHY_DID_SOMETHING_HAPPEN,
        elements=(Lit("why"), Lit("did"), _device(), Lit("turn"), Lit("on")),
        predicate=PredicateKind.BECAME_ON)
    add("why", intent=IntentKind.WHY_DID_SOMETHING_HAPPEN,
        elements=(Lit("why"), Lit("did"), _device(), Lit("turn"), Lit("off")),
        predicate=PredicateKind.BECAME_OFF)
    add("why.more", intent=IntentKind.WHY_DID_SOMETHING_HAPPEN,
        elements=_lits("tell me more"),
        input_contexts=(CAUSAL_CHAIN_CONTEXT,), follow_up=True)

    # Rules defined for a device.
    add("rules", intent=IntentKind.RULES_DEFINED,
        elements=_lits("what rules are defined for") + (_device(),))
    add("rules", intent=IntentKind.RULES_DEFINED,
        elements=_lits("which rules are defined for") + (_device(),))
    add("rules", intent=IntentKind.RULES_DEFINED,
        elements=_lits("what rules do i have defined for") + (_device(),))
    add("rules", intent=IntentKind.RULES_DEFINED,
        elements=_lits("what rules do i have for") + (_device(),))

    # Rule rewrites, gated on a conversation that named a rule. The bare
    # and okay-prefixed forms both exist ("Okay, change it to 7:50 AM.").
    for lead in ((), (Lit("okay"),)):
        add("change", intent=IntentKind.RULES_DEFINED_CHANGE_SINGLE_RULE,
            elements=lead + (Lit("change"), Lit("it"), Lit("to"), Slot("time", SlotKind.TIME)),
            input_contexts=(CAUSAL_CHAIN_CONTEXT, RULES_LIST_CONTEXT))
        add("change", intent=IntentKind.RULES_DEFINED_CHANGE_SINGLE_RULE,
            elements=lead + (Lit("change"), Lit("rule"), Slot("rule_number", SlotKind.NUMBER),
                             Lit("to"), Slot("time", SlotKind.TIME)),
            input_contexts=(RULES_LIST_CONTEXT,))

    # Cancellation with confirmation.
    add("cancel", intent=IntentKind.CANCEL_COMMAND, elements=_lits("cancel last command"))
    add("cancel", intent=IntentKind.CANCEL_COMMAND, elements=_lits("cancel the last command"))
    add("cancel", intent=IntentKind.CANCEL_COMMAND, elements=_lits("undo the last command"))
    add("cancel", intent=IntentKind.CANCEL_COMMAND, elements=_lits("undo last command"))
    add("confirm.cancel", intent=IntentKind.CONFIRM_CANCEL, elements=(Lit("yes"),),
        input_contexts=(CANCEL_PENDING_CONTEXT,), answer="yes")
    add("confirm.cancel", intent=IntentKind.CONFIRM_CANCEL, elements=(Lit("no"),),
        input_contexts=(CANCEL_PENDING_CONTEXT,), answer="no")

    # Bare device phrase answering a disambiguation question.
    add("choice", intent=IntentKind.CONFIRM_THING_CHOICE, elements=(_device(),),
        input_contexts=(DEVICE_CHOICE_CONTEXT,))

    # Capability discovery.
    add("capabilities", intent=IntentKind.WHAT_CAN_YOU_DO, elements=_lits("what can you do"))
    add("capabilities", intent=IntentKind.WHAT_CAN_YOU_DO, elements=(Lit("help"),))

    return tuple(templates)


_CATALOG: Optional[Tuple[Template, ...]] = None


def template_catalog() -> Tuple[Template, ...]:
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _build_catalog()
    return _CATALOG


_SAMPLE_BY_NAME = {
    "device": "bedroom light",
    "source": "living room light",
    "time": "4pm",
    "time2": "6pm",
    "duration": "5 minutes",
    "arg": "20 degrees",
    "threshold": "20 degrees",
    "rule_number": "1",
}


def instantiate(template: Template, samples: Optional[Dict[str, str]] = None) -> str:
    """Render a sample utterance for a template (round-trip tests, docs)."""
    table = dict(_SAMPLE_BY_NAME)
    if samples:
        table.update(samples)
    parts = []
    for element in template.elements:
        if isinstance(element, Lit):
            parts.append(element.text)
        else:
            parts.append(table[element.name])
    return " ".join(parts)


def dump_catalog() -> str:
    """Human-readable listing of every supported phrasing."""
    lines: List[str] = []
    current: Optional[IntentKind] = None
    for template in template_catalog():
        if template.intent is not current:
            current = template.intent
            lines.append(f"\n{current.value}")
        gate = f"  [needs context: {', '.join(template.input_contexts)}]" \
            if template.input_contexts else ""
        lines.append(f"  {template.pattern()}{gate}")
    return "\n".join(lines).strip() + "\n"
