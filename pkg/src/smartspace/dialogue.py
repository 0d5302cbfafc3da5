"""Multi-turn conversation management.

Owns the short-lived contexts that gate follow-up intents (device
disambiguation, cancel confirmation, rule referents, causal-chain
exploration), turns parsed intents into engine work through a narrow
port, and renders every reply from fixed canonical templates. The exact
strings are part of the test contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Tuple

from .causality import (ActorKind, CausalAnswer, EffectKind, LogEntry,
                        resolve_why)
from .engine import (CapabilityError, Command, Engine, EngineError,
                     ExecutionReceipt, RescheduleError, TimingDraft,
                     UndoReceipt)
from .grammar import Intent, IntentKind, NoMatch, parse
from .grammar.intents import ActionSketch, EventSketch, TimingSketch
from .grammar.templates import (CANCEL_PENDING_CONTEXT, CAUSAL_CHAIN_CONTEXT,
                                DEVICE_CHOICE_CONTEXT, RULES_LIST_CONTEXT)
from .model import (Action, ActionKind, Condition, DeviceDescriptor,
                    MatchKind, OnOff, Scalar, match_device)
from .text import (action_phrase, clock_compact, condition_phrase,
                   describe_command, onoff_word, sentence)

CONTEXT_TTL = 2  # user turns a context survives without being refreshed


@dataclass(frozen=True)
class Context:
    name: str
    parameters: Mapping[str, str] = field(default_factory=dict)
    turns_to_live: int = CONTEXT_TTL


@dataclass(frozen=True)
class PendingIntent:
    """An intent waiting for a device choice before it can be dispatched."""

    intent: Intent
    overrides: Mapping[str, str]  # slot name -> chosen device id
    asking_slot: str
    question: str


@dataclass
class ConversationState:
    session_id: str
    active_contexts: List[Context] = field(default_factory=list)
    pending_intent: Optional[PendingIntent] = None
    reprompted: bool = False

    def clone(self) -> "ConversationState":
        return ConversationState(
            session_id=self.session_id,
            active_contexts=list(self.active_contexts),
            pending_intent=self.pending_intent,
            reprompted=self.reprompted,
        )

    def context(self, name: str) -> Optional[Context]:
        for context in self.active_contexts:
            if context.name == name:
                return context
        return None


@dataclass(frozen=True)
class Reply:
    text: str
    end_of_exchange: bool = True
    output_contexts: Tuple[Context, ...] = ()

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("reply text must be non-empty")


@dataclass(frozen=True)
class EngineRequest:
    """What engine work a turn triggered; executed through the port."""

    kind: str  # create | why | rules | cancel | undo | reschedule
    detail: str = ""


class EnginePort(Protocol):  # pragma: no cover - structural typing only
    registry: Mapping[str, DeviceDescriptor]

    def now(self) -> datetime: ...

    def create(self, action: Action, *, second_action: Optional[Action] = None,
               timing: Optional[TimingDraft] = None,
               trigger: Optional[Condition] = None,
               created_by: str = "") -> ExecutionReceipt: ...

    def resolve_why(self, cond: Condition) -> Optional[CausalAnswer]: ...

    def rules_for(self, device_id: str) -> List[Command]: ...

    def peek_cancel_candidate(self) -> Optional[Command]: ...

    def cancel_last(self, utterance: str) -> Tuple[str, Optional[UndoReceipt]]: ...

    def reschedule(self, command_id: str, new_time, utterance: str) -> Command: ...

    def command(self, command_id: str) -> Optional[Command]: ...


class EngineAdapter:
    """Canonical EnginePort over an Engine and its command log."""

    def __init__(self, engine: Engine):
        self._engine = engine

    @property
    def registry(self) -> Mapping[str, DeviceDescriptor]:
        return self._engine.registry

    def now(self) -> datetime:
        return self._engine.now()

    def create(self, action, **kwargs) -> ExecutionReceipt:
        return self._engine.create(action, **kwargs)

    def resolve_why(self, cond: Condition) -> Optional[CausalAnswer]:
        return resolve_why(cond, self._engine.log, self._engine.now())

    def rules_for(self, device_id: str) -> List[Command]:
        return self._engine.rules_for(device_id)

    def peek_cancel_candidate(self) -> Optional[Command]:
        return self._engine.peek_cancel_candidate()

    def cancel_last(self, utterance: str) -> Tuple[str, Optional[UndoReceipt]]:
        return self._engine.cancel_last(utterance)

    def reschedule(self, command_id: str, new_time, utterance: str) -> Command:
        return self._engine.reschedule(command_id, new_time, utterance)

    def command(self, command_id: str) -> Optional[Command]:
        return self._engine.command(command_id)


SORRY = "Sorry, I didn't understand that."
NO_CAUSE = "I don't know why that happened."
WHOLE_STORY = "That's the whole story."
NOTHING_TO_CANCEL = "There is nothing to cancel."
NOTHING_CANCELLED = "Okay, nothing was cancelled."
WHICH_RULE = "Which rule do you mean?"
TELL_ME_MORE_HINT = ' Say "tell me more" to hear the rest.'

CAPABILITIES = (
    "I manage this smart space. You can say things like: "
    '"turn on the kitchen light", "turn off the light in 10 minutes", '
    '"turn on the light from 4pm to 5pm", "turn on the light everyday at 8am", '
    '"turn on the light when the motion sensor is activated", '
    '"what rules are defined for the bedroom light?", '
    '"why did the light turn on?", or "cancel last command".'
)

# Slots that carry a device phrase, in the order they get disambiguated.
_DEVICE_SLOTS = ("action", "event", "device")

_COMMAND_KINDS = (IntentKind.DIRECT_ACTION, IntentKind.DELAYED_ACTION,
                  IntentKind.REPEATING, IntentKind.EVENT)


def _phrase_of(intent: Intent, slot_name: str) -> Optional[str]:
    ref = intent.slots.get(slot_name)
    if ref is None:
        return None
    resolved = ref.resolved
    if isinstance(resolved, (ActionSketch, EventSketch)):
        return resolved.device_phrase
    if isinstance(resolved, str):
        return resolved
    return None


class DialogueManager:
    """Per-session turn handler; one instance serves many sessions."""

    def __init__(self, port: EnginePort):
        self.port = port

    @property
    def registry(self) -> Mapping[str, DeviceDescriptor]:
        return self.port.registry

    def new_state(self, session_id: str) -> ConversationState:
        return ConversationState(session_id=session_id)

    # ------------------------------------------------------------------
    # Turn handling
    # ------------------------------------------------------------------

    def handle_turn(self, state: ConversationState, utterance: str
                    ) -> Tuple[Reply, ConversationState, Optional[EngineRequest]]:
        state = state.clone()
        turn = _Turn(self, state, utterance)
        result = parse(utterance, list(self.registry.values()),
                       {c.name for c in state.active_contexts})
        if isinstance(result, NoMatch):
            turn.handle_no_match()
        else:
            turn.dispatch(result)
        return turn.finish()

    # ------------------------------------------------------------------
    # Why answers
    # ------------------------------------------------------------------

    def render_why_answer(self, answer: Optional[CausalAnswer]) -> Reply:
        """Latest cause first; deeper links walkable via "tell me more"."""
        if answer is None or not answer.chain:
            return Reply(NO_CAUSE)
        units = self._explanation_units(answer)
        rule_id = self._single_rule_id(answer)
        text = units[0]
        remaining = units[1:]
        if remaining:
            text += TELL_ME_MORE_HINT
        parameters = {"units": json.dumps(remaining)}
        if rule_id:
            parameters["rule_id"] = rule_id
        context = Context(CAUSAL_CHAIN_CONTEXT, parameters)
        return Reply(text, end_of_exchange=not remaining, output_contexts=(context,))

    def _single_rule_id(self, answer: CausalAnswer) -> Optional[str]:
        ids = []
        for entry in answer.chain:
            if entry.actor.command_id:
                ids.append(entry.actor.command_id)
            if entry.effect.kind is EffectKind.RULE_CREATED and entry.effect.command_id:
                ids.append(entry.effect.command_id)
        distinct = list(dict.fromkeys(ids))
        return distinct[0] if len(distinct) == 1 else None

    def _command_for(self, command_id: Optional[str],
                     creation: Optional[LogEntry]) -> Optional[Command]:
        if command_id:
            cmd = self.port.command(command_id)
            if cmd is not None:
                return cmd
        if creation is not None and creation.effect.command_payload:
            try:
                return Command.from_payload(creation.effect.command_payload)
            except Exception:
                return None
        return None

    def _it_phrase(self, action: Action) -> str:
        if action.kind is ActionKind.SET_VALUE:
            return f"set it to {action.argument}"
        return f"turn it {onoff_word(action)}"

    def _did_phrase(self, action: Action, leading: bool) -> str:
        name = self.registry[action.device_id].name \
            if action.device_id in self.registry else action.device_id
        if action.kind is ActionKind.SET_VALUE:
            core = f"the {name} was set to {action.argument}"
        else:
            core = f"the {name} turned {onoff_word(action)}"
        return core[0].upper() + core[1:] if leading else core

    def _rule_timing_phrase(self, cmd: Optional[Command], action: Action) -> str:
        if cmd is None or cmd.time is None:
            return ""
        spec = cmd.time
        if spec.at is not None:
            return f" at {clock_compact(spec.at)}"
        if spec.instant is not None:
            return f" at {clock_compact(spec.instant.time())}"
        if spec.period_start is not None and spec.period_end is not None:
            boundary = spec.period_end if action == cmd.second_action else spec.period_start
            return f" at {clock_compact(boundary.time())}"
        if spec.start is not None and spec.end is not None:
            boundary = spec.end if action == cmd.second_action else spec.start
            return f" at {clock_compact(boundary)}"
        return ""

    def _explanation_units(self, answer: CausalAnswer) -> List[str]:
        """One sentence per causal step; a rule fire and its creation
        entry collapse into a single "you told me to" sentence."""
        chain = answer.chain
        units: List[str] = []
        index = 0
        first = True
        while index < len(chain):
            entry = chain[index]
            actor = entry.actor
            effect = entry.effect
            if effect.kind is EffectKind.RULE_CREATED:
                cmd = self._command_for(effect.command_id, entry)
                if cmd is not None:
                    units.append(f"You told me to {describe_command(cmd, self.registry)}.")
                else:
                    units.append("You told me to set that up.")
                index += 1
            elif actor.kind is ActorKind.USER:
                assert effect.action is not None
                if first:
                    units.append(f"You told me to {self._it_phrase(effect.action)}.")
                else:
                    units.append(f"{self._did_phrase(effect.action, leading=True)} "
                                 f"because you told me to.")
                index += 1
            elif actor.kind is ActorKind.RULE:
                assert effect.action is not None
                absorbed = (index + 1 < len(chain)
                            and chain[index + 1].effect.kind is EffectKind.RULE_CREATED
                            and chain[index + 1].effect.command_id == actor.command_id)
                creation = chain[index + 1] if absorbed else None
                cmd = self._command_for(actor.command_id, creation)
                timing = self._rule_timing_phrase(cmd, effect.action)
                told = f"you told me to {self._it_phrase(effect.action)}{timing}"
                if first:
                    units.append(told[0].upper() + told[1:] + ".")
                else:
                    units.append(f"{self._did_phrase(effect.action, leading=True)} "
                                 f"because {told}.")
                index += 2 if absorbed else 1
            else:  # EVENT
                assert effect.action is not None
                cmd = self._command_for(actor.command_id, None)
                if cmd is not None and cmd.trigger is not None:
                    because = condition_phrase(cmd.trigger, self.registry, past=True)
                else:
                    because = "another device changed"
                if first:
                    units.append(f"It turned {onoff_word(effect.action)} because {because}.")
                else:
                    units.append(f"{self._did_phrase(effect.action, leading=True)} "
                                 f"because {because}.")
                index += 1
            first = False
        return units

    # ------------------------------------------------------------------
    # Rules listings
    # ------------------------------------------------------------------

    def render_rules_list(self, device: DeviceDescriptor,
                          rules: Sequence[Command]) -> Reply:
        if not rules:
            return Reply(f"No rules are defined for the {device.name}.")
        lines = [f"{i}. {sentence(describe_command(cmd, self.registry))}"
                 for i, cmd in enumerate(rules, start=1)]
        context = Context(RULES_LIST_CONTEXT, {
            "rule_ids": ",".join(cmd.id for cmd in rules),
            "device_id": device.id,
        })
        return Reply("\n".join(lines), output_contexts=(context,))


class _Turn:
    """Mutable scratchpad for one handle_turn call."""

    def __init__(self, manager: DialogueManager, state: ConversationState, utterance: str):
        self.manager = manager
        self.port = manager.port
        self.registry = manager.registry
        self.state = state
        self.utterance = utterance
        self.consumed: set = set()
        self.new_contexts: List[Context] = []
        self.reply_text = SORRY
        self.end_of_exchange = True
        self.request: Optional[EngineRequest] = None
        self.clear_pending = False

    # -- plumbing ------------------------------------------------------

    def say(self, text: str, end_of_exchange: bool = True) -> None:
        self.reply_text = text
        self.end_of_exchange = end_of_exchange

    def emit_context(self, context: Context) -> None:
        self.consumed.add(context.name)  # refresh replaces the old instance
        self.new_contexts.append(context)

    def consume(self, name: str) -> None:
        self.consumed.add(name)

    def finish(self) -> Tuple[Reply, ConversationState, Optional[EngineRequest]]:
        kept: List[Context] = []
        for context in self.state.active_contexts:
            if context.name in self.consumed:
                continue
            aged = replace(context, turns_to_live=context.turns_to_live - 1)
            if aged.turns_to_live > 0:
                kept.append(aged)
        self.state.active_contexts = kept + self.new_contexts
        if self.clear_pending:
            self.state.pending_intent = None
            self.state.reprompted = False
        # Invariant: a pending intent always has its gating context alive.
        if self.state.pending_intent is not None \
                and self.state.context(DEVICE_CHOICE_CONTEXT) is None:
            self.state.pending_intent = None
            self.state.reprompted = False
        reply = Reply(self.reply_text, self.end_of_exchange, tuple(self.new_contexts))
        return reply, self.state, self.request

    # -- no-match / re-prompt ------------------------------------------

    def handle_no_match(self) -> None:
        pending = self.state.pending_intent
        if pending is not None and self.state.context(DEVICE_CHOICE_CONTEXT) is not None:
            if not self.state.reprompted:
                self.state.reprompted = True
                self.refresh_choice_context()
                self.say(pending.question, end_of_exchange=False)
            else:
                self.consume(DEVICE_CHOICE_CONTEXT)
                self.clear_pending = True
                self.say(SORRY)
            return
        self.say(SORRY)

    def refresh_choice_context(self) -> None:
        context = self.state.context(DEVICE_CHOICE_CONTEXT)
        if context is not None:
            self.emit_context(replace(context, turns_to_live=CONTEXT_TTL))

    # -- dispatch --------------------------------------------------------

    def dispatch(self, intent: Intent) -> None:
        kind = intent.kind
        if kind in _COMMAND_KINDS:
            self.resolve_then(intent, {}, self.perform_command)
        elif kind is IntentKind.CONFIRM_THING_CHOICE:
            self.handle_choice(intent)
        elif kind is IntentKind.WHY_DID_SOMETHING_HAPPEN:
            template = intent.matched_template
            if template.startswith("why.more"):
                self.handle_tell_me_more()
            else:
                self.resolve_then(intent, {}, self.perform_why)
        elif kind is IntentKind.RULES_DEFINED:
            self.resolve_then(intent, {}, self.perform_rules)
        elif kind is IntentKind.RULES_DEFINED_CHANGE_SINGLE_RULE:
            self.perform_change(intent)
        elif kind is IntentKind.CANCEL_COMMAND:
            self.perform_cancel_prompt()
        elif kind is IntentKind.CONFIRM_CANCEL:
            self.perform_cancel_confirm(intent)
        else:
            self.say(CAPABILITIES)

    # -- device resolution ----------------------------------------------

    def resolve_then(self, intent: Intent, overrides: Mapping[str, str], action) -> None:
        bindings: Dict[str, str] = dict(overrides)
        for slot_name in _DEVICE_SLOTS:
            if slot_name in bindings or slot_name not in intent.slots:
                continue
            phrase = _phrase_of(intent, slot_name)
            if phrase is None:
                continue
            result = match_device(phrase, self.registry.values())
            if result.kind is MatchKind.NONE:
                self.say(f'Sorry, I couldn\'t find a device called "{phrase}".')
                return
            if result.kind is MatchKind.AMBIGUOUS:
                self.ask_choice(intent, bindings, slot_name, result.devices)
                return
            bindings[slot_name] = result.device.id
        action(intent, bindings)

    def ask_choice(self, intent: Intent, overrides: Mapping[str, str],
                   slot_name: str, candidates: Sequence[DeviceDescriptor]) -> None:
        names = [f"the {d.name}" for d in candidates]
        if len(names) == 2:
            listing = f"{names[0]} or {names[1]}"
        else:
            listing = ", ".join(names[:-1]) + f", or {names[-1]}"
        question = f"Do you mean {listing}?"
        self.state.pending_intent = PendingIntent(
            intent=intent, overrides=dict(overrides),
            asking_slot=slot_name, question=question,
        )
        self.state.reprompted = False
        self.emit_context(Context(DEVICE_CHOICE_CONTEXT, {
            "candidates": ",".join(d.id for d in candidates),
            "slot": slot_name,
        }))
        self.say(question, end_of_exchange=False)

    def handle_choice(self, intent: Intent) -> None:
        pending = self.state.pending_intent
        context = self.state.context(DEVICE_CHOICE_CONTEXT)
        if pending is None or context is None:
            self.say(SORRY)
            return
        phrase = _phrase_of(intent, "device") or ""
        candidate_ids = context.parameters.get("candidates", "").split(",")
        candidates = [self.registry[i] for i in candidate_ids if i in self.registry]
        result = match_device(phrase, candidates)
        if result.kind is not MatchKind.UNIQUE:
            self.handle_no_match()
            return
        self.consume(DEVICE_CHOICE_CONTEXT)
        self.clear_pending = True
        overrides = dict(pending.overrides)
        overrides[pending.asking_slot] = result.device.id
        original = pending.intent
        self.state.pending_intent = None
        self.state.reprompted = False
        if original.kind in _COMMAND_KINDS:
            self.resolve_then(original, overrides, self.perform_command)
        elif original.kind is IntentKind.WHY_DID_SOMETHING_HAPPEN:
            self.resolve_then(original, overrides, self.perform_why)
        elif original.kind is IntentKind.RULES_DEFINED:
            self.resolve_then(original, overrides, self.perform_rules)
        else:
            self.say(SORRY)

    # -- command intents --------------------------------------------------

    def perform_command(self, intent: Intent, bindings: Mapping[str, str]) -> None:
        sketch = intent.slot("action").resolved
        assert isinstance(sketch, ActionSketch)
        action = Action(bindings["action"], sketch.kind, argument=sketch.argument)
        timing_sketch: Optional[TimingSketch] = None
        timing: Optional[TimingDraft] = None
        trigger: Optional[Condition] = None
        if intent.kind in (IntentKind.DELAYED_ACTION, IntentKind.REPEATING):
            resolved = intent.slot("time").resolved
            assert isinstance(resolved, TimingSketch)
            timing_sketch = resolved
            timing = TimingDraft(resolved.family, delay_seconds=resolved.delay_seconds,
                                 at=resolved.at, start=resolved.start, end=resolved.end)
        if intent.kind is IntentKind.EVENT:
            event = intent.slot("event").resolved
            assert isinstance(event, EventSketch)
            trigger = Condition(bindings["event"], event.predicate,
                                direction=event.direction, threshold=event.threshold)
        try:
            receipt = self.port.create(action, timing=timing, trigger=trigger,
                                       created_by=intent.utterance)
        except CapabilityError:
            name = self.registry[action.device_id].name
            self.say(f"Sorry, the {name} can't do that.")
            return
        except EngineError:
            self.say(SORRY)
            return
        self.request = EngineRequest("create", receipt.command.id)
        self.say(self.ack_for(receipt, timing_sketch))

    def ack_for(self, receipt: ExecutionReceipt, timing_sketch: Optional[TimingSketch]) -> str:
        cmd = receipt.command
        if cmd.kind.value == "direct":
            entry = receipt.entries[0]
            assert entry.effect.new is not None
            name = self.registry[cmd.action.device_id].name
            value = entry.effect.new.value
            if isinstance(value, OnOff):
                return f"Okay, the {name} is now {value}."
            return f"Okay, the {name} is now set to {value}."
        if timing_sketch is not None and timing_sketch.family == "delay":
            return (f"Okay, I will {action_phrase(cmd.action, self.registry)} "
                    f"in {timing_sketch.delay_text}.")
        return f"Okay, I will {describe_command(cmd, self.registry)}."

    # -- causality ---------------------------------------------------------

    def perform_why(self, intent: Intent, bindings: Mapping[str, str]) -> None:
        sketch = intent.slot("event").resolved
        assert isinstance(sketch, EventSketch)
        cond = Condition(bindings["event"], sketch.predicate,
                         direction=sketch.direction, threshold=sketch.threshold)
        answer = self.port.resolve_why(cond)
        self.request = EngineRequest("why", cond.device_id)
        reply = self.manager.render_why_answer(answer)
        self.say(reply.text, reply.end_of_exchange)
        for context in reply.output_contexts:
            self.emit_context(context)

    def handle_tell_me_more(self) -> None:
        context = self.state.context(CAUSAL_CHAIN_CONTEXT)
        if context is None:
            self.say(SORRY)
            return
        units = json.loads(context.parameters.get("units", "[]"))
        if not units:
            self.consume(CAUSAL_CHAIN_CONTEXT)
            self.say(WHOLE_STORY)
            return
        head, *rest = units
        parameters = dict(context.parameters)
        parameters["units"] = json.dumps(rest)
        self.emit_context(Context(CAUSAL_CHAIN_CONTEXT, parameters))
        self.say(head, end_of_exchange=not rest)

    # -- rules listings and rewrites ----------------------------------------

    def perform_rules(self, intent: Intent, bindings: Mapping[str, str]) -> None:
        device = self.registry[bindings["device"]]
        rules = self.port.rules_for(device.id)
        self.request = EngineRequest("rules", device.id)
        reply = self.manager.render_rules_list(device, rules)
        self.say(reply.text, reply.end_of_exchange)
        for context in reply.output_contexts:
            self.emit_context(context)

    def perform_change(self, intent: Intent) -> None:
        rule_id = self.find_rule_referent(intent)
        if rule_id is None:
            return  # find_rule_referent already replied
        new_time = intent.slot("time").resolved
        assert isinstance(new_time, TimingSketch) and new_time.at is not None
        try:
            new_cmd = self.port.reschedule(rule_id, new_time.at, intent.utterance)
        except RescheduleError:
            self.say("Sorry, I can only move rules that run at a single time of day.")
            return
        except EngineError:
            self.say(SORRY)
            return
        self.request = EngineRequest("reschedule", f"{rule_id}->{new_cmd.id}")
        name = self.registry[new_cmd.action.device_id].name
        self.say(f"Sure, {name} timer was changed.")

    def find_rule_referent(self, intent: Intent) -> Optional[str]:
        number_ref = intent.slots.get("rule_number")
        rules_context = self.state.context(RULES_LIST_CONTEXT)
        chain_context = self.state.context(CAUSAL_CHAIN_CONTEXT)
        if number_ref is not None:
            if rules_context is None:
                self.say(WHICH_RULE)
                return None
            ids = rules_context.parameters.get("rule_ids", "").split(",")
            index = int(number_ref.resolved) - 1
            if not (0 <= index < len(ids)) or not ids[index]:
                self.emit_context(replace(rules_context, turns_to_live=CONTEXT_TTL))
                self.say(WHICH_RULE, end_of_exchange=False)
                return None
            self.consume(RULES_LIST_CONTEXT)
            return ids[index]
        if chain_context is not None:
            rule_id = chain_context.parameters.get("rule_id")
            if rule_id:
                self.consume(CAUSAL_CHAIN_CONTEXT)
                return rule_id
            self.emit_context(replace(chain_context, turns_to_live=CONTEXT_TTL))
            self.say(WHICH_RULE, end_of_exchange=False)
            return None
        if rules_context is not None:
            ids = [i for i in rules_context.parameters.get("rule_ids", "").split(",") if i]
            if len(ids) == 1:
                self.consume(RULES_LIST_CONTEXT)
                return ids[0]
            self.emit_context(replace(rules_context, turns_to_live=CONTEXT_TTL))
            self.say(WHICH_RULE, end_of_exchange=False)
            return None
        self.say(SORRY)
        return None

    # -- cancellation -------------------------------------------------------

    def perform_cancel_prompt(self) -> None:
        candidate = self.port.peek_cancel_candidate()
        self.request = EngineRequest("cancel", candidate.id if candidate else "")
        if candidate is None:
            self.say(NOTHING_TO_CANCEL)
            return
        clause = describe_command(candidate, self.registry)
        self.emit_context(Context(CANCEL_PENDING_CONTEXT, {"command_id": candidate.id}))
        self.say(f'Are you sure you want to cancel "{clause}"?', end_of_exchange=False)

    def perform_cancel_confirm(self, intent: Intent) -> None:
        self.consume(CANCEL_PENDING_CONTEXT)
        if intent.slot("answer").resolved != "yes":
            self.say(NOTHING_CANCELLED)
            return
        text, receipt = self.port.cancel_last(intent.utterance)
        self.request = EngineRequest("undo", receipt.command.id if receipt else "")
        self.say(text)
