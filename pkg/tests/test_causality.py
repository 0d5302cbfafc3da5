from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Dict, List, Optional, Tuple

import pytest

from smartspace.causality import (Actor, ActorKind, CausePolicy,
                                  CommandLog, Effect, EffectKind, LogEntry,
                                  action_could_cause, could_have_caused,
                                  resolve_why, state_satisfies)
from smartspace.engine import Command, CommandKind
from smartspace.model import (Action, ActionKind, Condition, DeviceState, Direction,
                              OnOff, PredicateKind, Scalar, TimeSpec)

T0 = datetime(2021, 1, 4, 0, 0)


def at(minutes: float) -> datetime:
    return T0 + timedelta(minutes=minutes)


def onoff_state(device_id: str, on: bool, when: datetime) -> DeviceState:
    return DeviceState(device_id, OnOff(on), when)


# ---------------------------------------------------------------------------
# Brute-force replay oracle (independent of resolve_why's backward scan):
# walk the log forward, simulate every transition, and remember the entry
# after which the condition held continuously until the query time. The
# root is found by following actor references from that entry.
# ---------------------------------------------------------------------------


def oracle_resolve(cond: Condition, entries: List[LogEntry],
                   query_time: datetime) -> Optional[Tuple[int, int]]:
    held_since: Optional[LogEntry] = None
    for entry in entries:
        if entry.at > query_time:
            break
        effect = entry.effect
        if effect.kind is not EffectKind.ACTION_PERFORMED:
            continue
        if effect.action is None or effect.action.device_id != cond.device_id:
            continue
        assert effect.new is not None
        if state_satisfies(cond, effect.new.value):
            if held_since is None:
                held_since = entry
        else:
            held_since = None
    if held_since is None:
        return None

    by_seq = {entry.seq: entry for entry in entries}

    def creation_of(command_id: Optional[str], before: int) -> Optional[LogEntry]:
        for entry in entries:
            if entry.seq >= before:
                return None
            if entry.effect.kind is EffectKind.RULE_CREATED \
                    and entry.effect.command_id == command_id:
                return entry
        return None

    root = held_since
    while True:
        actor = root.actor
        if actor.kind is ActorKind.USER:
            break
        if actor.kind is ActorKind.RULE:
            creation = creation_of(actor.command_id, root.seq)
            if creation is None:
                break
            root = creation
            continue
        producer = by_seq.get(actor.cause_entry_seq) if actor.cause_entry_seq else None
        if producer is not None and producer.seq < root.seq:
            root = producer
            continue
        creation = creation_of(actor.command_id, root.seq)
        if creation is None:
            break
        root = creation
    return held_since.seq, root.seq


# ---------------------------------------------------------------------------
# Random well-formed log generator
# ---------------------------------------------------------------------------


@dataclass
class _Rule:
    command_id: str
    action: Action
    trigger_device: Optional[str] = None  # set for event rules


def generate_log(rng: random.Random, max_entries: int = 50,
                 device_count: int = 5) -> List[LogEntry]:
    devices = [f"dev-{i}" for i in range(rng.randint(1, device_count))]
    states: Dict[str, DeviceState] = {d: onoff_state(d, False, T0) for d in devices}
    last_action_entry: Dict[str, int] = {}
    rules: List[_Rule] = []
    entries: List[LogEntry] = []
    seq = 0
    minutes = 0.0

    def push(actor: Actor, effect: Effect) -> LogEntry:
        nonlocal seq
        seq += 1
        entry = LogEntry(seq=seq, at=at(minutes), actor=actor, effect=effect)
        entries.append(entry)
        return entry

    def perform(action: Action, actor: Actor) -> None:
        old = states[action.device_id]
        new_value = OnOff(action.kind is ActionKind.TURN_ON)
        new = DeviceState(action.device_id, new_value, at(minutes))
        states[action.device_id] = new
        entry = push(actor, Effect.action_performed(action, old, new))
        last_action_entry[action.device_id] = entry.seq

    for _ in range(rng.randint(1, max_entries)):
        if len(entries) >= max_entries:
            break
        minutes += rng.randint(1, 30)
        roll = rng.random()
        if roll < 0.2:
            command_id = f"cmd-{len(rules) + 1}"
            action = Action(rng.choice(devices),
                            rng.choice((ActionKind.TURN_ON, ActionKind.TURN_OFF)))
            trigger = rng.choice(devices) if rng.random() < 0.5 else None
            rules.append(_Rule(command_id, action, trigger))
            push(Actor.user(f"create {command_id}"),
                 Effect.rule_created(command_id, {"kind": "repeating"}))
        elif roll < 0.45 or not rules:
            action = Action(rng.choice(devices),
                            rng.choice((ActionKind.TURN_ON, ActionKind.TURN_OFF)))
            perform(action, Actor.user("do it"))
        else:
            rule = rng.choice(rules)
            if rule.trigger_device is not None:
                cause = last_action_entry.get(rule.trigger_device)
                actor = Actor.event(rule.command_id,
                                    provoking_seq=rng.randint(1, 99),
                                    cause_entry_seq=cause)
            else:
                actor = Actor.rule(rule.command_id)
            perform(rule.action, actor)
    return entries


# ---------------------------------------------------------------------------
# Hand-built cases
# ---------------------------------------------------------------------------


def build_toaster_log() -> List[LogEntry]:
    """User creates a daily 8 AM rule; it fires at 08:00."""
    creation = LogEntry(
        seq=1, at=datetime(2021, 1, 4, 7, 0),
        actor=Actor.user("turn on the toaster everyday at 8am"),
        effect=Effect.rule_created("cmd-1", {"kind": "repeating"}),
    )
    fire = LogEntry(
        seq=2, at=datetime(2021, 1, 4, 8, 0),
        actor=Actor.rule("cmd-1"),
        effect=Effect.action_performed(
            Action("toaster", ActionKind.TURN_ON),
            onoff_state("toaster", False, datetime(2021, 1, 4, 7, 0)),
            onoff_state("toaster", True, datetime(2021, 1, 4, 8, 0)),
        ),
    )
    return [creation, fire]


class TestCouldHaveCaused:
    def test_direct_turn_on_causes_became_on(self):
        cmd = Command(id="c", kind=CommandKind.DIRECT,
                      action=Action("toaster", ActionKind.TURN_ON), created_by="x")
        assert could_have_caused(cmd, Condition("toaster", PredicateKind.BECAME_ON))

    def test_wrong_device(self):
        cmd = Command(id="c", kind=CommandKind.DIRECT,
                      action=Action("toaster", ActionKind.TURN_ON), created_by="x")
        assert not could_have_caused(cmd, Condition("light", PredicateKind.BECAME_ON))

    def test_period_pair_checks_both_actions(self):
        # Oracle by hand: first action turn_on cannot cause became_off, but
        # the paired second action can.
        cmd = Command(
            id="c", kind=CommandKind.PERIOD,
            action=Action("light", ActionKind.TURN_ON),
            second_action=Action("light", ActionKind.TURN_OFF),
            time=TimeSpec.window(datetime(2021, 1, 4, 16, 0), datetime(2021, 1, 4, 17, 0)),
            created_by="x",
        )
        assert could_have_caused(cmd, Condition("light", PredicateKind.BECAME_OFF))
        assert could_have_caused(cmd, Condition("light", PredicateKind.BECAME_ON))

    def test_set_value_against_threshold(self):
        up = Condition("t", PredicateKind.CROSSED_THRESHOLD, direction=Direction.UP,
                       threshold=20.0)
        hot = Action("t", ActionKind.SET_VALUE, argument=Scalar(25.0))
        cold = Action("t", ActionKind.SET_VALUE, argument=Scalar(15.0))
        assert action_could_cause(hot, up)
        assert not action_could_cause(cold, up)


class TestResolveWhy:
    def test_toaster_rule_chain(self):
        entries = build_toaster_log()
        cond = Condition("toaster", PredicateKind.BECAME_ON)
        answer = resolve_why(cond, entries, datetime(2021, 1, 4, 8, 5))
        assert answer is not None
        assert [e.seq for e in answer.chain] == [2, 1]
        assert answer.exhausted
        assert answer.policy is CausePolicy.EARLIEST_CAUSE

    def test_never_turned_on_is_no_cause(self):
        entries = build_toaster_log()
        cond = Condition("light", PredicateKind.BECAME_ON)
        assert resolve_why(cond, entries, datetime(2021, 1, 4, 9, 0)) is None

    def test_earliest_of_two_independent_causes(self):
        # Derived case: two rules able to turn the light on fire at 07:00
        # and 07:30; the earliest is the cause. Expected seqs frozen from
        # the forward-replay oracle below.
        entries = []
        entries.append(LogEntry(1, at(0), Actor.user("create a"),
                                Effect.rule_created("cmd-a", {"kind": "repeating"})))
        entries.append(LogEntry(2, at(1), Actor.user("create b"),
                                Effect.rule_created("cmd-b", {"kind": "repeating"})))
        entries.append(LogEntry(
            3, datetime(2021, 1, 4, 7, 0), Actor.rule("cmd-a"),
            Effect.action_performed(Action("light", ActionKind.TURN_ON),
                                    onoff_state("light", False, at(1)),
                                    onoff_state("light", True, datetime(2021, 1, 4, 7, 0)))))
        entries.append(LogEntry(
            4, datetime(2021, 1, 4, 7, 30), Actor.rule("cmd-b"),
            Effect.action_performed(Action("light", ActionKind.TURN_ON),
                                    onoff_state("light", True, datetime(2021, 1, 4, 7, 0)),
                                    onoff_state("light", True, datetime(2021, 1, 4, 7, 30)))))
        cond = Condition("light", PredicateKind.BECAME_ON)
        query = datetime(2021, 1, 4, 8, 0)
        assert oracle_resolve(cond, entries, query) == (3, 1)
        answer = resolve_why(cond, entries, query)
        assert answer is not None
        assert answer.chain[0].seq == 3
        assert answer.chain[-1].seq == 1

    def test_contrary_transition_resets_window(self):
        # on at 07:00 (rule a), off at 07:30 (user), on at 07:45 (user):
        # the 07:45 direct action is the cause, not the stale rule fire.
        entries = []
        entries.append(LogEntry(1, at(0), Actor.user("create a"),
                                Effect.rule_created("cmd-a", {"kind": "repeating"})))
        entries.append(LogEntry(
            2, datetime(2021, 1, 4, 7, 0), Actor.rule("cmd-a"),
            Effect.action_performed(Action("light", ActionKind.TURN_ON),
                                    onoff_state("light", False, at(0)),
                                    onoff_state("light", True, datetime(2021, 1, 4, 7, 0)))))
        entries.append(LogEntry(
            3, datetime(2021, 1, 4, 7, 30), Actor.user("turn off the light"),
            Effect.action_performed(Action("light", ActionKind.TURN_OFF),
                                    onoff_state("light", True, datetime(2021, 1, 4, 7, 0)),
                                    onoff_state("light", False, datetime(2021, 1, 4, 7, 30)))))
        entries.append(LogEntry(
            4, datetime(2021, 1, 4, 7, 45), Actor.user("turn on the light"),
            Effect.action_performed(Action("light", ActionKind.TURN_ON),
                                    onoff_state("light", False, datetime(2021, 1, 4, 7, 30)),
                                    onoff_state("light", True, datetime(2021, 1, 4, 7, 45)))))
        cond = Condition("light", PredicateKind.BECAME_ON)
        query = datetime(2021, 1, 4, 8, 0)
        assert oracle_resolve(cond, entries, query) == (4, 4)
        answer = resolve_why(cond, entries, query)
        assert answer is not None
        assert answer.chain[0].seq == 4
        assert answer.exhausted

    def test_event_chain_walks_through_provoking_entry(self):
        # Daily rule turns the living room light on at 9:00; an event rule
        # makes the bedroom light follow. Chain: bedroom fire -> living
        # room fire -> daily creation. Exactly 3 hops.
        nine = datetime(2021, 1, 4, 9, 0)
        entries = [
            LogEntry(1, at(0), Actor.user("living room on at 9am"),
                     Effect.rule_created("cmd-daily", {"kind": "repeating"})),
            LogEntry(2, at(1), Actor.user("bedroom follows living room"),
                     Effect.rule_created("cmd-event", {"kind": "event_rule"})),
            LogEntry(3, nine, Actor.rule("cmd-daily"),
                     Effect.action_performed(Action("living-room-light", ActionKind.TURN_ON),
                                             onoff_state("living-room-light", False, at(1)),
                                             onoff_state("living-room-light", True, nine))),
            LogEntry(4, nine, Actor.event("cmd-event", provoking_seq=1, cause_entry_seq=3),
                     Effect.action_performed(Action("bedroom-light", ActionKind.TURN_ON),
                                             onoff_state("bedroom-light", False, at(1)),
                                             onoff_state("bedroom-light", True, nine))),
        ]
        cond = Condition("bedroom-light", PredicateKind.BECAME_ON)
        answer = resolve_why(cond, entries, datetime(2021, 1, 4, 9, 5))
        assert answer is not None
        assert [e.seq for e in answer.chain] == [4, 3, 1]
        assert answer.exhausted
        assert oracle_resolve(cond, entries, datetime(2021, 1, 4, 9, 5)) == (4, 1)

    def test_event_without_logged_cause_falls_back_to_rule_creation(self):
        nine = datetime(2021, 1, 4, 9, 0)
        entries = [
            LogEntry(1, at(0), Actor.user("light on when sensor activates"),
                     Effect.rule_created("cmd-event", {"kind": "event_rule"})),
            LogEntry(2, nine, Actor.event("cmd-event", provoking_seq=1, cause_entry_seq=None),
                     Effect.action_performed(Action("light", ActionKind.TURN_ON),
                                             onoff_state("light", False, at(0)),
                                             onoff_state("light", True, nine))),
        ]
        cond = Condition("light", PredicateKind.BECAME_ON)
        answer = resolve_why(cond, entries, datetime(2021, 1, 4, 9, 5))
        assert answer is not None
        assert [e.seq for e in answer.chain] == [2, 1]

    def test_heuristic_policy_is_stubbed(self):
        with pytest.raises(NotImplementedError):
            resolve_why(Condition("x", PredicateKind.BECAME_ON), [], T0,
                        policy=CausePolicy.HEURISTIC)

    def test_oracle_equivalence_randomized(self):
        rng = random.Random(1337)
        disagreements = 0
        for _ in range(200):
            entries = generate_log(rng)
            device_id = rng.choice(sorted({e.effect.action.device_id for e in entries
                                           if e.effect.action is not None} or {"dev-0"}))
            predicate = rng.choice((PredicateKind.BECAME_ON, PredicateKind.BECAME_OFF))
            cond = Condition(device_id, predicate)
            query_time = entries[-1].at if entries else T0
            expected = oracle_resolve(cond, entries, query_time)
            answer = resolve_why(cond, entries, query_time)
            if expected is None:
                if answer is not None:
                    disagreements += 1
            elif answer is None or (answer.chain[0].seq, answer.chain[-1].seq) != expected:
                disagreements += 1
        assert disagreements == 0


class TestCommandLog:
    def test_first_entry_seq_is_one(self):
        log = CommandLog()
        entry = log.append(Actor.user("x"), Effect.rule_created("cmd-1", {}), T0)
        assert entry.seq == 1

    def test_seq_and_time_monotone(self):
        log = CommandLog()
        for i in range(100):
            log.append(Actor.user("x"), Effect.rule_created(f"cmd-{i}", {}), at(i))
        seqs = [e.seq for e in log]
        assert seqs == list(range(1, 101))
        with pytest.raises(ValueError):
            log.append(Actor.user("x"), Effect.rule_created("late", {}), at(1))

    def test_sink_failure_aborts_append(self):
        def sink(entry):
            raise RuntimeError("disk is gone")

        log = CommandLog(sink=sink)
        with pytest.raises(RuntimeError):
            log.append(Actor.user("x"), Effect.rule_created("cmd-1", {}), T0)
        assert len(log) == 0  # no partial effects

    def test_chain_well_formedness_is_recheckable(self):
        entries = build_toaster_log()
        cond = Condition("toaster", PredicateKind.BECAME_ON)
        answer = resolve_why(cond, entries, datetime(2021, 1, 4, 8, 5))
        assert answer is not None
        for earlier, later in zip(answer.chain, answer.chain[1:]):
            actor = earlier.actor
            linked = (later.effect.kind is EffectKind.RULE_CREATED
                      and later.effect.command_id == actor.command_id) \
                or (actor.cause_entry_seq == later.seq)
            assert linked
