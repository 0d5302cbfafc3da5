"""Assembled system: clock, bus, devices, engine, store and dialogue.

One Runtime is one running smart space. The HTTP app, the REPL and the
scenario harness all drive it through the same methods, so behavior is
identical regardless of front end. Per-session turn ordering is enforced
with a lock per conversation.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable, Dict, List, Optional

from ..bus import MessageBus, QueueMessage, StateChangePayload
from ..causality import CommandLog, LogEntry
from ..clock import Clock, VirtualClock, WallClock
from ..devices import SimulatedDevice, build_devices
from ..dialogue import ConversationState, DialogueManager, EngineAdapter, Reply
from ..engine import Engine
from ..grammar.templates import (CANCEL_PENDING_CONTEXT, CAUSAL_CHAIN_CONTEXT,
                                 DEVICE_CHOICE_CONTEXT)
from ..model import ActionKind, DeviceDescriptor, DeviceKind, Value
from ..records import state_to_record, value_to_record, entry_to_record
from ..store import Store, replay
from ..text import describe_command, sentence

DEFAULT_START = datetime(2021, 1, 4, 7, 0)

TOGGLE = frozenset({ActionKind.TURN_ON, ActionKind.TURN_OFF})

DEFAULT_REGISTRY: List[DeviceDescriptor] = [
    DeviceDescriptor("bedroom-light", "bedroom light", DeviceKind.TOGGLEABLE, TOGGLE),
    DeviceDescriptor("living-room-light", "living room light", DeviceKind.TOGGLEABLE, TOGGLE),
    DeviceDescriptor("kitchen-light", "kitchen light", DeviceKind.TOGGLEABLE, TOGGLE),
    DeviceDescriptor("porch-light", "porch light", DeviceKind.TOGGLEABLE, TOGGLE),
    DeviceDescriptor("toaster", "toaster", DeviceKind.TOGGLEABLE, TOGGLE),
    DeviceDescriptor("motion-sensor", "motion sensor", DeviceKind.SENSOR, frozenset(),
                     emits_events=True),
    DeviceDescriptor("temperature-sensor", "temperature sensor", DeviceKind.SENSOR,
                     frozenset(), emits_events=True, unit="degrees"),
    DeviceDescriptor("thermostat", "thermostat", DeviceKind.THERMOSTAT,
                     frozenset({ActionKind.SET_VALUE}), unit="degrees"),
]


@dataclass
class RuntimeConfig:
    devices_file: Optional[Path] = None
    data_dir: Optional[Path] = None
    clock_mode: str = "virtual"  # virtual | wall
    start_time: datetime = DEFAULT_START
    registry: Optional[List[DeviceDescriptor]] = None


@dataclass
class _Session:
    state: ConversationState
    turn_seq: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


class Runtime:
    def __init__(self, config: RuntimeConfig):
        self.config = config
        self.store: Optional[Store] = Store(config.data_dir) if config.data_dir else None
        registry = config.registry
        if registry is None and config.devices_file is not None:
            from ..store import load_registry
            registry = load_registry(config.devices_file)
        if registry is None and self.store is not None:
            registry = self.store.load_registry() or None
        if registry is None:
            registry = list(DEFAULT_REGISTRY)
        self.registry = registry

        if config.clock_mode == "wall":
            self.clock: Clock = WallClock()
        else:
            self.clock = VirtualClock(config.start_time)
        self.bus = MessageBus()

        entries: List[LogEntry] = []
        sink = None
        if self.store is not None:
            entries = self.store.log_store.load()
            sink = self.store.log_store.append
            if not self.store.registry_path.exists():
                self.store.save_registry(registry)
        self.log = CommandLog(entries, sink=sink)

        self.devices: Dict[str, SimulatedDevice] = build_devices(registry, self.bus, self.clock)
        self.engine = Engine(registry, self.bus, self.clock, self.log)
        self.replay_warnings = replay(entries, self.engine) if entries else []
        self.dialogue = DialogueManager(EngineAdapter(self.engine))
        self._sessions: Dict[str, _Session] = {}
        self._sessions_lock = threading.Lock()
        self._listeners: List[Callable[[dict], None]] = []

        self.bus.add_tap(self._on_bus_message)
        self.log.add_listener(self._on_log_append)

    # ------------------------------------------------------------------
    # Stream events
    # ------------------------------------------------------------------

    def add_listener(self, listener: Callable[[dict], None]) -> None:
        """Subscribe to the self-describing event stream (UI feed)."""
        self._listeners.append(listener)

    def _emit(self, event_type: str, data: dict) -> None:
        event = {"type": event_type, "data": data}
        for listener in list(self._listeners):
            listener(event)

    def _on_bus_message(self, message: QueueMessage) -> None:
        payload = message.payload
        if isinstance(payload, StateChangePayload):
            self._emit("state_change", {
                "device_id": payload.new.device_id,
                "old": value_to_record(payload.old.value),
                "new": value_to_record(payload.new.value),
                "at": payload.new.updated_at.isoformat(),
            })

    def _on_log_append(self, entry: LogEntry) -> None:
        self._emit("log_append", entry_to_record(entry))

    def clock_payload(self) -> dict:
        return {"mode": self.config.clock_mode, "now": self.clock.now().isoformat()}

    # ------------------------------------------------------------------
    # Conversation
    # ------------------------------------------------------------------

    def _session(self, session_id: str) -> _Session:
        with self._sessions_lock:
            session = self._sessions.get(session_id)
            if session is None:
                session = _Session(state=self.dialogue.new_state(session_id))
                self._sessions[session_id] = session
            return session

    def chat(self, session_id: str, utterance: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            reply, new_state, _ = self.dialogue.handle_turn(session.state, utterance)
            session.state = new_state
            session.turn_seq += 1
            payload = {
                "session_id": session_id,
                "utterance": utterance,
                "reply": reply.text,
                "end_of_exchange": reply.end_of_exchange,
                "turn_seq": session.turn_seq,
                "suggestions": self._suggestions(reply),
            }
        self._emit("reply", payload)
        return payload

    def _suggestions(self, reply: Reply) -> List[str]:
        suggestions: List[str] = []
        for context in reply.output_contexts:
            if context.name == DEVICE_CHOICE_CONTEXT:
                for device_id in context.parameters.get("candidates", "").split(","):
                    descriptor = self.engine.registry.get(device_id)
                    if descriptor:
                        suggestions.append(descriptor.name)
            elif context.name == CANCEL_PENDING_CONTEXT:
                suggestions.extend(["yes", "no"])
            elif context.name == CAUSAL_CHAIN_CONTEXT:
                if context.parameters.get("units", "[]") != "[]":
                    suggestions.append("tell me more")
        return suggestions

    # ------------------------------------------------------------------
    # Introspection payloads (GET endpoints, REPL meta-commands)
    # ------------------------------------------------------------------

    def devices_payload(self) -> dict:
        states = self.engine.device_states()
        items = []
        for descriptor in self.registry:
            state = states[descriptor.id]
            items.append({
                "id": descriptor.id,
                "name": descriptor.name,
                "kind": descriptor.kind.value,
                "supported_actions": sorted(a.value for a in descriptor.supported_actions),
                "emits_events": descriptor.emits_events,
                "state": state_to_record(state),
            })
        return {"devices": items, "clock": self.clock_payload()}

    def rules_payload(self) -> dict:
        rules = []
        for cmd in self.engine.active_rules():
            rules.append({
                "id": cmd.id,
                "kind": cmd.kind.value,
                "device_id": cmd.action.device_id,
                "text": sentence(describe_command(cmd, self.engine.registry)),
                "created_by": cmd.created_by,
            })
        return {"rules": rules}

    def log_payload(self, since: int = 0) -> dict:
        return {"entries": [entry_to_record(e) for e in self.log.since(since)]}

    # ------------------------------------------------------------------
    # Simulation controls
    # ------------------------------------------------------------------

    @property
    def virtual(self) -> bool:
        return isinstance(self.clock, VirtualClock)

    def advance(self, seconds: float) -> dict:
        if not self.virtual:
            raise RuntimeError("clock advance is only available in virtual mode")
        assert isinstance(self.clock, VirtualClock)
        self.clock.advance(timedelta(seconds=seconds))
        payload = self.clock_payload()
        self._emit("clock", payload)
        return payload

    def inject_state(self, device_id: str, value: Value) -> dict:
        device = self.devices.get(device_id)
        if device is None:
            raise KeyError(device_id)
        device.set_state(value)
        return {"device_id": device_id, "state": value_to_record(device.state.value)}

    def close(self) -> None:
        if self.store is not None:
            self.store.close()
