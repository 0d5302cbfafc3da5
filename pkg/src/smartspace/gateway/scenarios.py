"""Scenario harness: scripted conversations with expectations.

A suite file is YAML:

    scenarios:
      - name: one-time-action
        devices: default            # or a list of device records
        steps:
          - say: turn on the kitchen light
            expect_reply: Okay, the kitchen light is now on.
          - advance: 5m
          - inject: {device: motion-sensor, on: true}
          - expect_state: {device: kitchen-light, on: true}
          - expect_log: {effects: [rule_created, action_performed]}

Each scenario runs against a fresh runtime under the virtual clock, so
suites are deterministic. The report carries one pass/fail line per
scenario and the process exit status reflects the overall result.
"""

from __future__ import annotations

import time as wall
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import List, Optional

import yaml

from ..model import ActionKind, DeviceDescriptor, DeviceKind, OnOff, Scalar
from .repl import parse_duration
from .runtime import DEFAULT_REGISTRY, Runtime, RuntimeConfig


class SuiteError(Exception):
    """Suite file problems: unreadable YAML, bad fixtures, bad steps."""


@dataclass
class Scenario:
    name: str
    steps: List[dict]
    registry: List[DeviceDescriptor]
    start_time: datetime
    session_id: str = "scenario"


@dataclass
class ScenarioResult:
    name: str
    failures: List[str] = field(default_factory=list)
    duration_seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass
class SuiteReport:
    results: List[ScenarioResult]

    @property
    def ok(self) -> bool:
        return all(result.ok for result in self.results)

    def format(self) -> str:
        lines = []
        for result in self.results:
            status = "PASS" if result.ok else "FAIL"
            lines.append(f"{status}  {result.name}  ({result.duration_seconds:.3f}s)")
            for failure in result.failures:
                lines.append(f"      {failure}")
        passed = sum(1 for r in self.results if r.ok)
        lines.append(f"{passed}/{len(self.results)} scenarios passed")
        return "\n".join(lines)


def _parse_device(record: dict, index: int) -> DeviceDescriptor:
    try:
        return DeviceDescriptor(
            id=record["id"],
            name=record["name"],
            kind=DeviceKind(record.get("kind", "toggleable")),
            supported_actions=frozenset(ActionKind(a) for a in record.get("actions", [])),
            emits_events=record.get("emits_events", False),
            unit=record.get("unit", ""),
        )
    except Exception as exc:
        raise SuiteError(f"device {index}: {exc}") from exc


def load_suite(path: Path) -> List[Scenario]:
    path = Path(path)
    try:
        document = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise SuiteError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise SuiteError(f"{path}: {exc}") from exc
    if not isinstance(document, dict) or "scenarios" not in document:
        raise SuiteError(f"{path}: expected a top-level 'scenarios' list")
    scenarios = []
    for index, raw in enumerate(document["scenarios"]):
        name = raw.get("name") or f"scenario-{index}"
        devices = raw.get("devices", "default")
        if devices == "default":
            registry = list(DEFAULT_REGISTRY)
        else:
            registry = [_parse_device(r, i) for i, r in enumerate(devices)]
        start_raw = raw.get("start")
        start = (datetime.fromisoformat(start_raw) if start_raw
                 else RuntimeConfig().start_time)
        steps = raw.get("steps", [])
        if not isinstance(steps, list):
            raise SuiteError(f"{name}: steps must be a list")
        scenarios.append(Scenario(name=name, steps=steps, registry=registry,
                                  start_time=start))
    return scenarios


def _value_from(step: dict) -> Optional[object]:
    # YAML 1.1 parses a bare `on:` key as the boolean True; accept both.
    for key in ("on", True):
        if key in step:
            return OnOff(bool(step[key]))
    if "value" in step:
        return Scalar(float(step["value"]), step.get("unit", ""))
    return None


def run_scenario(scenario: Scenario) -> ScenarioResult:
    result = ScenarioResult(name=scenario.name)
    started = wall.perf_counter()
    runtime = Runtime(RuntimeConfig(registry=scenario.registry, clock_mode="virtual",
                                    start_time=scenario.start_time))
    try:
        for index, step in enumerate(scenario.steps, start=1):
            _run_step(runtime, scenario, step, index, result)
    finally:
        runtime.close()
    result.duration_seconds = wall.perf_counter() - started
    return result


def _run_step(runtime: Runtime, scenario: Scenario, step: dict, index: int,
              result: ScenarioResult) -> None:
    def fail(message: str) -> None:
        result.failures.append(f"step {index}: {message}")

    if "say" in step:
        payload = runtime.chat(scenario.session_id, str(step["say"]))
        expected = step.get("expect_reply")
        if expected is not None and payload["reply"] != expected:
            fail(f"reply mismatch\n        expected: {expected!r}\n"
                 f"        actual:   {payload['reply']!r}")
    elif "advance" in step:
        seconds = parse_duration(str(step["advance"]))
        if seconds is None:
            raise SuiteError(f"{scenario.name} step {index}: bad duration {step['advance']!r}")
        runtime.advance(seconds)
    elif "inject" in step:
        spec = step["inject"]
        value = _value_from(spec)
        if value is None or "device" not in spec:
            raise SuiteError(f"{scenario.name} step {index}: inject needs device and on/value")
        runtime.inject_state(spec["device"], value)
    elif "expect_state" in step:
        spec = step["expect_state"]
        expected = _value_from(spec)
        state = runtime.engine.device_state(spec["device"])
        if state.value != expected:
            fail(f"state of {spec['device']}: expected {expected}, got {state.value}")
    elif "expect_log" in step:
        spec = step["expect_log"]
        effects = [e.effect.kind.value for e in runtime.log]
        if "effects" in spec and effects != list(spec["effects"]):
            fail(f"log shape: expected {list(spec['effects'])}, got {effects}")
        if "count" in spec and len(effects) != int(spec["count"]):
            fail(f"log length: expected {spec['count']}, got {len(effects)}")
    else:
        raise SuiteError(f"{scenario.name} step {index}: unknown step {sorted(step)}")


def run_suite(path: Path) -> SuiteReport:
    return SuiteReport(results=[run_scenario(s) for s in load_suite(path)])
