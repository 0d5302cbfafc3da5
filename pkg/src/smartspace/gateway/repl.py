"""Interactive line-based front end.

Meta-commands start with a colon; anything else is an utterance for the
assistant. When stdin is not a terminal (scripted transcripts, golden
tests) the input lines are echoed so the transcript reads as a dialogue.
"""

from __future__ import annotations

import re
import sys
from typing import IO, Optional

from .runtime import Runtime

HELP = """Meta-commands:
  :devices            show devices and their current states
  :rules              show active rules
  :log [N]            show the last N log entries (default 10)
  :advance <dur>      advance the virtual clock, e.g. :advance 24h or 1h30m
  :quit               exit"""

_DURATION_PART = re.compile(r"(\d+)([smhd])")
_UNIT_SECONDS = {"s": 1, "m": 60, "h": 3600, "d": 86400}


def parse_duration(text: str) -> Optional[float]:
    text = text.strip().lower()
    parts = _DURATION_PART.findall(text)
    if not parts or _DURATION_PART.sub("", text):
        return None
    return float(sum(int(n) * _UNIT_SECONDS[u] for n, u in parts))


class Repl:
    def __init__(self, runtime: Runtime, input_stream: Optional[IO[str]] = None,
                 output: Optional[IO[str]] = None, session_id: str = "repl"):
        self.runtime = runtime
        self.input = input_stream if input_stream is not None else sys.stdin
        self.output = output if output is not None else sys.stdout
        self.session_id = session_id
        self.echo = not getattr(self.input, "isatty", lambda: False)()

    def println(self, text: str = "") -> None:
        self.output.write(text + "\n")
        self.output.flush()

    def run(self) -> None:
        for raw in self.input:
            line = raw.rstrip("\n").strip()
            if not line:
                continue
            if self.echo:
                self.println(f"you> {line}")
            if line.startswith(":"):
                if not self.handle_meta(line):
                    break
                continue
            payload = self.runtime.chat(self.session_id, line)
            self.println(f"bot> {payload['reply']}")
        self.runtime.close()

    def handle_meta(self, line: str) -> bool:
        fields = line.split()
        command, args = fields[0], fields[1:]
        if command == ":quit":
            return False
        if command == ":devices":
            for item in self.runtime.devices_payload()["devices"]:
                state = item["state"]["value"]
                shown = ("on" if state.get("on") else "off") if "on" in state \
                    else f"{state['value']:g} {state.get('unit', '')}".strip()
                self.println(f"{item['id']:24} {item['name']:24} {shown}")
        elif command == ":rules":
            rules = self.runtime.rules_payload()["rules"]
            if not rules:
                self.println("(no active rules)")
            for index, rule in enumerate(rules, start=1):
                self.println(f"{index}. {rule['text']}")
        elif command == ":log":
            count = int(args[0]) if args else 10
            entries = self.runtime.log_payload()["entries"][-count:]
            for entry in entries:
                actor = entry["actor"]["kind"]
                effect = entry["effect"]["kind"]
                self.println(f"#{entry['seq']:<4} {entry['at']}  {actor:5}  {effect}")
        elif command == ":advance":
            seconds = parse_duration(args[0]) if args else None
            if seconds is None:
                self.println(HELP)
            elif not self.runtime.virtual:
                self.println("(clock advance requires --clock=virtual)")
            else:
                payload = self.runtime.advance(seconds)
                self.println(f"[clock] advanced to {payload['now']}")
        else:
            self.println(HELP)
        return True
