"""Durable storage: device registry file and append-only command log.

Record format, both files: one record per line,

    <type> TAB <json payload> TAB <crc32 of "<type>\\t<json>" as 8 hex digits>

The checksum detects torn writes: a final line that fails to parse or
checksum is treated as an interrupted append and dropped (replay yields a
prefix of the logical log); a bad line anywhere else is real corruption
and refuses to load.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path
from typing import IO, List, Optional, Tuple

from .causality import LogEntry, StorageError
from .model import DeviceDescriptor
from .records import device_from_record, device_to_record, entry_from_record, entry_to_record

DEVICE_RECORD = "device"
ENTRY_RECORD = "entry"

REGISTRY_FILENAME = "devices.jsonl"
LOG_FILENAME = "command.log"


class LoadError(Exception):
    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


def encode_record(record_type: str, payload: dict) -> str:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    head = f"{record_type}\t{body}"
    checksum = zlib.crc32(head.encode("utf-8")) & 0xFFFFFFFF
    return f"{head}\t{checksum:08x}\n"


def decode_record(line: str, line_number: int) -> Tuple[str, dict]:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 3:
        raise LoadError("malformed record (expected type, payload, checksum)", line_number)
    record_type, body, checksum = parts
    expected = zlib.crc32(f"{record_type}\t{body}".encode("utf-8")) & 0xFFFFFFFF
    try:
        stored = int(checksum, 16)
    except ValueError:
        raise LoadError("unreadable checksum", line_number) from None
    if stored != expected:
        raise LoadError("checksum mismatch", line_number)
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise LoadError(f"invalid payload: {exc}", line_number) from None
    return record_type, payload


def _read_records(path: Path, tolerate_torn_tail: bool) -> List[Tuple[str, dict]]:
    records: List[Tuple[str, dict]] = []
    with path.open("r", encoding="utf-8") as handle:
        lines = handle.readlines()
    for index, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(decode_record(line, index))
        except LoadError:
            if tolerate_torn_tail and index == len(lines):
                break  # interrupted final append; keep the prefix
            raise
    return records


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


def load_registry(path: Path) -> List[DeviceDescriptor]:
    descriptors: List[DeviceDescriptor] = []
    seen = set()
    for number, (record_type, payload) in enumerate(_read_records(Path(path), False), start=1):
        if record_type != DEVICE_RECORD:
            raise LoadError(f"unexpected record type {record_type!r}", number)
        try:
            descriptor = device_from_record(payload)
        except Exception as exc:
            raise LoadError(f"invalid device record: {exc}", number) from exc
        if descriptor.id in seen:
            raise LoadError(f"duplicate device id {descriptor.id!r}", number)
        seen.add(descriptor.id)
        descriptors.append(descriptor)
    return descriptors


def save_registry(path: Path, descriptors: List[DeviceDescriptor]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for descriptor in descriptors:
            handle.write(encode_record(DEVICE_RECORD, device_to_record(descriptor)))


# ---------------------------------------------------------------------------
# Command log
# ---------------------------------------------------------------------------


class LogStore:
    """Append-only log file; the CommandLog's write-ahead sink."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._handle: Optional[IO[str]] = None

    def load(self) -> List[LogEntry]:
        if not self.path.exists():
            return []
        entries: List[LogEntry] = []
        for number, (record_type, payload) in enumerate(
                _read_records(self.path, tolerate_torn_tail=True), start=1):
            if record_type != ENTRY_RECORD:
                raise LoadError(f"unexpected record type {record_type!r}", number)
            entries.append(entry_from_record(payload))
        return entries

    def append(self, entry: LogEntry) -> None:
        try:
            if self._handle is None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                self._handle = self.path.open("a", encoding="utf-8")
            self._handle.write(encode_record(ENTRY_RECORD, entry_to_record(entry)))
            self._handle.flush()
        except OSError as exc:
            raise StorageError(f"cannot append to {self.path}: {exc}") from exc

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


class Store:
    """Data directory holding the registry file and the command log."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.registry_path = self.root / REGISTRY_FILENAME
        self.log_path = self.root / LOG_FILENAME
        self.log_store = LogStore(self.log_path)

    def load_registry(self) -> List[DeviceDescriptor]:
        if not self.registry_path.exists():
            return []
        return load_registry(self.registry_path)

    def save_registry(self, descriptors: List[DeviceDescriptor]) -> None:
        save_registry(self.registry_path, descriptors)

    def close(self) -> None:
        self.log_store.close()


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def replay(entries: List[LogEntry], engine) -> List[str]:
    """Rebuild engine state from the log: re-arm rules that were never removed.

    Past one-shot commands are not re-fired. Entries referencing devices
    that are gone from the registry are skipped with a warning.
    """
    from .causality import EffectKind
    from .engine import REPLAYABLE_KINDS, CommandKind, EngineError

    removed = {
        entry.effect.command_id
        for entry in entries
        if entry.effect.kind is EffectKind.RULE_REMOVED
    }
    warnings: List[str] = []
    for entry in entries:
        effect = entry.effect
        if effect.kind is not EffectKind.RULE_CREATED or effect.command_id in removed:
            continue
        payload = effect.command_payload
        if not payload:
            warnings.append(f"entry {entry.seq}: rule_created without command payload, skipped")
            continue
        if CommandKind(payload["kind"]) not in REPLAYABLE_KINDS:
            continue
        try:
            engine.restore_command(payload, creation_entry_seq=entry.seq)
        except EngineError as exc:
            warnings.append(f"entry {entry.seq}: {exc}")
    return warnings
