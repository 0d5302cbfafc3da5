"""HTTP and WebSocket wire API.

POST /v1/chat                {session_id?, utterance} -> reply envelope
GET  /v1/devices             registry + live states + clock
GET  /v1/rules               active commands, rendered
GET  /v1/log?since=SEQ       log entries after SEQ
WS   /v1/stream              events: reply | state_change | log_append | clock
POST /v1/sim/clock           {advance_seconds}   (virtual clock only)
POST /v1/sim/device/{id}/state   {on} or {value, unit?}   (sensor injection)

Chat turns never block on stream consumers: each connection has a
bounded queue and a slow consumer loses backlog, never delays the
engine.
"""

from __future__ import annotations

import asyncio
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..model import OnOff, Scalar
from .runtime import Runtime

STREAM_QUEUE_LIMIT = 256


class ChatRequest(BaseModel):
    utterance: str
    session_id: str = "default"


class AdvanceRequest(BaseModel):
    advance_seconds: float = Field(gt=0)


class InjectRequest(BaseModel):
    on: Optional[bool] = None
    value: Optional[float] = None
    unit: str = ""


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


class StreamHub:
    """Bridges engine-thread events into per-connection asyncio queues."""

    def __init__(self):
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._queues: set = set()
        self._lock = threading.Lock()

    def attach_loop(self, loop: asyncio.AbstractEventLoop) -> None:
        self._loop = loop

    def register(self) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue(maxsize=STREAM_QUEUE_LIMIT)
        with self._lock:
            self._queues.add(queue)
        return queue

    def unregister(self, queue: asyncio.Queue) -> None:
        with self._lock:
            self._queues.discard(queue)

    def publish(self, event: dict) -> None:
        loop = self._loop
        if loop is None or loop.is_closed():
            return
        loop.call_soon_threadsafe(self._fan_out, event)

    def _fan_out(self, event: dict) -> None:
        with self._lock:
            queues = list(self._queues)
        for queue in queues:
            while queue.full():  # slow consumer: drop backlog, keep fresh
                try:
                    queue.get_nowait()
                except asyncio.QueueEmpty:
                    break
            queue.put_nowait(event)


def create_app(runtime: Runtime, ui_dir: Optional[Path] = None) -> FastAPI:
    from contextlib import asynccontextmanager

    hub = StreamHub()

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        hub.attach_loop(asyncio.get_running_loop())
        yield
        runtime.close()

    app = FastAPI(title="smartspace", version="0.1.0", lifespan=lifespan)
    runtime.add_listener(hub.publish)

    @app.post("/v1/chat")
    def chat(request: ChatRequest):
        if not request.utterance.strip():
            return _error(422, "empty_utterance", "utterance must be non-empty")
        return runtime.chat(request.session_id, request.utterance)

    @app.get("/v1/devices")
    def devices():
        return runtime.devices_payload()

    @app.get("/v1/rules")
    def rules():
        return runtime.rules_payload()

    @app.get("/v1/log")
    def log(since: int = 0):
        return runtime.log_payload(since)

    @app.post("/v1/sim/clock")
    def sim_clock(request: AdvanceRequest):
        if not runtime.virtual:
            return _error(409, "wall_clock", "clock advance requires --clock=virtual")
        return runtime.advance(request.advance_seconds)

    @app.post("/v1/sim/device/{device_id}/state")
    def sim_device(device_id: str, request: InjectRequest):
        if request.on is None and request.value is None:
            return _error(422, "missing_value", "provide either 'on' or 'value'")
        value = OnOff(request.on) if request.on is not None \
            else Scalar(float(request.value), request.unit)
        try:
            return runtime.inject_state(device_id, value)
        except KeyError:
            return _error(404, "unknown_device", f"no device {device_id!r}")

    @app.websocket("/v1/stream")
    async def stream(websocket: WebSocket):
        await websocket.accept()
        queue = hub.register()
        try:
            await websocket.send_json({"type": "clock", "data": runtime.clock_payload()})
            while True:
                event = await queue.get()
                await websocket.send_json(event)
        except WebSocketDisconnect:
            pass
        finally:
            hub.unregister(queue)

    if ui_dir is not None and ui_dir.exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
