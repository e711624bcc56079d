"""Session service: map document, per-session tick loops, frame streams.

One process serves one map. Each session owns a simulation stepped at
its scenario rate on the server clock; frames buffer from session start
so a late-attaching stream still sees the full sequence. A stream is
bidirectional: frames flow out, control messages flow in (interactive
sessions only; replay sessions flag them as ignored).
"""

from __future__ import annotations

import asyncio
import json
import uuid
from pathlib import Path as FsPath
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles

from ..hmi import frame_to_json
from ..mapdoc import map_document
from ..mapgraph import LdmGraph
from ..osm import AugmentationConfig, build_static_map, parse_osm
from ..sim import ScenarioError, Simulation, parse_scenario
from .models import (
    SessionCreateRequest,
    SessionCreateResponse,
    SessionDeleteResponse,
)

# interactive sessions without a stop request end after this many ticks
MAX_INTERACTIVE_TICKS = 36_000
# frames kept for a session nobody is reading yet
BUFFER_LIMIT = 8_192


class Session:
    def __init__(self, session_id: str, sim: Simulation):
        self.id = session_id
        self.sim = sim
        self.frames: list[str] = []
        self.dropped = 0  # frames evicted from the front of the buffer
        self.pending_control: Optional[float] = None
        self.finished = False
        self.stopped = False
        self.client_attached = False
        self.wakeup = asyncio.Event()
        self.task: Optional[asyncio.Task] = None

    def append(self, frame_json: str) -> None:
        self.frames.append(frame_json)
        if len(self.frames) > BUFFER_LIMIT:
            self.frames.pop(0)
            self.dropped += 1
        self.wakeup.set()

    async def run(self) -> None:
        loop = asyncio.get_running_loop()
        dt = self.sim.scenario.dt
        deadline = loop.time()
        replay = self.sim.scenario.ego.mode == "replay"
        total = self.sim.replay_ticks() if replay else MAX_INTERACTIVE_TICKS
        try:
            while not self.stopped and self.sim.tick_index < total:
                control = self.pending_control
                self.pending_control = None
                result = self.sim.step(control)
                self.append(frame_to_json(result.frame))
                deadline += dt
                delay = deadline - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    deadline = loop.time()  # overloaded: skip the backlog
        finally:
            self.finished = True
            self.wakeup.set()


def build_graph(osm_path: str | FsPath, aug_path: Optional[str | FsPath] = None) -> LdmGraph:
    extract = parse_osm(FsPath(osm_path).read_text())
    aug = AugmentationConfig.from_file(aug_path) if aug_path else AugmentationConfig()
    return build_static_map(extract, aug)


def create_app(graph: LdmGraph, ui_dir: Optional[str | FsPath] = None) -> FastAPI:
    app = FastAPI(title="risknav", version="0.1.0")
    app.state.graph = graph
    app.state.map_doc = map_document(graph)
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions

    @app.get("/map")
    def get_map() -> dict:
        return app.state.map_doc

    @app.post("/session", response_model=SessionCreateResponse, status_code=201)
    async def create_session(body: SessionCreateRequest) -> SessionCreateResponse:
        try:
            scenario = parse_scenario(body.scenario, origin=graph.origin)
            sim = Simulation(graph.fork(), scenario, slim=body.slim)
        except ScenarioError as e:
            raise HTTPException(status_code=422, detail=str(e)) from e
        session = Session(uuid.uuid4().hex, sim)
        sessions[session.id] = session
        session.task = asyncio.create_task(session.run())
        return SessionCreateResponse(
            session_id=session.id,
            name=scenario.name,
            mode=scenario.ego.mode,
            tick_hz=scenario.tick_hz,
        )

    @app.delete("/session/{session_id}", response_model=SessionDeleteResponse)
    async def delete_session(session_id: str) -> SessionDeleteResponse:
        session = sessions.pop(session_id, None)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        session.stopped = True
        session.wakeup.set()
        if session.task is not None:
            session.task.cancel()
        return SessionDeleteResponse(session_id=session_id, stopped=True)

    async def _read_controls(ws: WebSocket, session: Session) -> None:
        while True:
            message = await ws.receive_text()
            try:
                accel = float(json.loads(message)["accel"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                continue  # malformed control: drop it, keep streaming
            # replay sessions still record it; the sim flags it as ignored
            session.pending_control = accel

    @app.websocket("/session/{session_id}/stream")
    async def stream(ws: WebSocket, session_id: str) -> None:
        session = sessions.get(session_id)
        if session is None:
            await ws.close(code=4404, reason="unknown session")
            return
        if session.client_attached:
            await ws.close(code=4409, reason="stream already attached")
            return
        session.client_attached = True
        await ws.accept()
        reader = asyncio.create_task(_read_controls(ws, session))
        sent = 0  # absolute count of frames delivered
        try:
            while True:
                if sent < session.dropped:
                    sent = session.dropped  # evicted before anyone read them
                while sent - session.dropped < len(session.frames):
                    await ws.send_text(session.frames[sent - session.dropped])
                    sent += 1
                if session.finished or session.stopped:
                    break
                session.wakeup.clear()
                if sent - session.dropped < len(session.frames) or session.finished or session.stopped:
                    continue
                await session.wakeup.wait()
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            reader.cancel()
            session.client_attached = False
        try:
            await ws.close()
        except RuntimeError:
            pass

    if ui_dir is not None and FsPath(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
