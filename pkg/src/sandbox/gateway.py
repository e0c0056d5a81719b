"""Network boundary: JSON request/response commands plus a per-session
WebSocket event stream.

All state lives in the session objects; each route translates a request into
one session input event, runs it under the session's lock, and returns the
records it produced. Requests may carry an explicit t_ms so scripted drives
yield logs identical to in-process runs.
"""

from __future__ import annotations

import asyncio
import itertools
import threading
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field

from .scenarios import build_session, load_scenario
from .session import Session, compute_metrics

POSE_STREAM_MAX_HZ = 50.0


class CreateSessionRequest(BaseModel):
    scenario: Optional[str] = None  # bundled scenario name for its config
    config: Optional[dict] = None  # overrides / standalone config


class EventBody(BaseModel):
    t_ms: Optional[int] = None


class UtteranceBody(EventBody):
    text: str


class ConfirmBody(EventBody):
    accept: bool = True


class KeypointBody(EventBody):
    px: float
    py: float


class DecompositionBody(EventBody):
    text: str


class DemoBeginBody(EventBody):
    target: str
    verb: Optional[str] = None
    step_count: int = 30
    dt: float = 0.1


class DemoPoseBody(EventBody):
    p: list[float] = Field(min_length=3, max_length=3)
    ts: float


class GenericEventBody(EventBody):
    kind: str
    payload: dict = Field(default_factory=dict)


class SessionHandle:
    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()
        self._last_pose_ts: Optional[float] = None

    def apply(self, event: dict) -> dict:
        with self.lock:
            records = self.session.handle_event(event)
            response = {
                "session_id": self.session.session_id,
                "mode": self.session.mode.name,
                "records": [r.to_doc() for r in records],
            }
        if records and "rejected" in records[0].payload:
            raise HTTPException(status_code=409,
                                detail=records[0].payload["rejected"])
        return response


def create_app(default_config: Optional[dict] = None) -> FastAPI:
    app = FastAPI(title="sandbox gateway")
    sessions: dict[str, SessionHandle] = {}
    counter = itertools.count(1)

    def handle(session_id: str) -> SessionHandle:
        if session_id not in sessions:
            raise HTTPException(status_code=404, detail="no such session")
        return sessions[session_id]

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        config = dict(default_config or {})
        if req.scenario:
            scenario = load_scenario(req.scenario)
            config.update({k: v for k, v in scenario.items() if k != "events"})
        if req.config:
            config.update(req.config)
        config.setdefault("api", "gift_bag")
        config.setdefault("scene", "gift_bag")
        session_id = f"s{next(counter)}"
        sessions[session_id] = SessionHandle(
            build_session(config, session_id=session_id))
        return {"session_id": session_id, "config": config}

    @app.get("/sessions")
    def list_sessions():
        return {
            "sessions": [
                {"session_id": sid, "mode": h.session.mode.name,
                 "api_version": h.session.api.version,
                 "records": len(h.session.records)}
                for sid, h in sessions.items()
            ]
        }

    def event_from(body: EventBody, kind: str, **fields) -> dict:
        event = {"kind": kind, **fields}
        if body.t_ms is not None:
            event["t_ms"] = body.t_ms
        return event

    @app.post("/sessions/{session_id}/utterance")
    def utterance(session_id: str, body: UtteranceBody):
        return handle(session_id).apply(
            event_from(body, "utterance", text=body.text))

    @app.post("/sessions/{session_id}/confirm")
    def confirm(session_id: str, body: ConfirmBody):
        return handle(session_id).apply(
            event_from(body, "confirm", accept=body.accept))

    @app.post("/sessions/{session_id}/cancel")
    def cancel(session_id: str, body: EventBody):
        return handle(session_id).apply(event_from(body, "cancel"))

    @app.post("/sessions/{session_id}/teach/keypoint")
    def teach_keypoint(session_id: str, body: KeypointBody):
        return handle(session_id).apply(
            event_from(body, "keypoint", px=body.px, py=body.py))

    @app.post("/sessions/{session_id}/teach/decomposition")
    def teach_decomposition(session_id: str, body: DecompositionBody):
        return handle(session_id).apply(
            event_from(body, "decomposition", text=body.text))

    @app.post("/sessions/{session_id}/teach/demo/begin")
    def demo_begin(session_id: str, body: DemoBeginBody):
        fields = {"target": body.target, "step_count": body.step_count,
                  "dt": body.dt}
        if body.verb:
            fields["verb"] = body.verb
        return handle(session_id).apply(event_from(body, "demo_begin", **fields))

    @app.post("/sessions/{session_id}/teach/demo/append")
    def demo_append(session_id: str, body: DemoPoseBody):
        h = handle(session_id)
        if h._last_pose_ts is not None \
                and body.ts - h._last_pose_ts < 1.0 / POSE_STREAM_MAX_HZ - 1e-9:
            raise HTTPException(status_code=429,
                                detail="pose stream above 50 Hz")
        h._last_pose_ts = body.ts
        return h.apply(event_from(body, "demo_pose", p=body.p, ts=body.ts))

    @app.post("/sessions/{session_id}/teach/demo/end")
    def demo_end(session_id: str, body: EventBody):
        h = handle(session_id)
        h._last_pose_ts = None
        return h.apply(event_from(body, "demo_end"))

    @app.post("/sessions/{session_id}/event")
    def generic_event(session_id: str, body: GenericEventBody):
        # scripted-scenario escape hatch for segment / interrupt markers
        if body.kind not in ("segment", "interrupt"):
            raise HTTPException(status_code=422,
                                detail=f"unsupported event kind {body.kind!r}")
        return handle(session_id).apply(
            event_from(body, body.kind, **body.payload))

    @app.get("/sessions/{session_id}/preview")
    def preview(session_id: str):
        h = handle(session_id)
        with h.lock:
            return h.session.preview()

    @app.get("/sessions/{session_id}/metrics")
    def metrics(session_id: str):
        h = handle(session_id)
        with h.lock:
            return {
                "metrics": h.session.metrics.to_doc(),
                "recomputed": compute_metrics(h.session.records).to_doc(),
            }

    @app.get("/sessions/{session_id}/log")
    def log(session_id: str):
        h = handle(session_id)
        with h.lock:
            return {"records": [r.to_doc() for r in h.session.records]}

    @app.websocket("/sessions/{session_id}/events")
    async def events(websocket: WebSocket, session_id: str):
        await websocket.accept()
        if session_id not in sessions:
            await websocket.close(code=4004)
            return
        h = sessions[session_id]
        cursor = 0
        try:
            while True:
                with h.lock:
                    backlog = [r.to_doc() for r in h.session.records[cursor:]]
                for doc in backlog:  # seq order, no gaps
                    await websocket.send_json(doc)
                    cursor += 1
                await asyncio.sleep(0.05)
        except WebSocketDisconnect:
            return

    return app


def serve(host: str = "127.0.0.1", port: int = 8123,
          default_config: Optional[dict] = None) -> None:
    import uvicorn

    uvicorn.run(create_app(default_config), host=host, port=port)
