"""Pairing relay: binds one patient WebSocket stream and at most one
doctor WebSocket consumer per session id, forwarding frames verbatim.

Routes: ``/`` presentation page, ``/healthz`` liveness, ``/in/<id>``
patient WebSocket, ``/<id>`` doctor page, ``/out/<id>`` doctor WebSocket.
Sessions are in-memory only; a restart clears them.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

log = logging.getLogger("remote_ekg.relay")

SESSION_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")

# application close codes carried on the WebSocket close frame
CLOSE_DUPLICATE_SESSION = 4409
CLOSE_NO_PATIENT = 4404
CLOSE_DOCTOR_TAKEN = 4403
CLOSE_SERVER_FULL = 4503
CLOSE_BAD_SESSION_ID = 4400
CLOSE_PATIENT_GONE = 4410

_HTTP_STATUS = {
    CLOSE_DUPLICATE_SESSION: 409,
    CLOSE_NO_PATIENT: 404,
    CLOSE_DOCTOR_TAKEN: 409,
    CLOSE_SERVER_FULL: 503,
    CLOSE_BAD_SESSION_ID: 400,
}


class SessionPhase(str, Enum):
    IDLE = "idle"
    PATIENT_CONNECTED = "patient_connected"
    PAIRED = "paired"


@dataclass
class Session:
    id: str
    patient_ws: WebSocket | None = None
    doctor_ws: WebSocket | None = None
    frames_in: int = 0
    frames_out: int = 0
    frames_dropped_unpaired: int = 0

    @property
    def phase(self) -> SessionPhase:
        if self.patient_ws is None:
            return SessionPhase.IDLE
        if self.doctor_ws is None:
            return SessionPhase.PATIENT_CONNECTED
        return SessionPhase.PAIRED

    def stats(self) -> dict:
        return {
            "id": self.id,
            "phase": self.phase.value,
            "frames_in": self.frames_in,
            "frames_out": self.frames_out,
            "frames_dropped_unpaired": self.frames_dropped_unpaired,
        }


@dataclass
class SessionRegistry:
    max_sessions: int = 64
    sessions: dict[str, Session] = field(default_factory=dict)
    closed_stats: list[dict] = field(default_factory=list)

    def live_count(self) -> int:
        return len(self.sessions)

    def remove(self, session: Session):
        self.closed_stats.append(session.stats())
        self.sessions.pop(session.id, None)


INDEX_TEMPLATE = """<!doctype html>
<html><head><title>Remote EKG relay</title></head>
<body>
<h1>Remote EKG relay</h1>
<p>Patient devices stream to <code>/in/&lt;id&gt;</code>; doctors open
<code>/&lt;id&gt;</code> to watch a paired trace.</p>
<p>Live sessions: {count}</p>
</body></html>
"""

# served when no viewer bundle is configured; enough to eyeball a stream
FALLBACK_VIEWER = """<!doctype html>
<html><head><title>EKG {sid}</title></head>
<body>
<h1>EKG session {sid}</h1>
<pre id="status">connecting...</pre>
<pre id="last"></pre>
<script>
const ws = new WebSocket(`ws://${{location.host}}/out/{sid}`);
ws.onopen = () => document.getElementById("status").textContent = "connected";
ws.onmessage = (ev) => document.getElementById("last").textContent = ev.data;
ws.onclose = (ev) =>
  document.getElementById("status").textContent =
    `closed (${{ev.code}}) ${{ev.reason}}`;
</script>
</body></html>
"""


async def _deny(ws: WebSocket, code: int, reason: str):
    """Reject a WebSocket with an HTTP-level 4xx when the server stack
    supports denial responses, otherwise accept-and-close with an
    application close code."""
    extensions = ws.scope.get("extensions") or {}
    if "websocket.http.response" in extensions:
        await ws.send_denial_response(
            PlainTextResponse(reason, status_code=_HTTP_STATUS[code]))
    else:
        await ws.accept()
        await ws.close(code=code, reason=reason)


def _load_viewer_page(viewer_dir: str | None, sid: str) -> str:
    if viewer_dir:
        index = Path(viewer_dir) / "index.html"
        if index.is_file():
            return index.read_text().replace("__SESSION_ID__", sid)
    return FALLBACK_VIEWER.format(sid=sid)


def create_app(max_sessions: int = 64, viewer_dir: str | None = None) -> FastAPI:
    app = FastAPI()
    registry = SessionRegistry(max_sessions=max_sessions)
    app.state.registry = registry

    viewer_dir = viewer_dir or os.environ.get("REMOTE_EKG_VIEWER_DIR")
    if viewer_dir and Path(viewer_dir).is_dir():
        app.mount("/static", StaticFiles(directory=viewer_dir), name="static")

    @app.get("/", response_class=HTMLResponse)
    async def index():
        return INDEX_TEMPLATE.format(count=registry.live_count())

    @app.get("/healthz")
    async def healthz():
        return JSONResponse({"status": "ok", "live_sessions": registry.live_count()})

    @app.websocket("/in/{sid}")
    async def patient_ws(ws: WebSocket, sid: str):
        if not SESSION_ID_RE.match(sid):
            await _deny(ws, CLOSE_BAD_SESSION_ID, "invalid session id")
            return
        session = registry.sessions.get(sid)
        if session is not None and session.patient_ws is not None:
            await _deny(ws, CLOSE_DUPLICATE_SESSION,
                        f"session {sid} already has a live patient")
            return
        if session is None and registry.live_count() >= registry.max_sessions:
            await _deny(ws, CLOSE_SERVER_FULL, "session limit reached")
            return
        await ws.accept()
        if session is None:
            session = Session(id=sid)
            registry.sessions[sid] = session
        session.patient_ws = ws
        log.info("patient connected: %s", sid)
        try:
            while True:
                frame = await ws.receive_text()
                session.frames_in += 1
                doctor = session.doctor_ws
                if doctor is None:
                    session.frames_dropped_unpaired += 1
                    continue
                try:
                    await doctor.send_text(frame)
                    session.frames_out += 1
                except (WebSocketDisconnect, RuntimeError):
                    session.doctor_ws = None
        except WebSocketDisconnect:
            pass
        finally:
            session.patient_ws = None
            doctor = session.doctor_ws
            session.doctor_ws = None
            if doctor is not None:
                try:
                    await doctor.close(code=CLOSE_PATIENT_GONE, reason="patient gone")
                except RuntimeError:
                    pass
            registry.remove(session)
            log.info("patient gone, session %s reclaimed", sid)

    @app.websocket("/out/{sid}")
    async def doctor_ws(ws: WebSocket, sid: str):
        if not SESSION_ID_RE.match(sid):
            await _deny(ws, CLOSE_BAD_SESSION_ID, "invalid session id")
            return
        session = registry.sessions.get(sid)
        if session is None or session.patient_ws is None:
            await _deny(ws, CLOSE_NO_PATIENT, f"no patient for session {sid}")
            return
        if session.doctor_ws is not None:
            await _deny(ws, CLOSE_DOCTOR_TAKEN,
                        f"session {sid} already has a doctor")
            return
        await ws.accept()
        session.doctor_ws = ws
        log.info("doctor paired: %s", sid)
        try:
            while True:
                # doctors only listen; consume (and ignore) anything inbound
                await ws.receive_text()
        except WebSocketDisconnect:
            pass
        finally:
            if session.doctor_ws is ws:
                session.doctor_ws = None
            log.info("doctor detached: %s", sid)

    @app.get("/{sid}", response_class=HTMLResponse)
    async def doctor_page(sid: str):
        if not SESSION_ID_RE.match(sid):
            return HTMLResponse("invalid session id", status_code=400)
        session = registry.sessions.get(sid)
        if session is None or session.patient_ws is None:
            return HTMLResponse(
                f"no patient is streaming on session {sid!r}; "
                "ask the patient to connect first", status_code=404)
        if session.doctor_ws is not None:
            return HTMLResponse(
                f"session {sid!r} is already being watched by a doctor",
                status_code=404)
        return _load_viewer_page(viewer_dir, sid)

    return app


def main(argv=None) -> int:
    import uvicorn

    parser = argparse.ArgumentParser(prog="ekg-relay",
                                     description="EKG pairing relay service")
    parser.add_argument("--listen",
                        default=os.environ.get("REMOTE_EKG_LISTEN", "127.0.0.1:8000"),
                        help="bind address as host:port")
    parser.add_argument("--max-sessions", type=int,
                        default=int(os.environ.get("REMOTE_EKG_MAX_SESSIONS", "64")))
    parser.add_argument("--log-level",
                        default=os.environ.get("REMOTE_EKG_LOG_LEVEL", "info"))
    parser.add_argument("--viewer-dir", default=None,
                        help="directory holding the built viewer bundle")
    args = parser.parse_args(argv)

    host, _, port = args.listen.rpartition(":")
    logging.basicConfig(level=args.log_level.upper())
    app = create_app(max_sessions=args.max_sessions, viewer_dir=args.viewer_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port),
                log_level=args.log_level, ws_ping_interval=20, ws_ping_timeout=40)
    return 0


if __name__ == "__main__":
    sys.exit(main())
