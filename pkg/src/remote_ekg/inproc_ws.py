"""In-process WebSocket transport for an ASGI app.

Runs the app on a private event loop thread and hands out blocking
connection handles, so a patient and a doctor connection share one loop
and frames forwarded between them are delivered deterministically with
no network involved.  Used by the in-process latency topology and the
relay tests.
"""

from __future__ import annotations

import asyncio
import queue
import threading


class WsClosed(ConnectionError):
    def __init__(self, code: int = 1000, reason: str = ""):
        super().__init__(f"websocket closed ({code}) {reason}")
        self.code = code
        self.reason = reason


class WsDenied(ConnectionError):
    def __init__(self, status: int, body: bytes):
        super().__init__(f"handshake denied with HTTP {status}")
        self.status = status
        self.body = body


class InprocWsConnection:
    def __init__(self, host: "InprocAsgiHost", path: str):
        self._host = host
        self._loop = host.loop
        self._to_app: asyncio.Queue = asyncio.Queue()
        self._from_app: queue.Queue = queue.Queue()
        self._closed = False

        scope = {
            "type": "websocket",
            "asgi": {"version": "3.0", "spec_version": "2.3"},
            "scheme": "ws",
            "path": path,
            "raw_path": path.encode(),
            "query_string": b"",
            "root_path": "",
            "headers": [(b"host", b"inproc")],
            "client": ("inproc", 0),
            "server": ("inproc", 0),
            "subprotocols": [],
            "extensions": {"websocket.http.response": {}},
        }

        async def receive():
            return await self._to_app.get()

        async def send(message):
            self._from_app.put(message)

        async def run():
            try:
                await host.app(scope, receive, send)
            except Exception as e:  # surface app crashes to the client side
                self._from_app.put({"type": "websocket.close", "code": 1011,
                                    "reason": f"app error: {e!r}"})

        self._task = asyncio.run_coroutine_threadsafe(run(), self._loop)
        self._put_to_app({"type": "websocket.connect"})

        first = self._from_app.get(timeout=10)
        if first["type"] == "websocket.http.response.start":
            status = first["status"]
            body = b""
            while True:
                chunk = self._from_app.get(timeout=10)
                body += chunk.get("body", b"")
                if not chunk.get("more_body"):
                    break
            raise WsDenied(status, body)
        if first["type"] == "websocket.close":
            raise WsDenied(403, first.get("reason", "").encode())
        assert first["type"] == "websocket.accept"

    def _put_to_app(self, message):
        asyncio.run_coroutine_threadsafe(
            self._to_app.put(message), self._loop).result(timeout=10)

    def send(self, text: str):
        if self._closed:
            raise WsClosed(1006, "already closed")
        self._put_to_app({"type": "websocket.receive", "text": text})

    def recv(self, timeout: float | None = None) -> str:
        try:
            message = self._from_app.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError("no frame within timeout") from None
        if message["type"] == "websocket.close":
            self._closed = True
            raise WsClosed(message.get("code", 1000), message.get("reason", ""))
        return message["text"]

    def close(self, code: int = 1000):
        if not self._closed:
            self._closed = True
            self._put_to_app({"type": "websocket.disconnect", "code": code})


class InprocAsgiHost:
    """Owns the event loop thread the ASGI app runs on."""

    def __init__(self, app):
        self.app = app
        self.loop = asyncio.new_event_loop()
        self._thread = threading.Thread(
            target=self.loop.run_forever, daemon=True, name="inproc-asgi")
        self._thread.start()

    def connect(self, path: str) -> InprocWsConnection:
        return InprocWsConnection(self, path)

    def shutdown(self):
        async def cancel_all():
            tasks = [t for t in asyncio.all_tasks()
                     if t is not asyncio.current_task()]
            for t in tasks:
                t.cancel()
            await asyncio.gather(*tasks, return_exceptions=True)

        try:
            asyncio.run_coroutine_threadsafe(cancel_all(), self.loop).result(timeout=5)
        except (TimeoutError, RuntimeError):
            pass
        self.loop.call_soon_threadsafe(self.loop.stop)
        self._thread.join(timeout=5)
