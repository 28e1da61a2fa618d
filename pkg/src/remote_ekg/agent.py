"""Patient-side user agent: decodes the serial byte stream and forwards
one channel as JSON messages over a WebSocket to the relay's /in/<id>.

A bounded queue (default 5 s of samples) joins the serial reader and the
WebSocket writer; on relay loss the agent reconnects with exponential
backoff and resumes with live data -- samples produced while disconnected
are dropped, not replayed.
"""

from __future__ import annotations

import argparse
import logging
import socket
import sys
import threading
import time
from collections import deque
from dataclasses import dataclass, field

from websockets.exceptions import ConnectionClosed, InvalidStatus
from websockets.sync.client import connect as ws_connect

from .codec import (MalformedLine, OverrunMarker, RangeViolation,
                    encode_message, decode_serial, message_to_json)

log = logging.getLogger("remote_ekg.agent")


class DuplicateSession(RuntimeError):
    """The relay already has a live patient for this session id."""


class SerialSourceLost(RuntimeError):
    pass


@dataclass
class AgentConfig:
    relay_url: str
    session_id: str
    channel_index: int = 0
    backoff_initial_s: float = 0.5
    backoff_multiplier: float = 2.0
    backoff_cap_s: float = 8.0
    queue_max: int = 1250  # 5 s at 250 Hz

    def ws_url(self) -> str:
        base = self.relay_url.rstrip("/")
        if base.startswith("http://"):
            base = "ws://" + base[len("http://"):]
        elif base.startswith("https://"):
            base = "wss://" + base[len("https://"):]
        return f"{base}/in/{self.session_id}"


@dataclass
class AgentStats:
    lines_ok: int = 0
    lines_malformed: int = 0
    overrun_markers: int = 0
    messages_sent: int = 0
    messages_dropped: int = 0
    reconnects: int = 0


class _BoundedQueue:
    """Drop-oldest queue shared by the serial reader and the ws writer."""

    def __init__(self, maxlen: int):
        self._dq: deque[str] = deque()
        self._maxlen = maxlen
        self._cond = threading.Condition()
        self.dropped = 0

    def put(self, item: str):
        with self._cond:
            if len(self._dq) >= self._maxlen:
                self._dq.popleft()
                self.dropped += 1
            self._dq.append(item)
            self._cond.notify()

    def get(self, timeout: float) -> str | None:
        with self._cond:
            if not self._dq:
                self._cond.wait(timeout)
            if not self._dq:
                return None
            return self._dq.popleft()

    def clear(self) -> int:
        with self._cond:
            n = len(self._dq)
            self.dropped += n
            self._dq.clear()
            return n

    def __len__(self):
        with self._cond:
            return len(self._dq)


def run_agent(cfg: AgentConfig, serial_stream, *, stop_event=None,
              connect=ws_connect) -> AgentStats:
    """Pump serial_stream (file-like, binary) into the relay until the
    stream ends or stop_event is set.  Returns the final counters."""
    stop_event = stop_event or threading.Event()
    stats = AgentStats()
    queue = _BoundedQueue(cfg.queue_max)
    source_done = threading.Event()

    def reader():
        try:
            while not stop_event.is_set():
                line = serial_stream.readline()
                if not line:
                    break
                try:
                    decoded = decode_serial(line)
                except (MalformedLine, RangeViolation):
                    stats.lines_malformed += 1
                    continue
                if isinstance(decoded, OverrunMarker):
                    stats.overrun_markers += 1
                    continue
                stats.lines_ok += 1
                msg = encode_message(decoded, cfg.channel_index)
                queue.put(message_to_json(msg))
        finally:
            source_done.set()

    reader_thread = threading.Thread(target=reader, daemon=True, name="serial-reader")

    ws = None
    backoff = cfg.backoff_initial_s
    connects = 0
    try:
        while not stop_event.is_set():
            if ws is None:
                try:
                    ws = connect(cfg.ws_url())
                except InvalidStatus as e:
                    if e.response.status_code == 409:
                        raise DuplicateSession(cfg.session_id) from e
                    ws = None
                except OSError:
                    ws = None
                if ws is None:
                    log.info("relay unreachable, retrying in %.1fs", backoff)
                    if stop_event.wait(backoff):
                        break
                    backoff = min(backoff * cfg.backoff_multiplier, cfg.backoff_cap_s)
                    continue
                backoff = cfg.backoff_initial_s
                connects += 1
                if connects > 1:
                    stats.reconnects += 1
                # no replay of samples produced while disconnected
                queue.clear()
                if not reader_thread.is_alive() and not source_done.is_set():
                    reader_thread.start()
            msg = queue.get(timeout=0.1)
            if msg is None:
                if source_done.is_set() and len(queue) == 0:
                    break
                continue
            try:
                ws.send(msg)
                stats.messages_sent += 1
            except (ConnectionClosed, OSError):
                log.info("relay connection lost")
                queue.dropped += 1  # the in-flight message is discarded
                ws = None
    finally:
        stop_event.set()
        if ws is not None:
            try:
                ws.close()
            except Exception:
                pass
    stats.messages_dropped = queue.dropped
    return stats


def open_serial_source(spec: str):
    """Open a --serial argument: tcp:<host:port> or stdin."""
    if spec == "stdin":
        return sys.stdin.buffer
    if spec.startswith("tcp:"):
        host, _, port = spec[4:].rpartition(":")
        sock = socket.create_connection((host, int(port)))
        return sock.makefile("rb")
    raise ValueError(f"unknown serial source {spec!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="patient-agent",
        description="Forward the device serial stream to the relay")
    parser.add_argument("--serial", required=True, help="tcp:<host:port> or stdin")
    parser.add_argument("--relay", required=True, help="relay base URL")
    parser.add_argument("--id", required=True, help="session id")
    parser.add_argument("--channel", type=int, default=0, choices=range(6))
    parser.add_argument("--log-level", default="info")
    args = parser.parse_args(argv)

    logging.basicConfig(level=args.log_level.upper())
    cfg = AgentConfig(relay_url=args.relay, session_id=args.id,
                      channel_index=args.channel)
    try:
        stream = open_serial_source(args.serial)
    except OSError as e:
        raise SerialSourceLost(args.serial) from e
    stats = run_agent(cfg, stream)
    print(f"lines_ok={stats.lines_ok} malformed={stats.lines_malformed} "
          f"overruns={stats.overrun_markers} sent={stats.messages_sent} "
          f"dropped={stats.messages_dropped} reconnects={stats.reconnects}",
          file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
