"""End-to-end latency harness.

Runs the full emulator -> agent -> relay -> headless doctor chain and
reports the distribution of production-to-delivery delay.  Production
time is the timestamp the emulator stamps on each sample; delivery time
is read from the same host clock when the doctor consumer receives the
frame, so deltas are meaningful on a single machine.  Cross-host runs
(url topology) carry whatever skew the two clocks have; the report says
so.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
import threading
import time
from dataclasses import dataclass

import numpy as np

from .agent import AgentConfig, run_agent
from .codec import message_from_json
from .device import SocketSink, day_ms_now, run_emulator
from .types import MS_PER_DAY, SignalSpec

DOCTOR_CONNECT_TIMEOUT_S = 10.0


class TopologyUnreachable(RuntimeError):
    pass


@dataclass
class LatencyRecord:
    t_produced_ms: int
    t_delivered_ms: int

    @property
    def delta_ms(self) -> int:
        d = self.t_delivered_ms - self.t_produced_ms
        if d < -MS_PER_DAY // 2:  # midnight wrap
            d += MS_PER_DAY
        return d


@dataclass
class LatencyReport:
    n: int
    min_ms: float | None
    p50_ms: float | None
    p95_ms: float | None
    p99_ms: float | None
    max_ms: float | None
    drop_count: int
    clock_skew_caveat: bool = False

    @classmethod
    def from_records(cls, records: list[LatencyRecord], produced: int,
                     clock_skew_caveat: bool = False) -> "LatencyReport":
        n = len(records)
        drop = max(produced - n, 0)
        if n == 0:
            return cls(0, None, None, None, None, None, drop, clock_skew_caveat)
        deltas = np.array([r.delta_ms for r in records], dtype=np.float64)
        p50, p95, p99 = np.percentile(deltas, [50, 95, 99])
        return cls(n, float(deltas.min()), float(p50), float(p95), float(p99),
                   float(deltas.max()), drop, clock_skew_caveat)

    def as_dict(self) -> dict:
        return {
            "n": self.n, "min_ms": self.min_ms, "p50_ms": self.p50_ms,
            "p95_ms": self.p95_ms, "p99_ms": self.p99_ms, "max_ms": self.max_ms,
            "drop_count": self.drop_count,
            "clock_skew_caveat": self.clock_skew_caveat,
        }


def _doctor_records(frame_iter) -> list[LatencyRecord]:
    records = []
    for frame in frame_iter:
        t_del = day_ms_now()
        msg = message_from_json(frame)
        records.append(LatencyRecord(msg.t_ms, t_del))
    return records


def _run_inproc(duration_s: float, spec: SignalSpec,
                session_id: str = "bench") -> tuple[list[LatencyRecord], int]:
    """Whole chain in one process: serial over a socketpair, relay as an
    in-process ASGI app, no network sockets."""
    from .inproc_ws import InprocAsgiHost, WsClosed
    from .relay import create_app

    host = InprocAsgiHost(create_app())
    records: list[LatencyRecord] = []
    serial_out, serial_in = socket.socketpair()
    patient_ready = threading.Event()

    def agent_thread():
        cfg = AgentConfig(relay_url="ws://inproc", session_id=session_id)

        def connect(url):
            ws = host.connect(f"/in/{session_id}")
            patient_ready.set()
            return ws

        run_agent(cfg, serial_in.makefile("rb"), connect=connect)

    def doctor_thread():
        if not patient_ready.wait(DOCTOR_CONNECT_TIMEOUT_S):
            return
        ws = host.connect(f"/out/{session_id}")

        def frames():
            while True:
                try:
                    yield ws.recv(timeout=10)
                except (WsClosed, TimeoutError):
                    return
        records.extend(_doctor_records(frames()))

    agent = threading.Thread(target=agent_thread, daemon=True)
    doctor = threading.Thread(target=doctor_thread, daemon=True)
    agent.start()
    doctor.start()

    try:
        report = run_emulator(spec, SocketSink(serial_out), duration_s)
        serial_out.close()
        agent.join(timeout=30)
        doctor.join(timeout=30)
    finally:
        host.shutdown()
    return records, report.lines_emitted


def _start_local_relay() -> tuple[object, str, int]:
    import uvicorn

    from .relay import create_app

    sock = socket.create_server(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    config = uvicorn.Config(create_app(), log_level="warning", ws="websockets")
    server = uvicorn.Server(config)
    thread = threading.Thread(
        target=lambda: server.run(sockets=[sock]), daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise TopologyUnreachable("local relay failed to start")
        time.sleep(0.02)
    return server, "127.0.0.1", port


def _run_networked(duration_s: float, spec: SignalSpec, relay_url: str,
                   session_id: str, clock_skew_caveat: bool
                   ) -> tuple[list[LatencyRecord], int]:
    from websockets.exceptions import ConnectionClosed
    from websockets.sync.client import connect as ws_connect

    records: list[LatencyRecord] = []
    serial_out, serial_in = socket.socketpair()

    def agent_thread():
        cfg = AgentConfig(relay_url=relay_url, session_id=session_id)
        run_agent(cfg, serial_in.makefile("rb"))

    def doctor_thread():
        base = relay_url.replace("http://", "ws://").rstrip("/")
        url = f"{base}/out/{session_id}"
        deadline = time.monotonic() + DOCTOR_CONNECT_TIMEOUT_S
        ws = None
        while ws is None:
            try:
                ws = ws_connect(url)
            except Exception:
                if time.monotonic() > deadline:
                    raise TopologyUnreachable(url)
                time.sleep(0.1)

        def frames():
            while True:
                try:
                    yield ws.recv()
                except ConnectionClosed:
                    return
        records.extend(_doctor_records(frames()))
        ws.close()

    agent = threading.Thread(target=agent_thread, daemon=True)
    doctor = threading.Thread(target=doctor_thread, daemon=True)
    agent.start()
    doctor.start()

    report = run_emulator(spec, SocketSink(serial_out), duration_s)
    serial_out.close()
    agent.join(timeout=30)
    doctor.join(timeout=30)
    return records, report.lines_emitted


def run_latency_bench(duration_s: float, topology: str,
                      spec: SignalSpec | None = None,
                      session_id: str = "bench"
                      ) -> tuple[LatencyReport, list[LatencyRecord]]:
    """topology: 'inproc', 'localhost', or 'url:<relay base url>'."""
    spec = spec or SignalSpec()
    if duration_s <= 0:
        return LatencyReport.from_records([], 0), []

    if topology == "inproc":
        records, produced = _run_inproc(duration_s, spec, session_id)
        skew = False
    elif topology == "localhost":
        server, host, port = _start_local_relay()
        try:
            records, produced = _run_networked(
                duration_s, spec, f"ws://{host}:{port}", session_id, False)
        finally:
            server.should_exit = True
        skew = False
    elif topology.startswith("url:"):
        records, produced = _run_networked(
            duration_s, spec, topology[4:], session_id, True)
        skew = True
    else:
        raise TopologyUnreachable(f"unknown topology {topology!r}")

    return LatencyReport.from_records(records, produced, skew), records


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="latency-bench",
        description="Measure production-to-delivery latency of the pipeline")
    parser.add_argument("--duration", type=float, default=60.0)
    parser.add_argument("--topology", default="localhost",
                        help="inproc | localhost | url:<relay base url>")
    parser.add_argument("--out", default=None,
                        help="write per-frame records plus summary to this file")
    args = parser.parse_args(argv)

    report, records = run_latency_bench(args.duration, args.topology)
    if args.out:
        with open(args.out, "w") as f:
            for r in records:
                f.write(f"{r.t_produced_ms} {r.t_delivered_ms} {r.delta_ms}\n")
            f.write(json.dumps(report.as_dict()) + "\n")

    if report.n == 0:
        print("no frames delivered (empty report)")
        return 1
    print(f"{'frames':>10} {'min':>8} {'p50':>8} {'p95':>8} {'p99':>8} "
          f"{'max':>8} {'drops':>8}")
    print(f"{report.n:>10} {report.min_ms:>8.1f} {report.p50_ms:>8.1f} "
          f"{report.p95_ms:>8.1f} {report.p99_ms:>8.1f} {report.max_ms:>8.1f} "
          f"{report.drop_count:>8}")
    if report.clock_skew_caveat:
        print("note: producer and consumer clocks are on different hosts; "
              "deltas include their skew")
    return 0


if __name__ == "__main__":
    sys.exit(main())
