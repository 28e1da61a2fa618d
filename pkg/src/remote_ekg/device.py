"""MCU emulator: 250 Hz acquisition ticks into a two-slot buffer, drained
by an encoder loop onto a byte stream.

The producer side (tick) models the sampling interrupt: if the current
slot is still full it emits the literal ``fail`` line and drops the
values.  The consumer side (drain) empties slots in FIFO order and stamps
each sample with the emulated wall clock at encode time.
"""

from __future__ import annotations

import argparse
import enum
import socket
import sys
import time
from dataclasses import dataclass

from .codec import OVERRUN_LINE, encode_serial
from .signal_gen import generate_values, load_spec_file
from .types import (MS_PER_DAY, N_CHANNELS, SAMPLE_PERIOD_MS, SAMPLE_RATE_HZ,
                    Sample, SignalSpec, Timestamp)

UART_BAUD = 115_200
# 8 data bits + 1 stop bit per byte on the wire
UART_BITS_PER_BYTE = 9


class TickOutcome(enum.Enum):
    STORED = "stored"
    OVERRUN = "overrun"


class SinkFailure(RuntimeError):
    pass


class DoubleBuffer:
    """Two-slot buffer safe for exactly one producer and one consumer.

    A slot is written only while its full flag is false and read only
    while it is true; the reader alone clears flags.
    """

    def __init__(self):
        self.slots: list[tuple[int, ...] | None] = [None, None]
        self.full = [False, False]
        self.write_index = 0
        self._read_index = 0

    def tick(self, values) -> TickOutcome:
        b = self.write_index
        if self.full[b]:
            return TickOutcome.OVERRUN
        self.slots[b] = tuple(values)
        self.full[b] = True
        self.write_index = b ^ 1
        return TickOutcome.STORED

    def drain(self) -> tuple[int, ...] | None:
        r = self._read_index
        if not self.full[r]:
            return None
        values = self.slots[r]
        self.full[r] = False
        self._read_index = r ^ 1
        return values


def day_ms_now() -> int:
    """Milliseconds since midnight on the shared host clock."""
    return int(time.time() * 1000) % MS_PER_DAY


class VirtualClock:
    """Test-controlled clock; sleep_until advances time instantly."""

    def __init__(self, start_day_ms: int = 0):
        self._elapsed = 0.0
        self._start_day_ms = start_day_ms

    def elapsed(self) -> float:
        return self._elapsed

    def sleep_until(self, t_s: float):
        if t_s > self._elapsed:
            self._elapsed = t_s

    def day_ms(self) -> int:
        return (self._start_day_ms + int(self._elapsed * 1000)) % MS_PER_DAY


class WallClock:
    def __init__(self):
        self._t0 = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self._t0

    def sleep_until(self, t_s: float):
        delay = t_s - self.elapsed()
        if delay > 0:
            time.sleep(delay)

    def day_ms(self) -> int:
        return day_ms_now()


class TcpSink:
    """Byte sink over a local TCP socket, standing in for the UART.

    With pacing enabled, writes are throttled to the effective UART
    payload rate (115200 baud / 9 bits per byte).
    """

    def __init__(self, host: str, port: int, baud_limit: bool = False):
        self._sock = socket.create_connection((host, port))
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._baud_limit = baud_limit
        self._byte_budget_t = time.monotonic()

    def write(self, data: bytes):
        try:
            self._sock.sendall(data)
        except OSError as e:
            raise SinkFailure(str(e)) from e
        if self._baud_limit:
            self._byte_budget_t += len(data) * UART_BITS_PER_BYTE / UART_BAUD
            delay = self._byte_budget_t - time.monotonic()
            if delay > 0:
                time.sleep(delay)

    def close(self):
        self._sock.close()


class SocketSink:
    """Byte sink over an already-connected socket object."""

    def __init__(self, sock: socket.socket):
        self._sock = sock

    def write(self, data: bytes):
        try:
            self._sock.sendall(data)
        except OSError as e:
            raise SinkFailure(str(e)) from e

    def close(self):
        self._sock.close()


class ListenSink:
    """Listens on a TCP port and streams to the first client that connects."""

    def __init__(self, port: int, host: str = "127.0.0.1"):
        self._listener = socket.create_server((host, port))
        conn, _ = self._listener.accept()
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sink = SocketSink(conn)

    def write(self, data: bytes):
        self._sink.write(data)

    def close(self):
        self._sink.close()
        self._listener.close()


@dataclass
class EmulatorReport:
    ticks: int = 0
    lines_emitted: int = 0
    overruns: int = 0
    bytes_emitted: int = 0


def run_emulator(spec: SignalSpec, sink, duration_s: float, *,
                 clock=None, stall=None, stop_event=None) -> EmulatorReport:
    """Drive the tick/drain loop for duration_s seconds of emulated time.

    stall: optional (at_s, for_ms) window during which the consumer does
    not drain, provoking overruns.  clock defaults to wall time.
    """
    if clock is None:
        clock = WallClock()
    n_ticks = int(round(duration_s * SAMPLE_RATE_HZ))
    values, _ = generate_values(spec, n_ticks)
    baseline = min(max(spec.baseline_counts, 0), 1023)
    rest = (baseline,) * (N_CHANNELS - 1)

    buf = DoubleBuffer()
    report = EmulatorReport()

    def write(data: bytes):
        try:
            sink.write(data)
        except SinkFailure:
            raise
        except OSError as e:
            raise SinkFailure(str(e)) from e
        report.bytes_emitted += len(data)

    def in_stall(t_s: float) -> bool:
        if stall is None:
            return False
        at_s, for_ms = stall
        return at_s <= t_s < at_s + for_ms / 1000.0

    for k in range(n_ticks):
        if stop_event is not None and stop_event.is_set():
            break
        clock.sleep_until(k * SAMPLE_PERIOD_MS / 1000.0)
        report.ticks += 1
        if buf.tick((int(values[k]),) + rest) is TickOutcome.OVERRUN:
            report.overruns += 1
            write(OVERRUN_LINE)
            continue
        while not in_stall(clock.elapsed()):
            drained = buf.drain()
            if drained is None:
                break
            sample = Sample(Timestamp.from_ms(clock.day_ms()), drained)
            write(encode_serial(sample))
            report.lines_emitted += 1
    # flush whatever the stall left behind
    while (drained := buf.drain()) is not None:
        sample = Sample(Timestamp.from_ms(clock.day_ms()), drained)
        write(encode_serial(sample))
        report.lines_emitted += 1
    return report


def _parse_stall(text: str) -> tuple[float, float]:
    # format: <ms>@<s>
    ms, _, at = text.partition("@")
    return float(at), float(ms)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="devicesim", description="Emulated 250 Hz EKG device")
    parser.add_argument("--spec", help="signal spec JSON file")
    parser.add_argument("--sink", default="stdout",
                        help="tcp:<host:port>, tcp-listen:<port>, or stdout")
    parser.add_argument("--duration", type=float, default=10.0,
                        help="run length in seconds")
    parser.add_argument("--baud-limit", action="store_true",
                        help="pace TCP writes at the UART byte rate")
    parser.add_argument("--stall", type=_parse_stall, default=None,
                        metavar="<ms>@<s>",
                        help="stall the consumer for <ms> starting at <s>")
    args = parser.parse_args(argv)

    spec = load_spec_file(args.spec) if args.spec else SignalSpec()
    if args.sink == "stdout":
        sink = sys.stdout.buffer
        close = lambda: None
    elif args.sink.startswith("tcp-listen:"):
        sink = ListenSink(int(args.sink.split(":", 1)[1]))
        close = sink.close
    elif args.sink.startswith("tcp:"):
        host, _, port = args.sink[4:].rpartition(":")
        sink = TcpSink(host, int(port), baud_limit=args.baud_limit)
        close = sink.close
    else:
        parser.error(f"unknown sink {args.sink!r}")

    try:
        report = run_emulator(spec, sink, args.duration, stall=args.stall)
    finally:
        close()
    print(f"ticks={report.ticks} lines={report.lines_emitted} "
          f"overruns={report.overruns} bytes={report.bytes_emitted}",
          file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
