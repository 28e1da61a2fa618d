"""Acceptance suite: one test per criterion, each printing a pass/fail
line.  Run with ``pytest tests/test_acceptance.py -v -s``.  The networked
criteria (bandwidth, isolation, latency) run in real time; the whole
module takes roughly three minutes.
"""

import json
import random
import threading
import time

import numpy as np
import pytest

from remote_ekg.codec import (MAX_LINE_BYTES, OverrunMarker, decode_serial,
                              encode_serial)
from remote_ekg.device import (UART_BAUD, UART_BITS_PER_BYTE, VirtualClock,
                               run_emulator)
from remote_ekg.dsp import MovingAverage5
from remote_ekg.dsp.batch import process_capture
from remote_ekg.inproc_ws import InprocAsgiHost, WsClosed, WsDenied
from remote_ekg.latency import _start_local_relay, run_latency_bench
from remote_ekg.relay import CLOSE_PATIENT_GONE, create_app
from remote_ekg.signal_gen import generate_values
from remote_ekg.types import ADC_MAX, SAMPLE_RATE_HZ, Sample, SignalSpec, Timestamp


def report(name, ok, detail=""):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


class DevNullSink:
    def write(self, data):
        pass


def test_codec_bound():
    rng = random.Random(12345)
    t0 = time.perf_counter()
    for _ in range(100_000):
        s = Sample(
            Timestamp(rng.randrange(24), rng.randrange(60), rng.randrange(60),
                      rng.randrange(1000)),
            tuple(rng.randrange(ADC_MAX + 1) for _ in range(6)))
        line = encode_serial(s)
        assert len(line) <= MAX_LINE_BYTES
        assert decode_serial(line) == s
    all_max = Sample(Timestamp(23, 59, 59, 999), (ADC_MAX,) * 6)
    assert len(encode_serial(all_max)) == MAX_LINE_BYTES
    elapsed = time.perf_counter() - t0
    report("codec bound: 1e5 round trips, length <= 44, all-max == 44",
           elapsed < 5.0, f"{elapsed:.2f}s")


def test_bandwidth_budget():
    counter = type("Counter", (), {"n": 0, "write": lambda self, d: None})()

    class CountSink:
        n = 0

        def write(self, data):
            self.n += len(data)

    sink = CountSink()
    t0 = time.perf_counter()
    rep = run_emulator(SignalSpec(), sink, 10.0)
    elapsed = time.perf_counter() - t0
    lines_per_s = rep.lines_emitted / elapsed
    ok = (abs(lines_per_s - SAMPLE_RATE_HZ) <= 1
          and rep.overruns == 0
          and sink.n <= 11_000 * 10
          and 11_000 * UART_BITS_PER_BYTE == 99_000 <= UART_BAUD)
    report("bandwidth budget: 250±1 lines/s, <=11000 B/s, 99000 <= 115200 baud",
           ok, f"{lines_per_s:.2f} lines/s, {sink.n / elapsed:.0f} B/s")


def test_overrun_semantics():
    collected = []

    class ListSink:
        def write(self, data):
            collected.append(data)

    t0 = time.perf_counter()
    rep = run_emulator(SignalSpec(), ListSink(), 2.0, clock=VirtualClock(),
                       stall=(0.5, 100))
    fail_lines = sum(
        1 for chunk in collected
        if isinstance(decode_serial(chunk), OverrunMarker))
    elapsed = time.perf_counter() - t0
    ok = (rep.overruns >= 1 and fail_lines == rep.overruns
          and rep.lines_emitted + rep.overruns == rep.ticks
          and elapsed < 5.0)
    report("overrun semantics: stalled consumer emits fail lines, "
           "lines + overruns == ticks", ok,
           f"{rep.overruns} overruns in {rep.ticks} ticks")


def test_filter_null():
    t0 = time.perf_counter()
    worst = 0.0
    for phase in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        for amp in (1.0, 30.0, 511.0):
            k = np.arange(250)
            x = 512.0 + amp * np.sin(2 * np.pi * 50 * k / SAMPLE_RATE_HZ + phase)
            ma = MovingAverage5()
            outs = [y for y in (ma.push(v) for v in x) if y is not None]
            worst = max(worst, max(abs(y - 512.0) for y in outs) / amp)
    elapsed = time.perf_counter() - t0
    report("filter null: 50 Hz residual <= 1e-9 x amplitude over 8 phases x 3 amps",
           worst <= 1e-9 and elapsed < 1.0,
           f"worst relative residual {worst:.2e}")


def test_hr_accuracy():
    t0 = time.perf_counter()
    failures = []
    for bpm in (40, 60, 100, 150, 180):
        spec = SignalSpec(heart_rate_bpm=bpm, powerline_hz=50,
                          powerline_amplitude_counts=30, seed=bpm)
        n = 60 * SAMPLE_RATE_HZ
        values, truth = generate_values(spec, n)
        t_ms = np.arange(n, dtype=np.int64) * 4
        t_out, f, is_peak, hr = process_capture(t_ms, values)
        det = np.asarray(t_out)[is_peak] // 4
        if len(det) != len(truth):
            failures.append(f"{bpm} bpm: {len(det)} peaks vs {len(truth)} truth")
            continue
        if abs(hr[-1] - bpm) > 2.0:
            failures.append(f"{bpm} bpm: reported {hr[-1]:.2f}")
    elapsed = time.perf_counter() - t0
    report("HR accuracy: ±2 bpm and exact peak count at "
           "{40,60,100,150,180} bpm with 50 Hz noise",
           not failures and elapsed < 30.0,
           "; ".join(failures) or f"{elapsed:.1f}s")


def test_pairing_state_machine():
    t0 = time.perf_counter()
    app = create_app()
    host = InprocAsgiHost(app)
    try:
        # doctor-first negative reply
        with pytest.raises(WsDenied) as e:
            host.connect("/out/abc")
        assert e.value.status == 404

        # unpaired frames are dropped and counted
        patient = host.connect("/in/abc")
        for i in range(100):
            patient.send('{"t":%d,"v":1}' % (i * 4))
        deadline = time.monotonic() + 5
        while app.state.registry.sessions["abc"].frames_in < 100:
            assert time.monotonic() < deadline
            time.sleep(0.01)
        assert app.state.registry.sessions["abc"].frames_dropped_unpaired == 100

        # one-doctor exclusivity
        doctor = host.connect("/out/abc")
        with pytest.raises(WsDenied) as e:
            host.connect("/out/abc")
        assert e.value.status == 409

        # the late doctor saw none of the unpaired frames
        patient.send('{"t":999,"v":2}')
        assert doctor.recv(timeout=5) == '{"t":999,"v":2}'

        # doctor re-attach after drop
        doctor.close()
        deadline = time.monotonic() + 5
        while app.state.registry.sessions["abc"].doctor_ws is not None:
            assert time.monotonic() < deadline
            time.sleep(0.01)
        doctor2 = host.connect("/out/abc")
        patient.send('{"t":1003,"v":3}')
        assert doctor2.recv(timeout=5) == '{"t":1003,"v":3}'

        # patient drop closes doctor and frees the id
        patient.close()
        with pytest.raises(WsClosed) as e:
            doctor2.recv(timeout=5)
        assert e.value.code == CLOSE_PATIENT_GONE
        deadline = time.monotonic() + 5
        while "abc" in app.state.registry.sessions:
            assert time.monotonic() < deadline
            time.sleep(0.01)
        host.connect("/in/abc").close()
    finally:
        host.shutdown()
    elapsed = time.perf_counter() - t0
    report("pairing state machine: doctor-first denial, unpaired drop, "
           "exclusivity, re-attach, patient-gone close",
           elapsed < 10.0, f"{elapsed:.1f}s")


def test_isolation_10_sessions():
    from websockets.sync.client import connect as ws_connect

    n_sessions, duration_s = 10, 30.0
    frames_per_session = int(duration_s * SAMPLE_RATE_HZ)
    server, rhost, rport = _start_local_relay()
    base = f"ws://{rhost}:{rport}"
    received = {i: [] for i in range(n_sessions)}
    sent = {i: 0 for i in range(n_sessions)}
    errors = []

    def patient(i):
        try:
            ws = ws_connect(f"{base}/in/s{i}")
            t0 = time.monotonic()
            for k in range(frames_per_session):
                delay = t0 + k / SAMPLE_RATE_HZ - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                ws.send('{"t":%d,"v":%d}' % (k * 4, i))
                sent[i] += 1
            ws.close()
        except Exception as e:
            errors.append(f"patient {i}: {e!r}")

    def doctor(i):
        try:
            ws = ws_connect(f"{base}/out/s{i}")
            while True:
                try:
                    received[i].append(ws.recv(timeout=40))
                except Exception:
                    return
        except Exception as e:
            errors.append(f"doctor {i}: {e!r}")

    threads = []
    for i in range(n_sessions):
        threads.append(threading.Thread(target=patient, args=(i,), daemon=True))
    for t in threads:
        t.start()
    time.sleep(0.3)  # patients first, so doctors can pair
    dthreads = [threading.Thread(target=doctor, args=(i,), daemon=True)
                for i in range(n_sessions)]
    for t in dthreads:
        t.start()
    for t in threads + dthreads:
        t.join(timeout=duration_s + 60)

    # the close frame can reach the doctor before the server finishes
    # tearing the session down; wait for every final stats record
    registry = server.config.app.state.registry
    deadline = time.monotonic() + 10
    while len(registry.closed_stats) < n_sessions and time.monotonic() < deadline:
        time.sleep(0.05)
    stats = {s["id"]: s for s in registry.closed_stats}
    server.should_exit = True

    cross = sum(
        1 for i in range(n_sessions)
        for frame in received[i] if json.loads(frame)["v"] != i)
    conservation_ok = True
    detail = []
    for i in range(n_sessions):
        s = stats.get(f"s{i}")
        if s is None:
            conservation_ok = False
            detail.append(f"s{i}: no final stats")
            continue
        if s["frames_in"] != s["frames_out"] + s["frames_dropped_unpaired"]:
            conservation_ok = False
            detail.append(f"s{i}: {s}")
        if s["frames_in"] != sent[i]:
            conservation_ok = False
            detail.append(f"s{i}: relay saw {s['frames_in']}, sent {sent[i]}")
    ok = not errors and cross == 0 and conservation_ok
    report("isolation: 10 concurrent sessions x 30 s, zero cross-session "
           "frames, per-session conservation", ok,
           "; ".join(errors + detail) or
           f"{sum(len(v) for v in received.values())} frames delivered")


def test_end_to_end_latency():
    rep_local, _ = run_latency_bench(60.0, "localhost", session_id="bench-local")
    rep_inproc, _ = run_latency_bench(60.0, "inproc", session_id="bench-inproc")
    ok = (rep_local.n > 0 and rep_local.p95_ms < 1000.0
          and rep_inproc.n > 0 and rep_inproc.p99_ms < 100.0)
    report("end-to-end latency: localhost p95 < 1000 ms, in-process p99 < 100 ms",
           ok,
           f"localhost p95 {rep_local.p95_ms} ms (n={rep_local.n}), "
           f"inproc p99 {rep_inproc.p99_ms} ms (n={rep_inproc.n})")
