import io
import json
import threading
import time
from types import SimpleNamespace

import pytest
from websockets.exceptions import ConnectionClosedError, InvalidStatus

from remote_ekg.agent import AgentConfig, DuplicateSession, run_agent
from remote_ekg.codec import encode_serial
from remote_ekg.device import VirtualClock, run_emulator
from remote_ekg.signal_gen import generate_signal
from remote_ekg.types import SignalSpec


def cfg(**kw):
    kw.setdefault("relay_url", "ws://test")
    kw.setdefault("session_id", "abc")
    kw.setdefault("backoff_initial_s", 0.01)
    kw.setdefault("backoff_cap_s", 0.05)
    return AgentConfig(**kw)


class CaptureWs:
    def __init__(self):
        self.sent = []
        self.closed = False
        self.fail_after = None

    def send(self, text):
        if self.fail_after is not None and len(self.sent) >= self.fail_after:
            raise ConnectionClosedError(None, None)
        self.sent.append(text)

    def close(self):
        self.closed = True


def serial_bytes(n_samples, spec=None, start_ms=0):
    samples, _ = generate_signal(spec or SignalSpec(), n_samples, start_ms=start_ms)
    return b"".join(encode_serial(s) for s in samples), samples


def test_pipeline_identity_order_preserved():
    data, samples = serial_bytes(250)
    ws = CaptureWs()
    stats = run_agent(cfg(), io.BytesIO(data), connect=lambda url: ws)
    assert stats.lines_ok == 250
    assert stats.messages_sent == 250
    assert len(ws.sent) == 250
    for frame, sample in zip(ws.sent, samples):
        obj = json.loads(frame)
        assert obj == {"t": sample.ts.to_ms(), "v": sample.channels[0]}


def test_channel_selection():
    data, samples = serial_bytes(10)
    ws = CaptureWs()
    run_agent(cfg(channel_index=3), io.BytesIO(data), connect=lambda url: ws)
    assert all(json.loads(f)["v"] == s.channels[3]
               for f, s in zip(ws.sent, samples))


def test_fail_lines_skipped_and_counted():
    data, _ = serial_bytes(99)
    data = b"fail\r\n" + data
    ws = CaptureWs()
    stats = run_agent(cfg(), io.BytesIO(data), connect=lambda url: ws)
    assert stats.overrun_markers == 1
    assert stats.lines_ok == 99
    assert len(ws.sent) == 99


def test_malformed_lines_skipped_and_counted():
    data, _ = serial_bytes(50)
    data = b"garbage line here\r\n" + data + b"00:00:00.000 9999 0 0 0 0 0\r\n"
    ws = CaptureWs()
    stats = run_agent(cfg(), io.BytesIO(data), connect=lambda url: ws)
    assert stats.lines_malformed == 2
    assert stats.lines_ok == 50
    assert len(ws.sent) == 50


def test_ws_url_shape():
    assert cfg().ws_url() == "ws://test/in/abc"
    assert cfg(relay_url="http://relay:8000/").ws_url() == "ws://relay:8000/in/abc"


def test_duplicate_session_fatal():
    def connect(url):
        raise InvalidStatus(SimpleNamespace(status_code=409))

    with pytest.raises(DuplicateSession):
        run_agent(cfg(), io.BytesIO(b""), connect=connect)


def test_reconnect_with_backoff_resumes_live():
    # ws dies after 100 sends; next connect succeeds after two refusals
    sockets = []
    refusals = {"n": 0}

    def connect(url):
        if sockets and refusals["n"] < 2:
            refusals["n"] += 1
            raise OSError("refused")
        ws = CaptureWs()
        ws.fail_after = 100 if not sockets else None
        sockets.append(ws)
        return ws

    data, samples = serial_bytes(400)
    stats = run_agent(cfg(), io.BytesIO(data), connect=connect)
    assert stats.reconnects == 1
    assert refusals["n"] == 2
    assert len(sockets) == 2
    # order preserved overall; the failing frame was dropped, not resent
    first, second = sockets[0].sent, sockets[1].sent
    sent_values = [json.loads(f)["t"] for f in first + second]
    assert sent_values == sorted(sent_values)
    assert stats.messages_sent == len(first) + len(second)
    assert stats.messages_sent + stats.messages_dropped == 400


def test_emitted_equals_subsequence_of_decoded():
    # property: every sent frame equals encode_message of some input sample
    data, samples = serial_bytes(100)
    expected = {json.dumps({"t": s.ts.to_ms(), "v": s.channels[0]},
                           separators=(",", ":")) for s in samples}
    ws = CaptureWs()
    run_agent(cfg(), io.BytesIO(data), connect=lambda url: ws)
    assert set(ws.sent) <= expected


def test_stop_event():
    stop = threading.Event()

    class Blocking:
        def readline(self):
            time.sleep(0.01)
            return encode_serial(generate_signal(SignalSpec(), 1)[0][0])

    ws = CaptureWs()
    t = threading.Thread(
        target=run_agent, args=(cfg(), Blocking()),
        kwargs={"stop_event": stop, "connect": lambda url: ws}, daemon=True)
    t.start()
    time.sleep(0.3)
    stop.set()
    t.join(timeout=5)
    assert not t.is_alive()
    assert ws.closed
