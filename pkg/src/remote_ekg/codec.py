"""Serial line codec and relay message codec.

Line format: ``HH:MM:SS.mmm v1 v2 v3 v4 v5 v6\\r\\n`` -- fixed-width
zero-padded timestamp, six space-separated decimal channel values, CR LF
terminator.  Worst case is 12 + 6*5 + 2 = 44 bytes.  The literal line
``fail`` marks a device-side buffer overrun.

Relay messages are one JSON object per sample: ``{"t": <int>, "v": <int>}``.
"""

from __future__ import annotations

import json

from .types import ADC_MAX, MS_PER_DAY, N_CHANNELS, EkgMessage, Sample, Timestamp

MAX_LINE_BYTES = 44
OVERRUN_PAYLOAD = b"fail"
OVERRUN_LINE = OVERRUN_PAYLOAD + b"\r\n"


class CodecError(ValueError):
    pass


class MalformedLine(CodecError):
    """Wrong field count, non-numeric token, or separator violation."""


class RangeViolation(CodecError):
    """A numeric field parsed but falls outside its allowed range."""


class IndexOutOfRange(CodecError):
    """Channel index outside [0, 5]."""


class OverrunMarker:
    """Sentinel returned by decode_serial for the literal ``fail`` line."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "OverrunMarker"


OVERRUN = OverrunMarker()


def encode_serial(s: Sample) -> bytes:
    ts = s.ts
    head = f"{ts.hours:02d}:{ts.minutes:02d}:{ts.seconds:02d}.{ts.millis:03d}"
    values = " ".join(str(v) for v in s.channels)
    line = f"{head} {values}\r\n".encode("ascii")
    assert len(line) <= MAX_LINE_BYTES
    return line


def _parse_int(token: str, what: str) -> int:
    if not token or not token.isdigit():
        raise MalformedLine(f"non-numeric {what}: {token!r}")
    return int(token)


def decode_serial(line: bytes) -> Sample | OverrunMarker:
    """Parse one terminator-delimited serial line.

    Strict on field count and separators; timestamp fields may be
    unpadded.  Raises MalformedLine or RangeViolation on bad input.
    """
    raw = line.rstrip(b"\r\n")
    if raw == OVERRUN_PAYLOAD:
        return OVERRUN
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as e:
        raise MalformedLine(f"non-ASCII line: {raw!r}") from e

    fields = text.split(" ")
    if len(fields) != 1 + N_CHANNELS:
        raise MalformedLine(f"expected {1 + N_CHANNELS} fields, got {len(fields)}: {text!r}")
    if "" in fields:
        raise MalformedLine(f"separator violation (empty field): {text!r}")

    ts_part = fields[0]
    hm, _, rest = ts_part.partition(":")
    mm, _, rest = rest.partition(":")
    ss, dot, ms = rest.partition(".")
    if not dot:
        raise MalformedLine(f"bad timestamp: {ts_part!r}")
    h = _parse_int(hm, "hours")
    m = _parse_int(mm, "minutes")
    sec = _parse_int(ss, "seconds")
    millis = _parse_int(ms, "millis")
    if h > 23 or m > 59 or sec > 59 or millis > 999:
        raise RangeViolation(f"timestamp field out of range: {ts_part!r}")

    channels = []
    for token in fields[1:]:
        v = _parse_int(token, "channel value")
        if v > ADC_MAX:
            raise RangeViolation(f"channel value {v} outside [0, {ADC_MAX}]")
        channels.append(v)

    return Sample(Timestamp(h, m, sec, millis), tuple(channels))


def encode_message(s: Sample, channel_index: int) -> EkgMessage:
    if not (0 <= channel_index < N_CHANNELS):
        raise IndexOutOfRange(f"channel index {channel_index} outside [0, {N_CHANNELS - 1}]")
    return EkgMessage(t_ms=s.ts.to_ms(), value=s.channels[channel_index])


def message_to_json(m: EkgMessage) -> str:
    return json.dumps({"t": m.t_ms, "v": m.value}, separators=(",", ":"))


def message_from_json(text: str) -> EkgMessage:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedLine(f"bad JSON message: {text!r}") from e
    if not isinstance(obj, dict) or set(obj) != {"t", "v"}:
        raise MalformedLine(f"message must have exactly fields t and v: {text!r}")
    t, v = obj["t"], obj["v"]
    if not isinstance(t, int) or not isinstance(v, int):
        raise MalformedLine(f"message fields must be integers: {text!r}")
    if not (0 <= t < MS_PER_DAY) or not (0 <= v <= ADC_MAX):
        raise RangeViolation(f"message field out of range: {text!r}")
    return EkgMessage(t_ms=t, value=v)
