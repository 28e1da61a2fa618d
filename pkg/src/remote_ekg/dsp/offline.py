"""Offline capture processor: wire-message capture file in, CSV out.

Capture format: one JSON object per line, ``{"t": <int>, "v": <int>}`` --
the same format the viewer saves and replays.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from ..codec import message_from_json
from . import DetectorParams
from .batch import process_capture

CSV_HEADER = "t_ms,filtered,is_peak,hr"


def load_capture(lines) -> tuple[np.ndarray, np.ndarray]:
    t, v = [], []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        msg = message_from_json(line)
        t.append(msg.t_ms)
        v.append(msg.value)
    return np.array(t, dtype=np.int64), np.array(v, dtype=np.int64)


def format_rows(t_out, filtered, is_peak, hr) -> list[str]:
    rows = [CSV_HEADER]
    for i in range(len(t_out)):
        hr_s = "" if math.isnan(hr[i]) else repr(float(hr[i]))
        rows.append(f"{int(t_out[i])},{float(filtered[i])!r},"
                    f"{int(is_peak[i])},{hr_s}")
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dsp-offline",
        description="Filter a captured message stream and mark R peaks")
    parser.add_argument("--in", dest="infile", required=True,
                        help="capture file (one JSON message per line), - for stdin")
    parser.add_argument("--out", dest="outfile", required=True,
                        help="CSV output path, - for stdout")
    args = parser.parse_args(argv)

    if args.infile == "-":
        t, v = load_capture(sys.stdin)
    else:
        with open(args.infile) as f:
            t, v = load_capture(f)

    rows = format_rows(*process_capture(t, v, DetectorParams()))
    text = "\n".join(rows) + "\n"
    if args.outfile == "-":
        sys.stdout.write(text)
    else:
        with open(args.outfile, "w") as f:
            f.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
