#!/usr/bin/env python3
"""Compare the numba and pure-numpy DSP backends on a long capture.

Usage: python3 benchmarks/bench_dsp.py [minutes]
"""

import sys
import time

import numpy as np

from remote_ekg.dsp import DetectorParams, process_stream
from remote_ekg.dsp import _kernels_numba, _kernels_numpy
from remote_ekg.signal_gen import generate_values
from remote_ekg.types import SAMPLE_RATE_HZ, SignalSpec


def time_it(fn, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    minutes = float(sys.argv[1]) if len(sys.argv) > 1 else 10.0
    n = int(minutes * 60 * SAMPLE_RATE_HZ)
    spec = SignalSpec(heart_rate_bpm=72, powerline_hz=50,
                      powerline_amplitude_counts=30, noise_rms_counts=5, seed=7)
    values, _ = generate_values(spec, n)
    t_ms = np.arange(n, dtype=np.int64) * 4
    p = DetectorParams()
    args = (p.refractory_ms, p.threshold_fraction, p.decay_half_life_ms,
            p.seed_excursion_counts, p.floor_counts, p.baseline_half_life_ms,
            p.rr_window_len, p.hr_min_bpm, p.hr_max_bpm)

    x = values.astype(np.float64)
    # warm up JIT before timing
    _kernels_numba.moving_average5(x[:100])
    f_warm = _kernels_numba.moving_average5(x)
    _kernels_numba.detect_peaks(t_ms[4:104].astype(np.float64), f_warm[:100], *args)

    print(f"trace: {minutes:g} min, {n} samples\n")
    print(f"{'kernel':<28} {'numba':>10} {'numpy':>10} {'speedup':>8}")

    tb, fb = time_it(lambda: _kernels_numba.moving_average5(x))
    tn, fn_ = time_it(lambda: _kernels_numpy.moving_average5(x))
    assert np.array_equal(fb, fn_)
    print(f"{'moving_average5':<28} {tb * 1e3:>8.1f}ms {tn * 1e3:>8.1f}ms {tn / tb:>7.1f}x")

    tt = t_ms[4:].astype(np.float64)
    tb, rb = time_it(lambda: _kernels_numba.detect_peaks(tt, fb, *args))
    tn, rn = time_it(lambda: _kernels_numpy.detect_peaks(tt, fb, *args), repeats=1)
    assert np.array_equal(rb[0], rn[0])
    print(f"{'detect_peaks':<28} {tb * 1e3:>8.1f}ms {tn * 1e3:>8.1f}ms {tn / tb:>7.1f}x")

    ts, _ = time_it(
        lambda: process_stream(zip(t_ms.tolist(), values.tolist())), repeats=1)
    print(f"\nstreaming reference pipeline: {ts * 1e3:.1f}ms")
    print(f"peaks found: {int(rb[0].sum())}")


if __name__ == "__main__":
    main()
