"""Synthetic single-lead EKG generator.

Stands in for the analog sensor chain: channel 0 carries a PQRST-like
template (sum of Gaussian bumps, dominant R deflection) repeating at the
configured heart rate, plus an optional powerline sinusoid and white
noise.  Channels 1-5 carry the flat baseline.  Ground-truth R-peak sample
indices are returned alongside the values.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .types import (ADC_MAX, SAMPLE_PERIOD_MS, SAMPLE_RATE_HZ, N_CHANNELS,
                    Sample, SignalSpec, Timestamp)

# Bump placement relative to the R peak, in fractions of the beat period
# (P, T) or absolute seconds (Q, R, S which keep fixed QRS morphology).
_P_OFFSET_FRAC, _P_WIDTH_FRAC, _P_AMP = -0.25, 0.030, 0.12
_T_OFFSET_FRAC, _T_WIDTH_FRAC, _T_AMP = 0.30, 0.055, 0.25
_Q_OFFSET_S, _Q_WIDTH_S, _Q_AMP = -0.030, 0.010, -0.15
_R_WIDTH_S = 0.012
_S_OFFSET_S, _S_WIDTH_S, _S_AMP = 0.030, 0.012, -0.20


def _gauss(x: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    return np.exp(-0.5 * ((x - mu) / sigma) ** 2)


def generate_values(spec: SignalSpec, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (channel-0 values as int array of length n, R-peak indices).

    Deterministic for a fixed spec (including seed).  The first R peak
    sits half a beat period in, so a trace of k whole periods carries
    exactly k peaks.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)

    t = np.arange(n, dtype=np.float64) / SAMPLE_RATE_HZ
    signal = np.full(n, float(spec.baseline_counts))

    period = 60.0 / spec.heart_rate_bpm
    if spec.amplitude_counts > 0:
        # tau: signed time distance to the nearest R center
        phase = ((t / period) % 1.0) - 0.5
        tau = phase * period
        shape = _gauss(tau, 0.0, _R_WIDTH_S)
        shape += _Q_AMP * _gauss(tau, _Q_OFFSET_S, _Q_WIDTH_S)
        shape += _S_AMP * _gauss(tau, _S_OFFSET_S, _S_WIDTH_S)
        shape += _P_AMP * _gauss(tau, _P_OFFSET_FRAC * period, _P_WIDTH_FRAC * period)
        shape += _T_AMP * _gauss(tau, _T_OFFSET_FRAC * period, _T_WIDTH_FRAC * period)
        signal += spec.amplitude_counts * shape

    if spec.powerline_hz > 0 and spec.powerline_amplitude_counts > 0:
        signal += spec.powerline_amplitude_counts * np.sin(
            2.0 * np.pi * spec.powerline_hz * t)

    if spec.noise_rms_counts > 0:
        rng = np.random.default_rng(spec.seed)
        signal += rng.normal(0.0, spec.noise_rms_counts, size=n)

    values = np.clip(np.rint(signal), 0, ADC_MAX).astype(np.int64)

    peak_times = (np.arange(0, n / SAMPLE_RATE_HZ / period) + 0.5) * period
    peaks = np.rint(peak_times * SAMPLE_RATE_HZ).astype(np.int64)
    peaks = peaks[peaks < n]
    return values, peaks


def generate_signal(spec: SignalSpec, n: int,
                    start_ms: int = 0) -> tuple[list[Sample], np.ndarray]:
    """Materialize n Samples at 4 ms spacing starting at start_ms."""
    values, peaks = generate_values(spec, n)
    baseline = int(np.clip(spec.baseline_counts, 0, ADC_MAX))
    rest = (baseline,) * (N_CHANNELS - 1)
    samples = [
        Sample(Timestamp.from_ms(start_ms + k * SAMPLE_PERIOD_MS),
               (int(values[k]),) + rest)
        for k in range(n)
    ]
    return samples, peaks


def load_spec_file(path: str | Path) -> SignalSpec:
    """Load a SignalSpec from a flat JSON key/value document."""
    with open(path) as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a flat JSON object")
    known = set(SignalSpec.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    return SignalSpec(**doc)
