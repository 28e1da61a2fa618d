"""Pure-numpy fallback for the batch kernels (no JIT)."""

import numpy as np

from . import DetectorParams, RPeakDetector


def moving_average5(x):
    windows = np.lib.stride_tricks.sliding_window_view(
        np.asarray(x, dtype=np.float64), 5)
    return windows.sum(axis=1) / 5


def detect_peaks(t_ms, f, refractory_ms, threshold_fraction,
                 decay_half_life_ms, seed_excursion_counts, floor_counts,
                 baseline_half_life_ms, rr_window_len, hr_min_bpm, hr_max_bpm):
    params = DetectorParams(
        refractory_ms=refractory_ms,
        threshold_fraction=threshold_fraction,
        decay_half_life_ms=decay_half_life_ms,
        seed_excursion_counts=seed_excursion_counts,
        floor_counts=floor_counts,
        baseline_half_life_ms=baseline_half_life_ms,
        rr_window_len=rr_window_len,
        hr_min_bpm=hr_min_bpm,
        hr_max_bpm=hr_max_bpm,
    )
    n = len(f)
    is_peak = np.zeros(n, dtype=np.bool_)
    hr = np.full(n, np.nan, dtype=np.float64)
    det = RPeakDetector(params)
    for i in range(n):
        if det.push(float(t_ms[i]), float(f[i])) is not None:
            is_peak[i - 1] = True
        bpm = det.heart_rate()
        if bpm is not None:
            hr[i] = bpm
    return is_peak, hr
