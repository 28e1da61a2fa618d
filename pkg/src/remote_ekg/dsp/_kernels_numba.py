"""numba-compiled batch kernels; arithmetic mirrors the streaming state
machines operation for operation so results are bit-identical."""

import numpy as np
from numba import njit


@njit(cache=True)
def moving_average5(x):
    n = x.shape[0]
    out = np.empty(n - 4, dtype=np.float64)
    for i in range(4, n):
        total = 0.0
        for j in range(i - 4, i + 1):
            total += x[j]
        out[i - 4] = total / 5
    return out


@njit(cache=True)
def detect_peaks(t_ms, f, refractory_ms, threshold_fraction,
                 decay_half_life_ms, seed_excursion_counts, floor_counts,
                 baseline_half_life_ms, rr_window_len, hr_min_bpm, hr_max_bpm):
    n = f.shape[0]
    is_peak = np.zeros(n, dtype=np.bool_)
    hr = np.full(n, np.nan, dtype=np.float64)

    baseline = 0.0
    envelope = 0.0
    seeded = False
    last_peak_t = -1.0
    have_peak = False
    peaks_accepted = 0
    rr = np.zeros(rr_window_len, dtype=np.float64)
    rr_count = 0
    rr_next = 0
    last_t = 0.0
    prev1_f = 0.0
    prev1_t = 0.0
    prev2_f = 0.0

    for i in range(n):
        t = float(t_ms[i])
        v = f[i]
        if i == 0:
            baseline = v
        else:
            dt = t - last_t
            baseline += (1.0 - 2.0 ** (-dt / baseline_half_life_ms)) * (v - baseline)
            if seeded:
                envelope *= 2.0 ** (-dt / decay_half_life_ms)

        if i >= 2 and prev2_f <= prev1_f and prev1_f > v:
            amp = prev1_f - baseline
            if seeded:
                threshold = threshold_fraction * envelope
                if threshold < floor_counts:
                    threshold = floor_counts
            else:
                threshold = seed_excursion_counts
            refractory_ok = (not have_peak) or (prev1_t - last_peak_t >= refractory_ms)
            if amp >= threshold and refractory_ok:
                if have_peak:
                    rr[rr_next] = prev1_t - last_peak_t
                    rr_next = (rr_next + 1) % rr_window_len
                    if rr_count < rr_window_len:
                        rr_count += 1
                last_peak_t = prev1_t
                have_peak = True
                envelope = amp
                seeded = True
                peaks_accepted += 1
                is_peak[i - 1] = True

        if peaks_accepted >= 2 and rr_count > 0:
            total = 0.0
            for j in range(rr_count):
                total += rr[j]
            bpm = 60000.0 / (total / rr_count)
            if hr_min_bpm <= bpm <= hr_max_bpm:
                hr[i] = bpm

        prev2_f = prev1_f
        prev1_f = v
        prev1_t = t
        last_t = t

    return is_peak, hr
