"""Batch processing over whole captures, backend-dispatched.

``REMOTE_EKG_BACKEND=numpy`` forces the pure-numpy path;
``REMOTE_EKG_BACKEND=numba`` requires numba; unset picks numba when
importable.
"""

from __future__ import annotations

import os

import numpy as np

from . import DetectorParams


def _select_backend():
    choice = os.environ.get("REMOTE_EKG_BACKEND", "").lower()
    if choice == "numpy":
        from . import _kernels_numpy as mod
        return mod, "numpy"
    if choice == "numba":
        from . import _kernels_numba as mod
        return mod, "numba"
    if choice:
        raise ValueError(f"REMOTE_EKG_BACKEND must be numba or numpy, got {choice!r}")
    try:
        from . import _kernels_numba as mod
        return mod, "numba"
    except ImportError:
        from . import _kernels_numpy as mod
        return mod, "numpy"


_BACKEND_MOD, BACKEND = _select_backend()


def moving_average5_batch(values) -> np.ndarray:
    """Trailing 5-tap mean; output[k] covers input[k:k+5] (primed only)."""
    x = np.asarray(values, dtype=np.float64)
    if x.shape[0] < 5:
        return np.zeros(0, dtype=np.float64)
    return _BACKEND_MOD.moving_average5(x)


def detect_peaks_batch(t_ms, filtered, params: DetectorParams | None = None):
    """Run the peak detector over a filtered trace.

    Returns (is_peak, hr): is_peak[i] flags point i (confirmed by its
    successor), hr[i] is the running rate after point i (NaN if absent).
    """
    p = params or DetectorParams()
    t = np.ascontiguousarray(t_ms, dtype=np.float64)
    f = np.ascontiguousarray(filtered, dtype=np.float64)
    return _BACKEND_MOD.detect_peaks(
        t, f, p.refractory_ms, p.threshold_fraction, p.decay_half_life_ms,
        p.seed_excursion_counts, p.floor_counts, p.baseline_half_life_ms,
        p.rr_window_len, p.hr_min_bpm, p.hr_max_bpm)


def process_capture(t_ms, values, params: DetectorParams | None = None):
    """Filter + detect over a raw capture.

    Returns (t_out, filtered, is_peak, hr) aligned to the primed points
    (input index 4 onward), with hr reported as the streaming pipeline
    would attach it to each emitted point.
    """
    t = np.asarray(t_ms, dtype=np.int64)
    f = moving_average5_batch(values)
    m = f.shape[0]
    t_out = t[4:4 + m]
    if m == 0:
        return t_out, f, np.zeros(0, np.bool_), np.full(0, np.nan)
    is_peak, hr_after = detect_peaks_batch(t_out, f, params)
    # emitted point j is finalized while processing point j+1
    hr = np.empty(m, dtype=np.float64)
    hr[:-1] = hr_after[1:]
    hr[-1] = hr_after[-1]
    return t_out, f, is_peak, hr
