"""Doctor-side signal processing: 5-tap moving average, adaptive R-peak
detection, heart-rate computation.

Two equivalent routes exist:

* streaming state machines (this module) -- one instance per session,
  fed sample by sample;
* batch kernels (:mod:`remote_ekg.dsp.batch`) over whole captures, with
  a numba implementation and a pure-numpy fallback selected by the
  ``REMOTE_EKG_BACKEND`` env var.

Both produce identical peak sets and rates on the same input.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

MA_TAPS = 5
# trailing window: output lags the input by (taps-1)/2 samples = 8 ms at 250 Hz
MA_GROUP_DELAY_SAMPLES = 2


@dataclass(frozen=True)
class DetectorParams:
    refractory_ms: float = 200.0
    threshold_fraction: float = 0.6
    decay_half_life_ms: float = 2000.0
    seed_excursion_counts: float = 150.0
    floor_counts: float = 75.0
    baseline_half_life_ms: float = 1000.0
    rr_window_len: int = 8
    hr_min_bpm: float = 20.0
    hr_max_bpm: float = 300.0


@dataclass
class FilteredPoint:
    t_ms: int
    filtered_value: float
    is_r_peak: bool
    heart_rate_bpm: float | None


class MovingAverage5:
    """Trailing 5-tap mean; no output until 5 inputs have been seen."""

    def __init__(self):
        self._window: deque[float] = deque(maxlen=MA_TAPS)

    @property
    def primed(self) -> bool:
        return len(self._window) == MA_TAPS

    def push(self, x: float) -> float | None:
        self._window.append(x)
        if len(self._window) < MA_TAPS:
            return None
        total = 0.0
        for v in self._window:
            total += v
        return total / MA_TAPS


class RPeakDetector:
    """Adaptive-threshold local-maximum detector with refractory period.

    The threshold follows a fraction of the last accepted peak's
    amplitude above a slow baseline estimate, decaying exponentially
    between peaks; the first peak is accepted on an excursion beyond a
    fixed seed level.  A point is confirmed as a peak only once its
    successor arrives, so push() reports on the *previous* point.
    """

    def __init__(self, params: DetectorParams | None = None):
        self.params = params or DetectorParams()
        self.baseline = 0.0
        self.envelope = 0.0
        self.seeded = False
        self.last_peak_t: float | None = None
        self.rr_window: deque[float] = deque(maxlen=self.params.rr_window_len)
        self.peaks_accepted = 0
        self._n = 0
        self._last_t = 0.0
        self._prev1_f = 0.0
        self._prev1_t = 0.0
        self._prev2_f = 0.0

    def push(self, t_ms: float, f: float) -> float | None:
        """Consume one filtered point; return the time of a newly
        confirmed peak (the previous point), if any."""
        p = self.params
        if self._n == 0:
            self.baseline = f
        else:
            dt = t_ms - self._last_t
            self.baseline += (1.0 - 2.0 ** (-dt / p.baseline_half_life_ms)) \
                * (f - self.baseline)
            if self.seeded:
                self.envelope *= 2.0 ** (-dt / p.decay_half_life_ms)

        peak_t = None
        if self._n >= 2 and self._prev2_f <= self._prev1_f and self._prev1_f > f:
            amp = self._prev1_f - self.baseline
            if self.seeded:
                threshold = max(p.threshold_fraction * self.envelope, p.floor_counts)
            else:
                threshold = p.seed_excursion_counts
            refractory_ok = (self.last_peak_t is None
                             or self._prev1_t - self.last_peak_t >= p.refractory_ms)
            if amp >= threshold and refractory_ok:
                if self.last_peak_t is not None:
                    self.rr_window.append(self._prev1_t - self.last_peak_t)
                self.last_peak_t = self._prev1_t
                self.envelope = amp
                self.seeded = True
                self.peaks_accepted += 1
                peak_t = self._prev1_t

        self._prev2_f = self._prev1_f
        self._prev1_f = f
        self._prev1_t = t_ms
        self._last_t = t_ms
        self._n += 1
        return peak_t

    def heart_rate(self) -> float | None:
        """60000 / mean RR over the window, absent until 2 peaks."""
        p = self.params
        if self.peaks_accepted < 2 or not self.rr_window:
            return None
        mean_rr = sum(self.rr_window) / len(self.rr_window)
        bpm = 60000.0 / mean_rr
        if not (p.hr_min_bpm <= bpm <= p.hr_max_bpm):
            return None
        return bpm


class EkgPipeline:
    """Filter + detector over a live sample stream.

    Emits FilteredPoints one sample late so the peak flag on each
    emitted point is final; call flush() at end of stream for the last
    pending point.
    """

    def __init__(self, params: DetectorParams | None = None):
        self.filter = MovingAverage5()
        self.detector = RPeakDetector(params)
        self._pending: tuple[float, float] | None = None

    def push(self, t_ms: float, value: float) -> FilteredPoint | None:
        f = self.filter.push(value)
        if f is None:
            return None
        out = None
        if self._pending is not None:
            pt, pf = self._pending
            peak_t = self.detector.push(t_ms, f)
            out = FilteredPoint(int(pt), pf, peak_t is not None,
                                self.detector.heart_rate())
        else:
            self.detector.push(t_ms, f)
        self._pending = (t_ms, f)
        return out

    def flush(self) -> FilteredPoint | None:
        if self._pending is None:
            return None
        pt, pf = self._pending
        self._pending = None
        # the final point can never be confirmed as a peak
        return FilteredPoint(int(pt), pf, False, self.detector.heart_rate())


def process_stream(points, params: DetectorParams | None = None) -> list[FilteredPoint]:
    """Run the streaming pipeline over an iterable of (t_ms, value)."""
    pipe = EkgPipeline(params)
    out = []
    for t_ms, value in points:
        p = pipe.push(t_ms, value)
        if p is not None:
            out.append(p)
    tail = pipe.flush()
    if tail is not None:
        out.append(tail)
    return out
