/**
 * Doctor-side signal processing, ported 1:1 from the backend pipeline:
 * trailing 5-tap moving average, adaptive R-peak detector with a 200 ms
 * refractory period, and heart rate as 60000 over the mean of the last
 * RR intervals.  All arithmetic is IEEE double, so outputs match the
 * backend's offline tool bit-for-bit on the same capture.
 */

export const MA_TAPS = 5;

export interface DetectorParams {
  refractoryMs: number;
  thresholdFraction: number;
  decayHalfLifeMs: number;
  seedExcursionCounts: number;
  floorCounts: number;
  baselineHalfLifeMs: number;
  rrWindowLen: number;
  hrMinBpm: number;
  hrMaxBpm: number;
}

export const DEFAULT_PARAMS: DetectorParams = {
  refractoryMs: 200,
  thresholdFraction: 0.6,
  decayHalfLifeMs: 2000,
  seedExcursionCounts: 150,
  floorCounts: 75,
  baselineHalfLifeMs: 1000,
  rrWindowLen: 8,
  hrMinBpm: 20,
  hrMaxBpm: 300,
};

export interface FilteredPoint {
  tMs: number;
  filteredValue: number;
  isRPeak: boolean;
  heartRateBpm: number | null;
}

/** Trailing 5-tap mean; returns null until 5 inputs have been seen. */
export class MovingAverage5 {
  private window: number[] = [];

  get primed(): boolean {
    return this.window.length === MA_TAPS;
  }

  push(x: number): number | null {
    this.window.push(x);
    if (this.window.length > MA_TAPS) this.window.shift();
    if (this.window.length < MA_TAPS) return null;
    let total = 0;
    for (const v of this.window) total += v;
    return total / MA_TAPS;
  }
}

/**
 * A point is confirmed as a peak only once its successor arrives, so
 * push() reports on the previous point (returns its time, or null).
 */
export class RPeakDetector {
  readonly params: DetectorParams;
  baseline = 0;
  envelope = 0;
  seeded = false;
  lastPeakT: number | null = null;
  rrWindow: number[] = [];
  peaksAccepted = 0;
  private n = 0;
  private lastT = 0;
  private prev1F = 0;
  private prev1T = 0;
  private prev2F = 0;

  constructor(params: DetectorParams = DEFAULT_PARAMS) {
    this.params = params;
  }

  push(tMs: number, f: number): number | null {
    const p = this.params;
    if (this.n === 0) {
      this.baseline = f;
    } else {
      const dt = tMs - this.lastT;
      this.baseline += (1 - 2 ** (-dt / p.baselineHalfLifeMs)) * (f - this.baseline);
      if (this.seeded) this.envelope *= 2 ** (-dt / p.decayHalfLifeMs);
    }

    let peakT: number | null = null;
    if (this.n >= 2 && this.prev2F <= this.prev1F && this.prev1F > f) {
      const amp = this.prev1F - this.baseline;
      const threshold = this.seeded
        ? Math.max(p.thresholdFraction * this.envelope, p.floorCounts)
        : p.seedExcursionCounts;
      const refractoryOk =
        this.lastPeakT === null || this.prev1T - this.lastPeakT >= p.refractoryMs;
      if (amp >= threshold && refractoryOk) {
        if (this.lastPeakT !== null) {
          this.rrWindow.push(this.prev1T - this.lastPeakT);
          if (this.rrWindow.length > p.rrWindowLen) this.rrWindow.shift();
        }
        this.lastPeakT = this.prev1T;
        this.envelope = amp;
        this.seeded = true;
        this.peaksAccepted += 1;
        peakT = this.prev1T;
      }
    }

    this.prev2F = this.prev1F;
    this.prev1F = f;
    this.prev1T = tMs;
    this.lastT = tMs;
    this.n += 1;
    return peakT;
  }

  heartRate(): number | null {
    const p = this.params;
    if (this.peaksAccepted < 2 || this.rrWindow.length === 0) return null;
    let total = 0;
    for (const rr of this.rrWindow) total += rr;
    const bpm = 60000 / (total / this.rrWindow.length);
    if (bpm < p.hrMinBpm || bpm > p.hrMaxBpm) return null;
    return bpm;
  }
}

/**
 * Filter + detector over a live stream.  Emits points one sample late
 * so the peak flag on each emitted point is final; call flush() at end
 * of stream for the last pending point.
 */
export class EkgPipeline {
  readonly filter = new MovingAverage5();
  readonly detector: RPeakDetector;
  private pending: [number, number] | null = null;

  constructor(params: DetectorParams = DEFAULT_PARAMS) {
    this.detector = new RPeakDetector(params);
  }

  push(tMs: number, value: number): FilteredPoint | null {
    const f = this.filter.push(value);
    if (f === null) return null;
    let out: FilteredPoint | null = null;
    if (this.pending !== null) {
      const [pt, pf] = this.pending;
      const peakT = this.detector.push(tMs, f);
      out = {
        tMs: pt,
        filteredValue: pf,
        isRPeak: peakT !== null,
        heartRateBpm: this.detector.heartRate(),
      };
    } else {
      this.detector.push(tMs, f);
    }
    this.pending = [tMs, f];
    return out;
  }

  flush(): FilteredPoint | null {
    if (this.pending === null) return null;
    const [pt, pf] = this.pending;
    this.pending = null;
    // the final point can never be confirmed as a peak
    return {
      tMs: pt,
      filteredValue: pf,
      isRPeak: false,
      heartRateBpm: this.detector.heartRate(),
    };
  }
}

/** Run the whole pipeline over a capture; one point per primed sample. */
export function processCapture(
  t: number[],
  v: number[],
  params: DetectorParams = DEFAULT_PARAMS,
): FilteredPoint[] {
  const pipe = new EkgPipeline(params);
  const out: FilteredPoint[] = [];
  for (let i = 0; i < t.length; i++) {
    const p = pipe.push(t[i], v[i]);
    if (p !== null) out.push(p);
  }
  const tail = pipe.flush();
  if (tail !== null) out.push(tail);
  return out;
}
