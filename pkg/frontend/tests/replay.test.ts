import { describe, expect, it } from "vitest";
import { WireMessage } from "../src/capture.js";
import { REPLAY_POINTS_PER_SECOND, Replayer, Scheduler } from "../src/replay.js";

/** Deterministic scheduler: ticks only when the test says so. */
class FakeScheduler implements Scheduler {
  fn: (() => void) | null = null;
  intervalMs = 0;
  cleared = 0;

  setInterval(fn: () => void, ms: number): unknown {
    this.fn = fn;
    this.intervalMs = ms;
    return 1;
  }

  clearInterval(): void {
    this.cleared += 1;
    this.fn = null;
  }

  tick(): void {
    this.fn?.();
  }
}

function capture(n: number): WireMessage[] {
  return Array.from({ length: n }, (_, i) => ({ t: i * 4, v: 512 }));
}

describe("Replayer", () => {
  it("delivers the live rate: 10 points per 40 ms batch", () => {
    const sched = new FakeScheduler();
    const got: WireMessage[] = [];
    const rp = new Replayer(capture(25), (m) => got.push(m), () => {}, sched);
    rp.start();
    expect(sched.intervalMs).toBe(40);
    sched.tick();
    expect(got.length).toBe((REPLAY_POINTS_PER_SECOND * 40) / 1000);
    sched.tick();
    expect(got.length).toBe(20);
  });

  it("delivers every message in order, then fires onDone and stops", () => {
    const sched = new FakeScheduler();
    const msgs = capture(25);
    const got: WireMessage[] = [];
    let done = 0;
    const rp = new Replayer(msgs, (m) => got.push(m), () => (done += 1), sched);
    rp.start();
    sched.tick();
    sched.tick();
    expect(done).toBe(0);
    sched.tick();
    expect(got).toEqual(msgs);
    expect(done).toBe(1);
    expect(rp.running).toBe(false);
    expect(sched.cleared).toBe(1);
  });

  it("stop() halts delivery without onDone", () => {
    const sched = new FakeScheduler();
    const got: WireMessage[] = [];
    let done = 0;
    const rp = new Replayer(capture(100), (m) => got.push(m), () => (done += 1), sched);
    rp.start();
    sched.tick();
    rp.stop();
    expect(sched.fn).toBeNull();
    expect(got.length).toBe(10);
    expect(done).toBe(0);
  });

  it("start() is idempotent while running", () => {
    const sched = new FakeScheduler();
    const rp = new Replayer(capture(10), () => {}, () => {}, sched);
    rp.start();
    const fn = sched.fn;
    rp.start();
    expect(sched.fn).toBe(fn);
  });
});
