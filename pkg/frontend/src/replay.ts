/** Replays a loaded capture through a sink at the live sample rate. */

import { WireMessage } from "./capture.js";

export const REPLAY_POINTS_PER_SECOND = 250;

export interface Scheduler {
  setInterval(fn: () => void, ms: number): unknown;
  clearInterval(handle: unknown): void;
}

const realScheduler: Scheduler = {
  setInterval: (fn, ms) => setInterval(fn, ms),
  clearInterval: (h) => clearInterval(h as Parameters<typeof clearInterval>[0]),
};

export class Replayer {
  private handle: unknown = null;
  private index = 0;

  constructor(
    readonly messages: WireMessage[],
    readonly onMessage: (msg: WireMessage) => void,
    readonly onDone: () => void,
    readonly scheduler: Scheduler = realScheduler,
    readonly batchIntervalMs = 40,
  ) {}

  get running(): boolean {
    return this.handle !== null;
  }

  start(): void {
    if (this.handle !== null) return;
    const perBatch = Math.round(
      (REPLAY_POINTS_PER_SECOND * this.batchIntervalMs) / 1000,
    );
    this.handle = this.scheduler.setInterval(() => {
      for (let i = 0; i < perBatch && this.index < this.messages.length; i++) {
        this.onMessage(this.messages[this.index++]);
      }
      if (this.index >= this.messages.length) {
        this.stop();
        this.onDone();
      }
    }, this.batchIntervalMs);
  }

  stop(): void {
    if (this.handle !== null) {
      this.scheduler.clearInterval(this.handle);
      this.handle = null;
    }
  }
}
