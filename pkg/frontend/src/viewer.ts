/**
 * The doctor's display: scrolling EKG trace on a canvas with R-peak
 * markers and a numeric heart rate, fed either by the live doctor
 * WebSocket or by a replayed capture file.
 */

import { EkgPipeline, FilteredPoint } from "./dsp.js";
import { RingBuffer } from "./ring.js";
import { LiveSession, SessionStatus, WebSocketLike } from "./session.js";
import {
  MalformedCapture,
  WireMessage,
  formatCapture,
  parseCapture,
} from "./capture.js";
import { Replayer } from "./replay.js";

const LIVE_WINDOW_POINTS = 2500; // 10 s at 250 Hz
const ADC_MAX = 1023;

interface RenderedPoint {
  tMs: number;
  value: number; // filtered or raw, per the toggle
  isRPeak: boolean;
}

export class ViewerApp {
  readonly sessionId: string;
  filterEnabled = true;
  private pipeline = new EkgPipeline();
  private points = new RingBuffer<RenderedPoint>(LIVE_WINDOW_POINTS);
  private rawCapture: WireMessage[] = [];
  private session: LiveSession | null = null;
  private replayer: Replayer | null = null;
  private bpm: number | null = null;
  private dirty = false;
  private lastAppendAt = 0;
  private paintDelayMs = 0;
  // sweep: seconds of trace shown across the canvas (25 mm/s paper on a
  // ~250 mm wide screen shows 10 s); adjustable from the controls
  windowSeconds = 10;
  gain = 1;

  constructor(
    private readonly doc: Document,
    private readonly wsFactory: (url: string) => WebSocketLike,
  ) {
    this.sessionId = (doc.body.dataset.sessionId ?? "").trim();
    this.bindControls();
    this.connectLive();
    this.renderLoop();
  }

  private el<T extends HTMLElement>(id: string): T {
    const node = this.doc.getElementById(id);
    if (node === null) throw new Error(`missing element #${id}`);
    return node as T;
  }

  private setStatus(status: SessionStatus | "replay", detail: string): void {
    this.el("status").textContent = detail ? `${status}: ${detail}` : status;
    this.el<HTMLButtonElement>("retry").hidden =
      status === "connected" || status === "connecting" || status === "replay";
  }

  connectLive(): void {
    this.stopReplay();
    this.resetTrace();
    this.rawCapture = [];
    const proto = location.protocol === "https:" ? "wss:" : "ws:";
    const url = `${proto}//${location.host}/out/${this.sessionId}`;
    this.session = new LiveSession(
      url,
      {
        onStatus: (status, detail) => this.setStatus(status, detail),
        onMessage: (msg) => {
          this.rawCapture.push(msg);
          this.feed(msg);
        },
      },
      this.wsFactory,
    );
    this.session.connect();
  }

  private resetTrace(): void {
    this.pipeline = new EkgPipeline();
    this.points.clear();
    this.bpm = null;
    this.dirty = true;
  }

  private feed(msg: WireMessage): void {
    const out = this.pipeline.push(msg.t, msg.v);
    if (this.filterEnabled) {
      if (out !== null) {
        this.points.push({
          tMs: out.tMs,
          value: out.filteredValue,
          isRPeak: out.isRPeak,
        });
        this.bpm = out.heartRateBpm;
      }
    } else {
      // raw mode still runs the pipeline so bpm and markers stay live
      this.points.push({
        tMs: msg.t,
        value: msg.v,
        isRPeak: out?.isRPeak ?? false,
      });
      if (out !== null) this.bpm = out.heartRateBpm;
    }
    this.dirty = true;
    this.lastAppendAt = performance.now();
  }

  private bindControls(): void {
    this.el<HTMLButtonElement>("retry").onclick = () => this.connectLive();
    this.el<HTMLInputElement>("filter-toggle").onchange = (ev) => {
      this.filterEnabled = (ev.target as HTMLInputElement).checked;
      this.resetTrace();
      if (this.replayer !== null) this.startReplay(this.replayer.messages);
    };
    this.el<HTMLButtonElement>("save").onclick = () => this.saveTrace();
    this.el<HTMLInputElement>("replay-file").onchange = (ev) => {
      const file = (ev.target as HTMLInputElement).files?.[0];
      if (file !== undefined) void this.loadReplay(file);
    };
    this.el<HTMLButtonElement>("go-live").onclick = () => this.connectLive();
    this.el<HTMLInputElement>("window-seconds").onchange = (ev) => {
      this.windowSeconds = Number((ev.target as HTMLInputElement).value) || 10;
      this.dirty = true;
    };
    this.el<HTMLInputElement>("gain").onchange = (ev) => {
      this.gain = Number((ev.target as HTMLInputElement).value) || 1;
      this.dirty = true;
    };
  }

  saveTrace(): void {
    if (this.rawCapture.length === 0) {
      this.setStatus("error", "nothing to save yet");
      return;
    }
    const blob = new Blob([formatCapture(this.rawCapture)], {
      type: "application/jsonl",
    });
    const a = this.doc.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `ekg-${this.sessionId}.jsonl`;
    a.click();
    URL.revokeObjectURL(a.href);
  }

  private async loadReplay(file: File): Promise<void> {
    let messages: WireMessage[];
    try {
      messages = parseCapture(await file.text());
    } catch (e) {
      if (e instanceof MalformedCapture) {
        this.setStatus("error", `cannot replay: ${e.message}`);
        return;
      }
      throw e;
    }
    this.session?.close();
    this.session = null;
    this.startReplay(messages);
  }

  private startReplay(messages: WireMessage[]): void {
    this.stopReplay();
    this.resetTrace();
    this.setStatus("replay", `${messages.length} samples`);
    this.replayer = new Replayer(
      messages,
      (msg) => this.feed(msg),
      () => this.setStatus("replay", "finished"),
    );
    this.replayer.start();
  }

  private stopReplay(): void {
    this.replayer?.stop();
    this.replayer = null;
  }

  private renderLoop(): void {
    const frame = () => {
      if (this.dirty) {
        this.draw();
        this.dirty = false;
        if (this.lastAppendAt > 0) {
          this.paintDelayMs = performance.now() - this.lastAppendAt;
        }
      }
      requestAnimationFrame(frame);
    };
    requestAnimationFrame(frame);
  }

  private draw(): void {
    const canvas = this.el<HTMLCanvasElement>("trace");
    const ctx = canvas.getContext("2d");
    if (ctx === null) return;
    const { width, height } = canvas;
    ctx.clearRect(0, 0, width, height);

    const pts = this.points.toArray();
    const windowPoints = this.windowSeconds * 250;
    const visible = pts.slice(-windowPoints);
    const xStep = width / windowPoints;
    const mid = ADC_MAX / 2;
    const yOf = (v: number) =>
      height / 2 - ((v - mid) / ADC_MAX) * height * this.gain;

    ctx.beginPath();
    ctx.strokeStyle = "#0a0";
    visible.forEach((p, i) => {
      const x = i * xStep;
      if (i === 0) ctx.moveTo(x, yOf(p.value));
      else ctx.lineTo(x, yOf(p.value));
    });
    ctx.stroke();

    ctx.fillStyle = "#c00";
    visible.forEach((p, i) => {
      if (p.isRPeak) {
        ctx.beginPath();
        ctx.arc(i * xStep, yOf(p.value), 3, 0, 2 * Math.PI);
        ctx.fill();
      }
    });

    this.el("bpm").textContent =
      this.bpm === null ? "--" : this.bpm.toFixed(0);
    this.el("paint-delay").textContent =
      `frame-to-paint ${this.paintDelayMs.toFixed(1)} ms`;
  }
}
