/** Doctor WebSocket session with status reporting and manual retry. */

import { WireMessage, parseMessage } from "./capture.js";

export const CLOSE_PATIENT_GONE = 4410;

export type SessionStatus =
  | "connecting"
  | "connected"
  | "patient-gone"
  | "closed"
  | "error";

export interface CloseEventLike {
  code: number;
  reason: string;
}

export interface MessageEventLike {
  data: unknown;
}

/** Shape shared by the browser WebSocket and the `ws` package. */
export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: MessageEventLike) => void) | null;
  onclose: ((ev: CloseEventLike) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export interface SessionEvents {
  onStatus(status: SessionStatus, detail: string): void;
  onMessage(msg: WireMessage): void;
}

export class LiveSession {
  private ws: WebSocketLike | null = null;
  framesReceived = 0;
  framesBad = 0;

  constructor(
    readonly url: string,
    readonly events: SessionEvents,
    readonly wsFactory: (url: string) => WebSocketLike,
  ) {}

  connect(): void {
    this.events.onStatus("connecting", this.url);
    let ws: WebSocketLike;
    try {
      ws = this.wsFactory(this.url);
    } catch (e) {
      this.events.onStatus("error", String(e));
      return;
    }
    this.ws = ws;
    ws.onopen = () => this.events.onStatus("connected", "");
    ws.onmessage = (ev) => {
      try {
        this.events.onMessage(parseMessage(String(ev.data)));
        this.framesReceived += 1;
      } catch {
        this.framesBad += 1;
      }
    };
    ws.onerror = () => this.events.onStatus("error", "connection error");
    ws.onclose = (ev) => {
      this.ws = null;
      if (ev.code === CLOSE_PATIENT_GONE) {
        this.events.onStatus("patient-gone", ev.reason || "patient gone");
      } else {
        this.events.onStatus("closed", `${ev.code} ${ev.reason}`.trim());
      }
    };
  }

  close(): void {
    if (this.ws !== null) {
      this.ws.close();
      this.ws = null;
    }
  }
}
