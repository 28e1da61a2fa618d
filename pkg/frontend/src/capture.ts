/**
 * Capture file handling: one JSON wire message per line, the same
 * format the backend offline tool consumes, so saved traces round-trip
 * between the viewer and the headless pipeline.
 */

export interface WireMessage {
  t: number;
  v: number;
}

export class MalformedCapture extends Error {}

const MS_PER_DAY = 86_400_000;
const ADC_MAX = 1023;

export function parseMessage(text: string): WireMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    throw new MalformedCapture(`not a JSON message: ${text}`);
  }
  if (obj === null || typeof obj !== "object" || Array.isArray(obj)) {
    throw new MalformedCapture(`message must be an object: ${text}`);
  }
  const keys = Object.keys(obj);
  if (keys.length !== 2 || !("t" in obj) || !("v" in obj)) {
    throw new MalformedCapture(`message must have exactly fields t and v: ${text}`);
  }
  const { t, v } = obj as { t: unknown; v: unknown };
  if (!Number.isInteger(t) || !Number.isInteger(v)) {
    throw new MalformedCapture(`message fields must be integers: ${text}`);
  }
  const tn = t as number;
  const vn = v as number;
  if (tn < 0 || tn >= MS_PER_DAY || vn < 0 || vn > ADC_MAX) {
    throw new MalformedCapture(`message field out of range: ${text}`);
  }
  return { t: tn, v: vn };
}

export function parseCapture(text: string): WireMessage[] {
  const messages: WireMessage[] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed === "") continue;
    messages.push(parseMessage(trimmed));
  }
  if (messages.length === 0) {
    throw new MalformedCapture("capture holds no messages");
  }
  return messages;
}

export function formatCapture(messages: WireMessage[]): string {
  return messages.map((m) => `{"t":${m.t},"v":${m.v}}`).join("\n") + "\n";
}
