/** Feedback sending: button/keyboard gestures become wire frames.
 *
 * A 150 ms debounce collapses accidental double clicks into one message,
 * and nothing is ever sent while disconnected (callers surface a warning
 * instead of dropping silently).
 */

export const DEBOUNCE_MS = 150;

export interface FeedbackPort {
  send(text: string): void;
  connected(): boolean;
}

export type SubmitResult = "sent" | "debounced" | "disconnected";

export class FeedbackSender {
  private lastSent = Number.NEGATIVE_INFINITY;

  constructor(
    private port: FeedbackPort,
    private debounceMs: number = DEBOUNCE_MS,
    private now: () => number = () => Date.now(),
  ) {}

  submit(polarity: 1 | -1): SubmitResult {
    if (!this.port.connected()) return "disconnected";
    const t = this.now();
    if (t - this.lastSent < this.debounceMs) return "debounced";
    this.lastSent = t;
    this.port.send(JSON.stringify({ type: "feedback", polarity }));
    return "sent";
  }
}

/** Keyboard mapping: g = good (+1), b = bad (-1). */
export function polarityForKey(key: string): 1 | -1 | null {
  if (key === "g") return 1;
  if (key === "b") return -1;
  return null;
}
