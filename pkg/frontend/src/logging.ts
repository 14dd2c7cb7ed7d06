/**
 * Interaction event log.
 *
 * Every keystroke and click is recorded with a millisecond timestamp; the
 * buffer flushes to the service when the phrase is spoken (and can be
 * flushed manually). Timestamps come from an injectable clock so tests
 * produce deterministic logs.
 */

import type { EventKind, LogEvent } from "./types.js";

export type Clock = () => number;

export class EventLogger {
  private buffer: LogEvent[] = [];

  constructor(private readonly now: Clock = () => Date.now()) {}

  record(kind: EventKind, payload?: string | number | null): LogEvent {
    const event: LogEvent = { t: this.now(), kind, payload: payload ?? null };
    this.buffer.push(event);
    return event;
  }

  /** Counted actions so far (speak click and option displays excluded). */
  countedActions(): number {
    return this.buffer.filter(
      (e) => e.kind !== "speak_click" && e.kind !== "ae_options" && e.kind !== "fm_options",
    ).length;
  }

  drain(): LogEvent[] {
    const out = this.buffer;
    this.buffer = [];
    return out;
  }

  events(): readonly LogEvent[] {
    return this.buffer;
  }
}

/** Trailing-edge debounce used for the per-keystroke expansion trigger. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
  schedule: (cb: () => void, ms: number) => unknown = setTimeout,
  cancel: (handle: unknown) => void = (h) => clearTimeout(h as number),
): (...args: A) => void {
  let handle: unknown = null;
  return (...args: A) => {
    if (handle !== null) cancel(handle);
    handle = schedule(() => {
      handle = null;
      fn(...args);
    }, waitMs);
  };
}
