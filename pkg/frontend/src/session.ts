import type { ServerMessage, StateMessage, SummaryMessage } from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "reconnecting" | "closed";

/**
 * Accumulated view of one telemetry session. Values come only from server
 * state messages — the console never originates force or tension numbers —
 * and no smoothing is applied so the display shows controller behavior as-is.
 */
export class SessionState {
  readonly states: StateMessage[] = [];
  summary: SummaryMessage | null = null;
  /** Raw line kept when a summary fails validation, for verbatim display. */
  malformedSummary: string | null = null;
  lastError: string | null = null;
  connection: ConnectionState = "connecting";
  dropped = 0;

  constructor(private readonly capacity = 20000) {}

  get lastState(): StateMessage | null {
    return this.states.length > 0 ? this.states[this.states.length - 1] : null;
  }

  /**
   * Ingest one validated server message. State ticks with timestamps at or
   * behind the newest one are duplicates from a reconnect replay and are
   * dropped, so the plot resumes without doubled points.
   */
  ingest(msg: ServerMessage): void {
    switch (msg.type) {
      case "state": {
        const last = this.lastState;
        if (last !== null && msg.t <= last.t) {
          this.dropped += 1;
          return;
        }
        this.states.push(msg);
        if (this.states.length > this.capacity) {
          this.states.splice(0, this.states.length - this.capacity);
        }
        return;
      }
      case "summary":
        this.summary = msg;
        return;
      case "error":
        this.lastError = msg.message;
        return;
    }
  }

  /** Record a summary line that arrived but did not validate. */
  ingestMalformedSummary(rawLine: string): void {
    this.malformedSummary = rawLine;
  }

  /**
   * One series as (t, value) pairs over the retained window, for plotting.
   */
  series(field: "target_N" | "command_N" | "applied_N" | "tension_N"): Array<[number, number]> {
    return this.states.map((s) => [s.t, s[field]]);
  }
}
