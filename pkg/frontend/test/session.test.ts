import { describe, expect, it } from "vitest";

import type { StateMessage } from "../src/protocol.js";
import { SessionState } from "../src/session.js";

function state(t: number, value = 1.0): StateMessage {
  return { type: "state", t, target_N: value, command_N: value, applied_N: value, tension_N: value };
}

describe("SessionState", () => {
  it("accumulates state ticks with monotone timestamps", () => {
    const session = new SessionState();
    for (let k = 1; k <= 5; k++) session.ingest(state(k * 0.02));
    expect(session.states.map((s) => s.t)).toEqual([0.02, 0.04, 0.06, 0.08, 0.1]);
    expect(session.lastState!.t).toBeCloseTo(0.1, 12);
  });

  it("drops replayed timestamps after a reconnect", () => {
    const session = new SessionState();
    for (let k = 1; k <= 10; k++) session.ingest(state(k * 0.02));
    // Reconnect: server resends the last few ticks before moving on.
    for (let k = 8; k <= 12; k++) session.ingest(state(k * 0.02));
    const ts = session.states.map((s) => s.t);
    expect(new Set(ts).size).toBe(ts.length);
    expect(ts.every((t, i) => i === 0 || t > ts[i - 1])).toBe(true);
    expect(session.states.length).toBe(12);
    expect(session.dropped).toBe(3);
  });

  it("caps retained history at the configured capacity", () => {
    const session = new SessionState(100);
    for (let k = 1; k <= 250; k++) session.ingest(state(k * 0.02));
    expect(session.states.length).toBe(100);
    expect(session.states[0].t).toBeCloseTo(151 * 0.02, 12);
  });

  it("stores summary and error messages", () => {
    const session = new SessionState();
    session.ingest({ type: "error", message: "bad line" });
    session.ingest({ type: "summary", metrics: { tracking_rmse_N: 0.8 } });
    expect(session.lastError).toBe("bad line");
    expect(session.summary).not.toBeNull();
  });

  it("keeps the raw text of a summary that failed validation", () => {
    const session = new SessionState();
    session.ingestMalformedSummary('{"type":"summary",,,');
    expect(session.malformedSummary).toBe('{"type":"summary",,,');
  });

  it("extracts a plottable series per signal", () => {
    const session = new SessionState();
    session.ingest(state(0.02, 1));
    session.ingest(state(0.04, 2));
    expect(session.series("applied_N")).toEqual([
      [0.02, 1],
      [0.04, 2],
    ]);
  });
});
