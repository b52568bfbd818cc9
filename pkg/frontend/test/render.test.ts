import { describe, expect, it } from "vitest";

import { decimate, formatNewtons, renderFrame, renderSummary, sparkline } from "../src/render.js";
import { SessionState } from "../src/session.js";

describe("decimate", () => {
  it("preserves narrow spikes via min/max binning", () => {
    const values = new Array(1000).fill(0);
    values[437] = 9; // one-sample spike in a 50 Hz stream
    const bins = decimate(values, 40);
    expect(bins.length).toBe(40);
    expect(Math.max(...bins.map((b) => b.max))).toBe(9);
    expect(Math.min(...bins.map((b) => b.min))).toBe(0);
  });

  it("is the identity when the series is narrower than the display", () => {
    expect(decimate([1, 2, 3], 80)).toEqual([
      { min: 1, max: 1 },
      { min: 2, max: 2 },
      { min: 3, max: 3 },
    ]);
  });

  it("handles empty input and rejects zero width", () => {
    expect(decimate([], 10)).toEqual([]);
    expect(() => decimate([1], 0)).toThrow(RangeError);
  });
});

describe("sparkline", () => {
  it("renders exactly min(width, n) columns", () => {
    expect(sparkline([0, 1, 2, 3], 2, 0, 3).length).toBe(2);
    expect(sparkline([0, 1], 10, 0, 1).length).toBe(2);
  });
});

describe("formatNewtons", () => {
  it("renders two decimals with the unit", () => {
    expect(formatNewtons(0.8)).toBe("0.80 N");
    expect(formatNewtons(1.456)).toBe("1.46 N");
    expect(formatNewtons(0)).toBe("0.00 N");
  });
});

describe("renderSummary", () => {
  it("formats the three RMSEs from a summary's metrics", () => {
    const session = new SessionState();
    session.ingest({
      type: "summary",
      metrics: { tracking_rmse_N: 0.8, targeting_rmse_N: 1.234, reaching_rmse_N: 1.0 },
    });
    const text = renderSummary(session);
    expect(text).toContain("tracking RMSE: 0.80 N");
    expect(text).toContain("targeting RMSE: 1.23 N");
    expect(text).toContain("reaching RMSE: 1.00 N");
  });

  it("hides missing optional metrics without crashing", () => {
    const session = new SessionState();
    session.ingest({ type: "summary", metrics: { tracking_rmse_N: 0.8 } });
    const text = renderSummary(session);
    expect(text).toContain("tracking RMSE: 0.80 N");
    expect(text).not.toContain("targeting");
  });

  it("shows a malformed summary verbatim", () => {
    const session = new SessionState();
    session.ingestMalformedSummary('{"type":"summary", broken');
    const text = renderSummary(session);
    expect(text).toContain("raw");
    expect(text).toContain('{"type":"summary", broken');
  });
});

describe("renderFrame", () => {
  it("shows connection state and current values from server data only", () => {
    const session = new SessionState();
    session.connection = "connected";
    session.ingest({
      type: "state",
      t: 1.5,
      target_N: 4.8,
      command_N: 4.5,
      applied_N: 4.41,
      tension_N: 12.0,
    });
    const frame = renderFrame(session, 0.6);
    expect(frame).toContain("[connected]");
    expect(frame).toContain("t=1.50 s");
    expect(frame).toContain("4.41 N");
    expect(frame).toContain("activation 0.60");
  });

  it("renders a placeholder before any data arrives", () => {
    const frame = renderFrame(new SessionState(), 0);
    expect(frame).toContain("[connecting]");
    expect(frame).toContain("t=--");
  });
});
