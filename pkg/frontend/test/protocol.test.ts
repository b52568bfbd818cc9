import { describe, expect, it } from "vitest";

import { clampActivation, encodeActivation, parseServerMessage } from "../src/protocol.js";

const STATE = {
  type: "state",
  t: 0.02,
  target_N: 1.0,
  command_N: 0.5,
  applied_N: 0.4,
  tension_N: 2.0,
};

describe("parseServerMessage", () => {
  it("accepts a well-formed state message", () => {
    const msg = parseServerMessage(STATE);
    expect(msg).not.toBeNull();
    expect(msg!.type).toBe("state");
  });

  it("ignores unknown extra fields for forward compatibility", () => {
    const msg = parseServerMessage({ ...STATE, activation: 0.3, future_field: "x" });
    expect(msg).not.toBeNull();
  });

  it.each(["t", "target_N", "command_N", "applied_N", "tension_N"])(
    "rejects a state message with missing or non-finite %s",
    (field) => {
      expect(parseServerMessage({ ...STATE, [field]: undefined })).toBeNull();
      expect(parseServerMessage({ ...STATE, [field]: NaN })).toBeNull();
      expect(parseServerMessage({ ...STATE, [field]: "1.0" })).toBeNull();
    },
  );

  it("rejects non-objects and unknown types", () => {
    expect(parseServerMessage(null)).toBeNull();
    expect(parseServerMessage([1, 2])).toBeNull();
    expect(parseServerMessage("state")).toBeNull();
    expect(parseServerMessage({ type: "telemetry" })).toBeNull();
  });

  it("accepts summary and error messages", () => {
    expect(parseServerMessage({ type: "summary", metrics: {} })!.type).toBe("summary");
    expect(parseServerMessage({ type: "error", message: "bad" })!.type).toBe("error");
    expect(parseServerMessage({ type: "error", message: 5 })).toBeNull();
  });
});

describe("encodeActivation", () => {
  it("frames a newline-terminated JSON object", () => {
    expect(encodeActivation(0.6)).toBe('{"type":"activation","value":0.6}\n');
  });

  it("refuses out-of-range values", () => {
    expect(() => encodeActivation(1.5)).toThrow(RangeError);
    expect(() => encodeActivation(-0.1)).toThrow(RangeError);
    expect(() => encodeActivation(NaN)).toThrow(RangeError);
  });
});

describe("clampActivation", () => {
  it("clamps into [0, 1] and zeroes non-finite input", () => {
    expect(clampActivation(1.7)).toBe(1);
    expect(clampActivation(-3)).toBe(0);
    expect(clampActivation(0.42)).toBe(0.42);
    expect(clampActivation(NaN)).toBe(0);
  });
});
