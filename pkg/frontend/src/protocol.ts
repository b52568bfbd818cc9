/**
 * Telemetry protocol messages: line-delimited JSON over TCP.
 *
 * Server -> client: "state" ticks, one "summary" at session end, "error"
 * notices. Client -> server: "activation" values in [0, 1]. All numbers are
 * finite doubles; unknown fields are ignored for forward compatibility.
 */

export interface StateMessage {
  type: "state";
  t: number;
  target_N: number;
  command_N: number;
  applied_N: number;
  tension_N: number;
  activation?: number;
}

export interface SummaryMessage {
  type: "summary";
  [key: string]: unknown;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = StateMessage | SummaryMessage | ErrorMessage;

function finiteNumber(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value);
}

const STATE_FIELDS = ["t", "target_N", "command_N", "applied_N", "tension_N"] as const;

/**
 * Classify one decoded JSON value as a server message, or return null if it
 * does not match any known shape. Extra fields are allowed everywhere.
 */
export function parseServerMessage(raw: unknown): ServerMessage | null {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) return null;
  const obj = raw as Record<string, unknown>;
  switch (obj.type) {
    case "state": {
      for (const field of STATE_FIELDS) {
        if (!finiteNumber(obj[field])) return null;
      }
      if ("activation" in obj && !finiteNumber(obj.activation)) return null;
      return obj as unknown as StateMessage;
    }
    case "summary":
      return obj as SummaryMessage;
    case "error":
      return typeof obj.message === "string" ? (obj as unknown as ErrorMessage) : null;
    default:
      return null;
  }
}

/** Frame an activation value for the wire. The value must already be in [0, 1]. */
export function encodeActivation(value: number): string {
  if (!finiteNumber(value) || value < 0 || value > 1) {
    throw new RangeError(`activation out of range: ${value}`);
  }
  return JSON.stringify({ type: "activation", value }) + "\n";
}

/** Clamp arbitrary UI input into the legal activation range. */
export function clampActivation(value: number): number {
  if (!Number.isFinite(value)) return 0;
  return Math.min(1, Math.max(0, value));
}
