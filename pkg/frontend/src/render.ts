import type { SessionState } from "./session.js";

const BARS = "▁▂▃▄▅▆▇█";

/**
 * Reduce a time series to `width` columns by min/max binning, so narrow
 * spikes in the 50 Hz stream survive decimation instead of aliasing away.
 */
export function decimate(
  values: number[],
  width: number,
): Array<{ min: number; max: number }> {
  if (width <= 0) throw new RangeError("width must be positive");
  if (values.length === 0) return [];
  const bins: Array<{ min: number; max: number }> = [];
  const perBin = values.length / Math.min(width, values.length);
  for (let i = 0; i < Math.min(width, values.length); i++) {
    const start = Math.floor(i * perBin);
    const end = Math.max(start + 1, Math.floor((i + 1) * perBin));
    let lo = Infinity;
    let hi = -Infinity;
    for (let j = start; j < end && j < values.length; j++) {
      lo = Math.min(lo, values[j]);
      hi = Math.max(hi, values[j]);
    }
    bins.push({ min: lo, max: hi });
  }
  return bins;
}

/** One-line unicode sparkline of the bin maxima, scaled to [lo, hi]. */
export function sparkline(values: number[], width: number, lo: number, hi: number): string {
  const bins = decimate(values, width);
  const span = hi - lo || 1;
  return bins
    .map((bin) => {
      const frac = Math.min(1, Math.max(0, (bin.max - lo) / span));
      return BARS[Math.min(BARS.length - 1, Math.floor(frac * BARS.length))];
    })
    .join("");
}

/** Force values are displayed with two decimals and the unit, e.g. "0.80 N". */
export function formatNewtons(value: number): string {
  return `${value.toFixed(2)} N`;
}

const SUMMARY_METRICS: Array<[string, string]> = [
  ["tracking_rmse_N", "tracking RMSE"],
  ["targeting_rmse_N", "targeting RMSE"],
  ["reaching_rmse_N", "reaching RMSE"],
];

/**
 * Render the end-of-session report: the three RMSEs when present (missing
 * optional fields hide their line), or the raw text verbatim when the summary
 * did not validate.
 */
export function renderSummary(session: SessionState): string {
  if (session.summary === null) {
    if (session.malformedSummary !== null) {
      return `session summary (unrecognized, raw):\n${session.malformedSummary}`;
    }
    return "no summary received";
  }
  const lines = ["session summary:"];
  const metrics = (session.summary.metrics ?? session.summary) as Record<string, unknown>;
  for (const [key, label] of SUMMARY_METRICS) {
    const value = metrics[key];
    if (typeof value === "number" && Number.isFinite(value)) {
      lines.push(`  ${label}: ${formatNewtons(value)}`);
    }
  }
  if (lines.length === 1) lines.push("  (no metrics reported)");
  return lines.join("\n");
}

/** Full live frame: connection state, the four signal panes, activation bar. */
export function renderFrame(
  session: SessionState,
  activation: number,
  width = 72,
): string {
  const lines: string[] = [];
  const last = session.lastState;
  lines.push(
    `[${session.connection}] t=${last === null ? "--" : last.t.toFixed(2) + " s"}` +
      (session.lastError !== null ? `  last error: ${session.lastError}` : ""),
  );
  const panes: Array<["target_N" | "command_N" | "applied_N" | "tension_N", string]> = [
    ["target_N", "target "],
    ["command_N", "command"],
    ["applied_N", "applied"],
    ["tension_N", "tension"],
  ];
  const forceMax = 8;
  const tensionMax = 30;
  for (const [field, label] of panes) {
    const values = session.states.map((s) => s[field]);
    const hi = field === "tension_N" ? tensionMax : forceMax;
    const current = last === null ? "  --  " : formatNewtons(last[field]).padStart(8);
    lines.push(`${label} ${current} |${sparkline(values, width, 0, hi)}`);
  }
  const filled = Math.round(activation * 20);
  lines.push(`activation ${activation.toFixed(2)} [${"#".repeat(filled).padEnd(20)}]`);
  lines.push("hold SPACE to contract, 0-9 to set the slider, r to release, q to quit");
  return lines.join("\n");
}
