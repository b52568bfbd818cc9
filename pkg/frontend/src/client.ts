import * as net from "node:net";

import { LineParser } from "./lineParser.js";
import { encodeActivation, parseServerMessage } from "./protocol.js";
import { SessionState } from "./session.js";

export interface ClientOptions {
  host: string;
  port: number;
  /** Delay before a reconnect attempt, ms. */
  reconnectDelayMs?: number;
  /** Give up after this many consecutive failed connects (0 = forever). */
  maxRetries?: number;
}

export interface ClientEvents {
  onUpdate?: () => void;
  onSummary?: () => void;
  onConnectionChange?: (state: SessionState["connection"]) => void;
}

/**
 * TCP client for the telemetry stream. Owns the session state, reframes the
 * byte stream into JSON lines, validates each message, and reconnects with a
 * fixed delay if the link drops mid-session; the session's timestamp
 * de-duplication makes reconnect replays harmless.
 */
export class ConsoleClient {
  readonly session = new SessionState();
  private socket: net.Socket | null = null;
  private parser: LineParser;
  private retries = 0;
  private stopped = false;
  private reconnectTimer: NodeJS.Timeout | null = null;

  constructor(
    private readonly options: ClientOptions,
    private readonly events: ClientEvents = {},
  ) {
    this.parser = new LineParser(
      (value) => this.handleMessage(value),
      (rawLine) => this.handleMalformed(rawLine),
    );
  }

  get connected(): boolean {
    return this.session.connection === "connected";
  }

  connect(): void {
    if (this.stopped) return;
    const socket = net.createConnection({
      host: this.options.host,
      port: this.options.port,
      noDelay: true,
    });
    this.socket = socket;
    socket.on("connect", () => {
      this.retries = 0;
      this.parser.reset();
      this.setConnection("connected");
    });
    socket.on("data", (chunk) => this.parser.feed(chunk));
    socket.on("error", () => {
      /* handled via close */
    });
    socket.on("close", () => {
      if (this.stopped || this.session.summary !== null) {
        this.setConnection("closed");
        return;
      }
      this.scheduleReconnect();
    });
  }

  /** Send one activation value; returns false while the link is down. */
  sendActivation(value: number): boolean {
    if (!this.connected || this.socket === null || this.socket.destroyed) {
      return false;
    }
    return this.socket.write(encodeActivation(value));
  }

  close(): void {
    this.stopped = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.socket?.destroy();
    this.setConnection("closed");
  }

  private scheduleReconnect(): void {
    const max = this.options.maxRetries ?? 0;
    this.retries += 1;
    if (max > 0 && this.retries > max) {
      this.setConnection("closed");
      return;
    }
    this.setConnection("reconnecting");
    this.reconnectTimer = setTimeout(
      () => this.connect(),
      this.options.reconnectDelayMs ?? 500,
    );
  }

  private setConnection(state: SessionState["connection"]): void {
    if (this.session.connection !== state) {
      this.session.connection = state;
      this.events.onConnectionChange?.(state);
    }
  }

  private handleMessage(value: unknown): void {
    const msg = parseServerMessage(value);
    if (msg === null) {
      // Unknown message shapes are ignored for forward compatibility, except
      // a broken summary, which must still be shown verbatim.
      if ((value as { type?: unknown })?.type === "summary") {
        this.session.ingestMalformedSummary(JSON.stringify(value));
        this.events.onSummary?.();
      }
      return;
    }
    this.session.ingest(msg);
    if (msg.type === "summary") this.events.onSummary?.();
    else this.events.onUpdate?.();
  }

  private handleMalformed(rawLine: string): void {
    if (rawLine.includes('"summary"')) {
      this.session.ingestMalformedSummary(rawLine);
      this.events.onSummary?.();
    }
  }
}
