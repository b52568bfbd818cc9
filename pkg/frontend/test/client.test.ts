import * as net from "node:net";
import { afterEach, describe, expect, it } from "vitest";

import { ActivationModel, ActivationSender } from "../src/activation.js";
import { ConsoleClient } from "../src/client.js";
import { LineParser } from "../src/lineParser.js";
import { renderSummary } from "../src/render.js";

interface MockServer {
  port: number;
  sockets: net.Socket[];
  activations: Array<{ value: number; at: number }>;
  connections: number;
  close(): Promise<void>;
  onActivation?: (socket: net.Socket, value: number) => void;
  onConnection?: (socket: net.Socket) => void;
}

function stateLine(t: number, activation?: number): string {
  return (
    JSON.stringify({
      type: "state",
      t,
      target_N: 1.0,
      command_N: 0.5,
      applied_N: 0.4,
      tension_N: 2.0,
      ...(activation === undefined ? {} : { activation }),
    }) + "\n"
  );
}

async function startMockServer(): Promise<MockServer> {
  const sockets: net.Socket[] = [];
  const mock: Partial<MockServer> = { sockets, activations: [], connections: 0 };
  const server = net.createServer((socket) => {
    socket.setNoDelay(true);
    sockets.push(socket);
    mock.connections! += 1;
    const parser = new LineParser((value) => {
      const msg = value as { type?: string; value?: number };
      if (msg.type === "activation" && typeof msg.value === "number") {
        mock.activations!.push({ value: msg.value, at: Date.now() });
        mock.onActivation?.(socket, msg.value);
      }
    });
    socket.on("data", (chunk) => parser.feed(chunk));
    socket.on("error", () => {});
    mock.onConnection?.(socket);
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  mock.port = (server.address() as net.AddressInfo).port;
  mock.close = () =>
    new Promise((resolve) => {
      for (const s of sockets) s.destroy();
      server.close(() => resolve());
    });
  return mock as MockServer;
}

function until(predicate: () => boolean, timeoutMs = 5000): Promise<void> {
  const start = Date.now();
  return new Promise((resolve, reject) => {
    const timer = setInterval(() => {
      if (predicate()) {
        clearInterval(timer);
        resolve();
      } else if (Date.now() - start > timeoutMs) {
        clearInterval(timer);
        reject(new Error("condition not met in time"));
      }
    }, 5);
  });
}

const cleanups: Array<() => Promise<void> | void> = [];
afterEach(async () => {
  while (cleanups.length > 0) await cleanups.pop()!();
});

describe("ConsoleClient against a live socket", () => {
  it("receives a 50 Hz stream with monotone timestamps", async () => {
    const server = await startMockServer();
    cleanups.push(() => server.close());
    server.onConnection = (socket) => {
      let k = 0;
      const timer = setInterval(() => {
        k += 1;
        socket.write(stateLine(k * 0.02));
        if (k >= 50) clearInterval(timer);
      }, 20);
      cleanups.push(() => clearInterval(timer));
    };
    const client = new ConsoleClient({ host: "127.0.0.1", port: server.port });
    cleanups.push(() => client.close());
    client.connect();
    await until(() => client.session.states.length >= 50);
    const ts = client.session.states.map((s) => s.t);
    expect(ts.every((t, i) => i === 0 || t > ts[i - 1])).toBe(true);
  });

  it("holding the slider at 0.6 for 5 s shows ~0.6 in the server log at >= 20 Hz", async () => {
    const server = await startMockServer();
    cleanups.push(() => server.close());
    const client = new ConsoleClient({ host: "127.0.0.1", port: server.port });
    cleanups.push(() => client.close());
    client.connect();
    await until(() => client.connected);

    const model = new ActivationModel();
    const sender = new ActivationSender((v) => client.sendActivation(v));
    model.setSlider(0.6);
    const input = setInterval(() => sender.push(model.update(sender.periodMs / 1000)), sender.periodMs);
    cleanups.push(() => clearInterval(input));
    await new Promise((resolve) => setTimeout(resolve, 5000));
    clearInterval(input);

    expect(server.activations.length).toBeGreaterThanOrEqual(90); // >= ~20 Hz over 5 s
    for (const { value } of server.activations) {
      expect(value).toBeCloseTo(0.6, 6);
    }
  }, 10000);

  it("round-trips an activation echo in under 100 ms on localhost", async () => {
    const server = await startMockServer();
    cleanups.push(() => server.close());
    server.onActivation = (socket, value) => {
      socket.write(stateLine(0.02, value));
    };
    const client = new ConsoleClient({ host: "127.0.0.1", port: server.port });
    cleanups.push(() => client.close());
    client.connect();
    await until(() => client.connected);

    const sentAt = Date.now();
    expect(client.sendActivation(0.42)).toBe(true);
    await until(() => client.session.lastState?.activation === 0.42);
    expect(Date.now() - sentAt).toBeLessThanOrEqual(100);
  });

  it("reconnects after a drop and de-duplicates the replayed ticks", async () => {
    const server = await startMockServer();
    cleanups.push(() => server.close());
    server.onConnection = (socket) => {
      if (server.connections === 1) {
        for (let k = 1; k <= 10; k++) socket.write(stateLine(k * 0.02));
        setTimeout(() => socket.destroy(), 50);
      } else {
        // Replay the tail of the first stream, then continue past it.
        for (let k = 6; k <= 20; k++) socket.write(stateLine(k * 0.02));
      }
    };
    const client = new ConsoleClient({
      host: "127.0.0.1",
      port: server.port,
      reconnectDelayMs: 30,
    });
    cleanups.push(() => client.close());
    client.connect();
    await until(() => client.session.states.length >= 20);
    expect(server.connections).toBe(2);
    const ts = client.session.states.map((s) => Math.round(s.t / 0.02));
    expect(ts).toEqual(Array.from({ length: 20 }, (_, i) => i + 1));
    expect(client.session.dropped).toBe(5);
  });

  it("delivers the session summary formatted, or raw when malformed", async () => {
    const server = await startMockServer();
    cleanups.push(() => server.close());
    server.onConnection = (socket) => {
      socket.write(stateLine(0.02));
      socket.write(
        JSON.stringify({ type: "summary", metrics: { tracking_rmse_N: 0.8 } }) + "\n",
      );
    };
    const client = new ConsoleClient({ host: "127.0.0.1", port: server.port });
    cleanups.push(() => client.close());
    client.connect();
    await until(() => client.session.summary !== null);
    expect(renderSummary(client.session)).toContain("tracking RMSE: 0.80 N");
  });

  it("shows raw text when the summary line is not valid JSON", async () => {
    const server = await startMockServer();
    cleanups.push(() => server.close());
    const rawSummary = '{"type":"summary","metrics":{oops';
    server.onConnection = (socket) => {
      socket.write(rawSummary + "\n");
    };
    const client = new ConsoleClient({ host: "127.0.0.1", port: server.port });
    cleanups.push(() => client.close());
    client.connect();
    await until(() => client.session.malformedSummary !== null);
    expect(renderSummary(client.session)).toContain(rawSummary);
  });

  it("reports a reconnecting state and no stale data when the server is offline", async () => {
    // Grab a port that nothing is listening on.
    const probe = await startMockServer();
    const deadPort = probe.port;
    await probe.close();

    const seen: string[] = [];
    const client = new ConsoleClient(
      { host: "127.0.0.1", port: deadPort, reconnectDelayMs: 20, maxRetries: 3 },
      { onConnectionChange: (state) => seen.push(state) },
    );
    cleanups.push(() => client.close());
    client.connect();
    await until(() => client.session.connection === "closed", 3000);
    expect(client.session.states.length).toBe(0);
    expect(seen).toContain("reconnecting");
    expect(seen).not.toContain("connected");
  });

  it("refuses to send while disconnected", async () => {
    const server = await startMockServer();
    const client = new ConsoleClient({ host: "127.0.0.1", port: server.port });
    cleanups.push(() => client.close());
    expect(client.sendActivation(0.5)).toBe(false);
    await server.close();
  });
});
