import * as fs from "node:fs";

import { ActivationModel, ActivationSender } from "./activation.js";
import { ConsoleClient } from "./client.js";
import { renderFrame, renderSummary } from "./render.js";

interface Args {
  host: string;
  port: number;
  session: string;
  logPath: string | null;
}

/**
 * Accepts either --server host:port / --session name flags or a single URL
 * whose query parameters carry the same settings, e.g.
 * "tcp://127.0.0.1:7780/?session=a" or "?server=127.0.0.1:7780&session=a".
 */
export function parseArgs(argv: string[]): Args {
  let server = "127.0.0.1:7780";
  let session = "default";
  let logPath: string | null = null;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--server") server = argv[++i];
    else if (arg === "--session") session = argv[++i];
    else if (arg === "--log") logPath = argv[++i];
    else if (arg.includes("?") || arg.includes("://")) {
      const url = new URL(arg, "tcp://127.0.0.1:7780");
      if (url.host) server = url.host;
      server = url.searchParams.get("server") ?? server;
      session = url.searchParams.get("session") ?? session;
    }
  }
  const [host, portText] = server.split(":");
  const port = Number(portText ?? "7780");
  if (!Number.isInteger(port) || port <= 0 || port > 65535) {
    throw new RangeError(`invalid port in server address: ${server}`);
  }
  return { host: host || "127.0.0.1", port, session, logPath };
}

export function main(): void {
  const args = parseArgs(process.argv.slice(2));
  const rawLog: string[] = [];

  const client = new ConsoleClient(
    { host: args.host, port: args.port, reconnectDelayMs: 500 },
    {
      onSummary: () => finish(),
      onConnectionChange: (state) => {
        if (state === "closed" && client.session.summary === null) {
          process.stdout.write("\nconnection closed by server\n");
          shutdown(1);
        }
      },
    },
  );

  const model = new ActivationModel();
  const sender = new ActivationSender((value) => client.sendActivation(value));

  // Keyboard: space auto-repeat keeps the "held" state alive between repeats.
  let keyTimeout: NodeJS.Timeout | null = null;
  if (process.stdin.isTTY) {
    process.stdin.setRawMode(true);
    process.stdin.resume();
    process.stdin.on("data", (chunk) => {
      const key = chunk.toString();
      if (key === "q" || key === "") shutdown(0);
      else if (key === " ") {
        model.keyDown();
        if (keyTimeout !== null) clearTimeout(keyTimeout);
        keyTimeout = setTimeout(() => model.keyUp(), 150);
      } else if (key >= "0" && key <= "9") {
        model.setSlider(Number(key) / 10);
      } else if (key === "r") {
        model.releaseSlider();
        model.keyUp();
      }
    });
  }

  // Input loop: 20 Hz activation updates, latest-wins while disconnected.
  const inputTimer = setInterval(() => {
    const value = model.update(sender.periodMs / 1000);
    sender.push(value);
    sender.flush();
    rawLog.push(JSON.stringify({ t_ms: Date.now(), activation: value }));
  }, sender.periodMs);

  // Display loop: 25 FPS, decimated rendering of the 50 Hz stream.
  const renderTimer = setInterval(() => {
    process.stdout.write("\x1b[2J\x1b[H" + renderFrame(client.session, model.current) + "\n");
  }, 40);

  function finish(): void {
    clearInterval(inputTimer);
    clearInterval(renderTimer);
    process.stdout.write("\x1b[2J\x1b[H" + renderSummary(client.session) + "\n");
    const logPath = args.logPath ?? `session_${args.session}.log`;
    fs.writeFileSync(
      logPath,
      rawLog.join("\n") +
        "\n" +
        (client.session.malformedSummary ?? JSON.stringify(client.session.summary)) +
        "\n",
    );
    process.stdout.write(`raw log written to ${logPath}\n`);
    shutdown(0);
  }

  function shutdown(code: number): void {
    clearInterval(inputTimer);
    clearInterval(renderTimer);
    if (keyTimeout !== null) clearTimeout(keyTimeout);
    client.close();
    if (process.stdin.isTTY) process.stdin.setRawMode(false);
    process.exit(code);
  }

  client.connect();
}

if (process.argv[1] && process.argv[1].endsWith("main.js")) {
  main();
}
