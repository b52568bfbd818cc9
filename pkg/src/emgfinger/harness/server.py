"""Line-delimited JSON telemetry/teleoperation server.

One client per session. The 50 Hz control loop runs in the serving thread;
a reader thread parses client lines into a latest-wins activation slot.
Protocol (one JSON object per line):

    server -> client  {"type": "state", "t": .., "target_N": .., "command_N": ..,
                       "applied_N": .., "tension_N": .., "activation": ..}
    client -> server  {"type": "activation", "value": 0..1}
    server -> client  {"type": "error", "message": ..}
    server -> client  {"type": "summary", ...metrics..., "input_timeout": bool}

Unknown fields in client messages are ignored; malformed messages are
rejected with an error line but the connection stays open.
"""

from __future__ import annotations

import json
import math
import socket
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .config import ExperimentConfig
from .experiments import (
    compute_metrics,
    make_subject,
    run_tension_calibration,
    save_report,
    train_control_estimator,
    build_pipeline,
)
from .loop import TrialRecord

INPUT_TIMEOUT_S = 1.0


@dataclass
class ActivationSlot:
    """Latest-wins activation input shared between reader and loop threads."""

    value: float = 0.0
    last_update: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def put(self, value: float) -> None:
        with self.lock:
            self.value = value
            self.last_update = time.monotonic()

    def get(self) -> tuple[float, float]:
        with self.lock:
            return self.value, self.last_update


class _Client:
    """Socket wrapper: line framing in, JSON lines out, thread-safe writes."""

    def __init__(self, conn: socket.socket):
        self.conn = conn
        self.buffer = b""
        self.write_lock = threading.Lock()
        self.closed = False

    def send(self, message: dict) -> None:
        data = (json.dumps(message) + "\n").encode()
        with self.write_lock:
            if self.closed:
                return
            try:
                self.conn.sendall(data)
            except OSError:
                self.closed = True

    def lines(self):
        while True:
            try:
                chunk = self.conn.recv(4096)
            except OSError:
                return
            if not chunk:
                return
            self.buffer += chunk
            while b"\n" in self.buffer:
                line, self.buffer = self.buffer.split(b"\n", 1)
                if line.strip():
                    yield line


def parse_activation(line: bytes) -> float:
    """Validate one client line; returns the activation value or raises ValueError."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("message must be a JSON object")
    if doc.get("type") != "activation":
        raise ValueError(f"unknown message type {doc.get('type')!r}")
    value = doc.get("value")
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ValueError("activation value must be a finite number")
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"activation {value} outside [0, 1]")
    return float(value)


def _reader(client: _Client, slot: ActivationSlot) -> None:
    for line in client.lines():
        try:
            slot.put(parse_activation(line))
        except ValueError as exc:
            client.send({"type": "error", "message": str(exc)})


def serve_console(
    cfg: ExperimentConfig,
    port: int,
    host: str = "127.0.0.1",
    duration: float | None = None,
    out_dir=None,
    pace: float = 1.0,
    ready_event: threading.Event | None = None,
    prepared: tuple | None = None,
) -> dict:
    """Serve one live teleoperation session and return its report.

    pace: wall-clock seconds per simulated second (1.0 = real time, 0 = run
    as fast as possible — useful for tests and replays).
    """
    duration = duration if duration is not None else cfg.pattern_duration
    subject = make_subject(cfg, 0)
    if prepared is None:
        estimator, scale, _ = train_control_estimator(cfg, subject, 0)
        curve = run_tension_calibration(cfg)["curve"]
    else:
        estimator, scale, curve = prepared
    from ..plant import pattern_generate
    from .experiments import _seed

    pattern = pattern_generate(cfg.force_scale, duration, cfg.pattern_hold, _seed(cfg, 12, 0))
    pipeline = build_pipeline(cfg, subject, scale, estimator, curve, 0)

    server = socket.create_server((host, port))
    try:
        if ready_event is not None:
            ready_event.set()
        conn, _ = server.accept()
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        client = _Client(conn)
        slot = ActivationSlot()
        reader = threading.Thread(target=_reader, args=(client, slot), daemon=True)
        reader.start()

        rows = []
        input_timeout = False
        n_ticks = int(round(duration / cfg.control_period))
        wall_start = time.monotonic()
        for k in range(n_ticks):
            if pace > 0:
                lag = wall_start + k * cfg.control_period * pace - time.monotonic()
                if lag > 0:
                    time.sleep(lag)
            t = pipeline.time
            activation, last_update = slot.get()
            threshold = INPUT_TIMEOUT_S * pace if pace > 0 else INPUT_TIMEOUT_S
            if time.monotonic() - last_update > threshold:
                input_timeout = True  # hold the last value, note it in the summary
            row = pipeline.tick(activation, target=float(pattern.at(t)))
            rows.append(row)
            client.send({
                "type": "state",
                "t": row["t"],
                "target_N": row["target_N"],
                "command_N": row["command_N"],
                "applied_N": row["applied_N"],
                "tension_N": row["tension_N"],
                "activation": row["activation"],
            })
            if client.closed:
                break

        record = TrialRecord.from_rows(rows)
        metrics = compute_metrics(record)
        report = {
            "kind": "prosthesis_control_live",
            "seed": cfg.seed,
            "estimator": cfg.estimator,
            "metrics": metrics,
            "input_timeout": input_timeout,
            "ticks": len(rows),
        }
        client.send({"type": "summary", **report})
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            save_report(out / "session_report.json", report)
            record.save_csv(out / "session_record.csv")
        with client.write_lock:
            client.closed = True
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            conn.close()
        return {"report": report, "record": record}
    finally:
        server.close()
