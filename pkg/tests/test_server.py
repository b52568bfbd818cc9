"""Telemetry server tests: protocol validation and live-session behavior."""

import dataclasses
import json
import socket
import threading

import numpy as np
import pytest

from emgfinger.harness import (
    ExperimentConfig,
    make_subject,
    run_prosthesis_control_experiment,
    run_tension_calibration,
    train_control_estimator,
)
from emgfinger.harness.server import parse_activation, serve_console


def short_config() -> ExperimentConfig:
    return dataclasses.replace(
        ExperimentConfig(),
        n_subjects=1, pattern_duration=60.0, mvc_duration=10.0, estimator="linear",
    )


@pytest.fixture(scope="module")
def prepared():
    cfg = short_config()
    subject = make_subject(cfg, 0)
    estimator, scale, _ = train_control_estimator(cfg, subject, 0)
    curve = run_tension_calibration(cfg)["curve"]
    return cfg, (estimator, scale, curve)


class TestParseActivation:
    def test_valid(self):
        assert parse_activation(b'{"type":"activation","value":0.4}') == 0.4

    def test_bounds(self):
        assert parse_activation(b'{"type":"activation","value":0}') == 0.0
        assert parse_activation(b'{"type":"activation","value":1}') == 1.0

    def test_unknown_fields_ignored(self):
        assert parse_activation(b'{"type":"activation","value":0.2,"extra":true}') == 0.2

    @pytest.mark.parametrize("line", [
        b"not json",
        b"[1,2]",
        b'{"type":"other","value":0.5}',
        b'{"type":"activation","value":1.5}',
        b'{"type":"activation","value":-0.1}',
        b'{"type":"activation","value":"0.5"}',
        b'{"type":"activation","value":true}',
        b'{"type":"activation","value":NaN}',
        b'{"type":"activation"}',
    ])
    def test_rejected(self, line):
        with pytest.raises(ValueError):
            parse_activation(line)


def run_session(cfg, prepared, duration, pace=0.0, on_connect=None, on_message=None):
    """Serve one session on an ephemeral port and drive it as a client.

    on_connect(sock) runs once after connecting; on_message(sock, msg) runs
    for every server message, from the single reader loop. Returns
    (server result, list of parsed messages received by the client).
    """
    # pick a free port up front
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()

    ready = threading.Event()
    result = {}

    def serve():
        result.update(serve_console(
            cfg, port, duration=duration, pace=pace,
            ready_event=ready, prepared=prepared,
        ))

    thread = threading.Thread(target=serve, daemon=True)
    thread.start()
    assert ready.wait(10.0)
    sock = socket.create_connection(("127.0.0.1", port), timeout=10.0)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    messages = []
    if on_connect is not None:
        on_connect(sock)
    buffer = b""
    while True:
        try:
            chunk = sock.recv(65536)
        except OSError:
            break
        if not chunk:
            break
        buffer += chunk
        while b"\n" in buffer:
            line, buffer = buffer.split(b"\n", 1)
            if line.strip():
                msg = json.loads(line)
                messages.append(msg)
                if on_message is not None:
                    on_message(sock, msg)
    thread.join(30.0)
    sock.close()
    return result, messages


class TestLiveSession:
    def test_states_errors_and_summary(self, prepared):
        cfg, models = prepared

        def script(sock):
            sock.sendall(b'{"type":"activation","value":0.6}\n')
            sock.sendall(b"garbage\n")
            sock.sendall(b'{"type":"activation","value":1.5}\n')

        result, messages = run_session(cfg, models, duration=6.0, on_connect=script)
        states = [m for m in messages if m["type"] == "state"]
        errors = [m for m in messages if m["type"] == "error"]
        summaries = [m for m in messages if m["type"] == "summary"]
        assert len(states) == 300  # 6 s at 50 Hz
        assert len(errors) == 2  # malformed + out-of-range, connection kept
        assert len(summaries) == 1
        assert summaries[0]["metrics"]["tracking_rmse_N"] >= 0.0
        # the valid activation reached the loop; the invalid ones did not
        seen = {round(m["activation"], 3) for m in states}
        assert seen <= {0.0, 0.6}
        assert 0.6 in seen
        t = [m["t"] for m in states]
        assert t == sorted(t)

    def test_session_rmse_matches_offline_replay(self, prepared):
        cfg, models = prepared
        offline = run_prosthesis_control_experiment(cfg, duration=30.0, prepared=models)
        activations = offline["record"].activation

        sent = {"k": 0}

        def start(sock):
            sock.sendall(json.dumps(
                {"type": "activation", "value": float(activations[0])}).encode() + b"\n")

        def reply(sock, msg):
            # lock-step replay: send activation k when state k-1 arrives
            if msg.get("type") != "state":
                return
            sent["k"] += 1
            if sent["k"] < len(activations):
                sock.sendall(json.dumps(
                    {"type": "activation", "value": float(activations[sent["k"]])},
                ).encode() + b"\n")

        # mild pacing so each lock-step reply lands before the next tick
        result, _ = run_session(cfg, models, duration=30.0, pace=0.2,
                                on_connect=start, on_message=reply)
        live = result["report"]["metrics"]
        ref = offline["report"]["metrics"]
        for key in ("tracking_rmse_N", "targeting_rmse_N", "reaching_rmse_N"):
            assert live[key] == pytest.approx(ref[key], rel=0.10)

    def test_input_timeout_flagged(self, prepared):
        cfg, models = prepared

        def script(sock):
            sock.sendall(b'{"type":"activation","value":0.3}\n')

        result, _ = run_session(cfg, models, duration=6.0, pace=0.05, on_connect=script)
        assert result["report"]["input_timeout"] is True

    def test_no_timeout_with_steady_input(self, prepared):
        cfg, models = prepared

        def script(sock):
            sock.sendall(b'{"type":"activation","value":0.3}\n')

        result, _ = run_session(cfg, models, duration=6.0, pace=0.0, on_connect=script)
        assert result["report"]["input_timeout"] is False
