"""The 50 Hz online pipeline: EMG -> features -> force command -> tension -> plant."""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..controller import (
    AdmittanceState,
    ConditionerConfig,
    TensionCurve1D,
    condition_force,
    condition_tension,
    force_to_tension,
)
from ..dsp import NormalizationScale, RmsWindow, design_bandpass, design_notch_bank
from ..estimators import ClstmModel
from ..plant import ActuatorModel, EmgGeneratorStream, FingerPlant, LoadCellModel, SyntheticSubject
from .config import ExperimentConfig


@dataclass
class TrialRecord:
    """Time-aligned signals logged by one control-loop run."""

    t: np.ndarray
    target_N: np.ndarray
    command_N: np.ndarray
    applied_N: np.ndarray
    tension_cmd_N: np.ndarray
    tension_N: np.ndarray
    activation: np.ndarray
    position_mm: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray

    def __len__(self):
        return len(self.t)

    def save_csv(self, path) -> None:
        cols = [
            "t", "target_N", "command_N", "applied_N", "tension_cmd_N",
            "tension_N", "activation", "position_mm", "theta1", "theta2",
        ]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            for i in range(len(self)):
                writer.writerow([repr(float(getattr(self, c)[i])) for c in cols])

    def save_trajectory_csv(self, path) -> None:
        """Plant trajectory log: t,tension_N,force_N,position_mm,theta1,theta2."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "tension_N", "force_N", "position_mm", "theta1", "theta2"])
            for i in range(len(self)):
                writer.writerow([
                    repr(float(self.t[i])), repr(float(self.tension_N[i])),
                    repr(float(self.applied_N[i])), repr(float(self.position_mm[i])),
                    repr(float(self.theta1[i])), repr(float(self.theta2[i])),
                ])

    @classmethod
    def from_rows(cls, rows: list[dict]) -> "TrialRecord":
        return cls(**{
            name: np.array([row[name] for row in rows], dtype=float)
            for name in cls.__dataclass_fields__
        })


class FeatureFrontend:
    """Streaming EMG conditioning: bandpass + notch bank + windowed RMS."""

    def __init__(self, cfg: ExperimentConfig, scale: NormalizationScale):
        fs = cfg.sample_rate
        self.bandpass = design_bandpass(fs, 20.0, min(200.0, fs / 2 * 0.9), 4)
        self.notch = design_notch_bank(fs, 50.0, 30.0)
        self.bandpass.reset(2)
        self.notch.reset(2)
        self.window = RmsWindow(cfg.online_window, cfg.control_period, fs, 2)
        self.scale = scale

    def push(self, emg_block: np.ndarray) -> np.ndarray | None:
        """Process one tick of raw EMG; return a normalized feature or None."""
        filtered = self.notch.process_block(self.bandpass.process_block(emg_block))
        feature = None
        for rms in self.window.update_block(filtered):
            feature = self.scale.normalize(rms)
        return feature


class ProsthesisPipeline:
    """One tick = one control period: the full online chain against the plant.

    Causal by construction: every tick consumes only that tick's activation
    and internal state, so truncating future inputs cannot change the past.
    """

    def __init__(
        self,
        cfg: ExperimentConfig,
        subject: SyntheticSubject,
        scale: NormalizationScale,
        estimator,
        curve: TensionCurve1D,
        emg_seed: int = 0,
        plant_seed: int = 0,
        load_cell_seed: int = 0,
    ):
        self.cfg = cfg
        self.subject = subject
        self.estimator = estimator
        self.curve = curve
        self.frontend = FeatureFrontend(cfg, scale)
        self.emg = EmgGeneratorStream(subject, cfg.sample_rate, emg_seed)
        self.plant = FingerPlant(cfg.plant, seed=plant_seed)
        self.actuator = ActuatorModel()
        self.load_cell = LoadCellModel(sigma=cfg.load_cell_sigma, seed=load_cell_seed)
        self.admittance = AdmittanceState(
            period=cfg.control_period,
            velocity_limit=cfg.admittance_speed_limit / cfg.velocity_gain,
        )
        self.conditioner: ConditionerConfig = cfg.conditioner
        self.samples_per_tick = int(round(cfg.sample_rate * cfg.control_period))
        self.history: deque = deque(maxlen=cfg.sequence_length)
        self.tension_cmd_prev = 0.0
        self.tick_index = 0
        self.is_clstm = isinstance(estimator, ClstmModel)

    @property
    def time(self) -> float:
        return self.tick_index * self.cfg.control_period

    def estimate(self) -> float:
        if len(self.history) == 0:
            return 0.0
        if self.is_clstm:
            if len(self.history) < self.cfg.sequence_length:
                return 0.0
            return float(self.estimator.predict(np.array(self.history)))
        return float(np.atleast_1d(self.estimator.predict(self.history[-1]))[0])

    def tick(self, activation: float, target: float = 0.0) -> dict:
        cfg = self.cfg
        t = self.time
        emg_block = self.emg.generate(np.full(self.samples_per_tick, activation))
        feature = self.frontend.push(emg_block)
        if feature is not None:
            self.history.append(feature)

        estimate = np.clip(self.estimate(), 0.0, 1.0)
        force_raw = float(np.clip(estimate * cfg.force_scale, cfg.conditioner.force_min, cfg.conditioner.force_max))
        force_cmd = condition_force(force_raw, self.conditioner)
        tension_target = force_to_tension(self.curve, force_cmd)
        tension_cmd = condition_tension(tension_target, self.tension_cmd_prev, self.conditioner)
        self.tension_cmd_prev = tension_cmd

        tension_meas = self.load_cell.measure(self.plant.tension)
        velocity = self.admittance.step(tension_meas, tension_cmd)
        tension_true, force_applied, position = self.plant.step(
            self.actuator, -cfg.velocity_gain * velocity, cfg.control_period
        )
        self.tick_index += 1
        return {
            "t": t,
            "target_N": target,
            "command_N": force_cmd,
            "applied_N": force_applied,
            "tension_cmd_N": tension_cmd,
            "tension_N": tension_meas,
            "activation": activation,
            "position_mm": position,
            "theta1": self.plant.theta1,
            "theta2": self.plant.theta2,
        }


class ScriptedActivation:
    """Emulated human: tracks the target pattern through the subject's inverse
    force law, with a first-order reaction lag and seeded jitter."""

    def __init__(self, cfg: ExperimentConfig, subject: SyntheticSubject, pattern, seed: int = 0,
                 command_fraction: float | None = None):
        self.cfg = cfg
        self.subject = subject
        self.pattern = pattern
        self.rng = np.random.default_rng(seed)
        self.value = 0.0
        self.jitter = 0.0
        # online trials command a fraction of the fixed output range rather
        # than the subject's own maximum; scale targets accordingly
        self.command_fraction = command_fraction

    def __call__(self, t: float) -> float:
        level = float(self.pattern.at(t))
        if self.command_fraction is not None:
            level = level * self.command_fraction
        target = float(self.subject.inverse_force(level))
        dt = self.cfg.control_period
        beta = dt / max(self.cfg.reaction_lag, dt)
        self.value += beta * (target - self.value)
        # slow wander emulating imperfect effort regulation
        self.jitter += 0.1 * (-self.jitter + self.rng.normal(0.0, self.cfg.activation_jitter))
        return float(np.clip(self.value + self.jitter, 0.0, 1.0))


def run_loop(
    pipeline: ProsthesisPipeline,
    activation_source,
    pattern,
    duration: float,
) -> TrialRecord:
    """Drive the pipeline for `duration` seconds of simulated time.

    activation_source: callable t -> activation in [0, 1].
    """
    rows = []
    n_ticks = int(round(duration / pipeline.cfg.control_period))
    for _ in range(n_ticks):
        t = pipeline.time
        activation = float(activation_source(t))
        rows.append(pipeline.tick(activation, target=float(pattern.at(t))))
    return TrialRecord.from_rows(rows)
