"""Experiment configuration, JSON-backed."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from ..controller import ConditionerConfig
from ..plant import PlantConfig, SubjectConfig


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    n_subjects: int = 10
    sample_rate: float = 2000.0

    # protocol stage durations
    mvc_duration: float = 30.0
    pattern_duration: float = 250.0
    pattern_hold: float = 5.0

    # feature windows: long non-overlapping windows offline, short overlapping online
    offline_window: float = 0.5
    offline_hop: float = 0.5
    online_window: float = 0.2
    control_period: float = 0.02  # 50 Hz loop; online feature hop equals this

    # estimation
    estimator: str = "clstm"
    sequence_length: int = 30
    train_steps: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-2

    # online command scaling: estimator output 1.0 -> 8 N (0.6 -> 4.8 N)
    force_scale: float = 8.0

    # scripted subject behavior
    reaction_lag: float = 0.3  # s, first-order lag emulating human reaction
    activation_jitter: float = 0.02

    # admittance-to-actuator chain: virtual m/s -> actuator mm/s
    velocity_gain: float = 1000.0
    # anti-windup clamp on the admittance state, expressed as the actuator
    # speed it maps to; below the actuator's own 10 mm/s ceiling so the loop
    # slides to the setpoint in small tension increments
    admittance_speed_limit: float = 5.0  # mm/s

    # calibration sweep
    calibration_positions: int = 24
    calibration_depth_range: tuple[float, float] = (3.6, 4.4)
    calibration_depth_samples: int = 7
    calibration_force_sigma: float = 0.05  # N, fingertip sensor noise
    load_cell_sigma: float = 0.05  # N

    plant: PlantConfig = field(default_factory=PlantConfig)
    # experiment-population subject: stronger force nonlinearity, spectrally
    # concentrated EMG, and first-order activation-to-force dynamics
    subject: SubjectConfig = field(default_factory=lambda: SubjectConfig(
        gamma=2.4, emg_band=(25.0, 70.0), force_tau=0.4))
    conditioner: ConditionerConfig = field(default_factory=ConditionerConfig)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        doc = json.loads(text)
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        if "plant" in doc:
            doc["plant"] = PlantConfig(**doc["plant"])
        if "subject" in doc:
            subject = dict(doc["subject"])
            if "emg_band" in subject:
                subject["emg_band"] = tuple(subject["emg_band"])
            doc["subject"] = SubjectConfig(**subject)
        if "conditioner" in doc:
            doc["conditioner"] = ConditionerConfig(**doc["conditioner"])
        if "calibration_depth_range" in doc:
            doc["calibration_depth_range"] = tuple(doc["calibration_depth_range"])
        return cls(**doc)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_json(fh.read())


def save_config(path, cfg: ExperimentConfig) -> None:
    with open(path, "w") as fh:
        fh.write(cfg.to_json())
        fh.write("\n")
