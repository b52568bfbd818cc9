"""Simulated tendon finger, actuator, load cell, and synthetic subject.

None of the physical constants here come from published data for the real
device; they are documented defaults chosen so the macroscopic numbers line
up (full 30 N tendon tension yields about 5 N at the fingertip, actuator
travel covers the tension range). Everything is configurable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.signal import lfilter

from .dsp import FilterChain, design_bandpass


@dataclass(frozen=True)
class PlantConfig:
    # tendon routing and joint springs (quasi-static, weak return springs)
    moment_arm_proximal: float = 8.0  # mm
    moment_arm_distal: float = 8.0  # mm
    spring_proximal: float = 10.0  # N*mm/rad
    spring_distal: float = 10.0  # N*mm/rad
    tendon_stiffness: float = 2.2  # N/mm, series elasticity once contact locks the pose
    # virtual force sensor
    contact: bool = True
    contact_depth: float = 4.0  # mm of free tendon excursion before fingertip contact
    pose_gain_ref: float = 0.167  # fingertip N per tendon N at the reference pose
    pose_gain_slope: float = 1.2  # relative gain change per rad of distal flexion
    pose_ref_angle: float = 0.25  # rad
    sigma_tension: float = 0.0  # N, process noise on true tension

    @property
    def free_compliance(self) -> float:
        """mm of excursion per N while both joints flex freely."""
        return (
            self.moment_arm_proximal**2 / self.spring_proximal
            + self.moment_arm_distal**2 / self.spring_distal
        )


@dataclass
class ActuatorModel:
    """Linear actuator: clamped travel and speed, velocity integrated per step."""

    travel: float = 19.0  # mm
    max_speed: float = 10.0  # mm/s
    position: float = 0.0  # mm
    commanded_velocity: float = 0.0  # mm/s

    def step(self, velocity_cmd: float, dt: float) -> float:
        self.commanded_velocity = float(np.clip(velocity_cmd, -self.max_speed, self.max_speed))
        self.position = float(np.clip(self.position + self.commanded_velocity * dt, 0.0, self.travel))
        return self.position


class FingerPlant:
    """Two-joint underactuated finger solved quasi-statically from actuator position."""

    def __init__(self, config: PlantConfig = PlantConfig(), seed: int = 0):
        self.config = config
        self.rng = np.random.default_rng(seed)
        self.theta1 = 0.0
        self.theta2 = 0.0
        self.tension = 0.0
        self.fingertip_force = 0.0

    def pose_gain(self, theta2: float) -> float:
        c = self.config
        return max(0.0, c.pose_gain_ref * (1.0 + c.pose_gain_slope * (theta2 - c.pose_ref_angle)))

    def contact_force(self, tension: float, theta2: float) -> float:
        """Contact law: fingertip force proportional to tension at fixed pose."""
        return self.pose_gain(theta2) * tension

    def solve(self, position: float) -> tuple[float, float, float]:
        """Quasi-static (tension, fingertip_force) and joint angles at a position."""
        c = self.config
        r1, r2 = c.moment_arm_proximal, c.moment_arm_distal
        k1, k2 = c.spring_proximal, c.spring_distal
        compliance_total = c.free_compliance + 1.0 / c.tendon_stiffness
        if position <= 0.0:
            tension, theta1, theta2, force = 0.0, 0.0, 0.0, 0.0
        elif not c.contact:
            tension = position / compliance_total
            theta1, theta2 = tension * r1 / k1, tension * r2 / k2
            force = 0.0
        else:
            tension_contact = c.contact_depth / c.free_compliance
            excursion_contact = c.contact_depth + tension_contact / c.tendon_stiffness
            if position <= excursion_contact:
                tension = position / compliance_total
                theta1, theta2 = tension * r1 / k1, tension * r2 / k2
                force = 0.0
            else:
                # sensor arrests the pose; extra travel stretches the tendon
                tension = tension_contact + (position - excursion_contact) * c.tendon_stiffness
                theta1 = tension_contact * r1 / k1
                theta2 = tension_contact * r2 / k2
                force = self.contact_force(tension, theta2)
        self.theta1, self.theta2 = theta1, theta2
        self.tension = tension
        self.fingertip_force = force
        return tension, force, position

    def step(self, actuator: ActuatorModel, velocity_cmd: float, dt: float) -> tuple[float, float, float]:
        if dt <= 0:
            raise ValueError("dt must be positive")
        position = actuator.step(velocity_cmd, dt)
        tension, force, _ = self.solve(position)
        if self.config.sigma_tension > 0:
            tension = max(0.0, tension + self.rng.normal(0.0, self.config.sigma_tension))
            self.tension = tension
        return tension, force, position


def plant_step(
    plant: FingerPlant, actuator: ActuatorModel, velocity_cmd: float, dt: float
) -> tuple[float, float, float]:
    return plant.step(actuator, velocity_cmd, dt)


@dataclass
class LoadCellModel:
    """Tension measurement: additive Gaussian noise, optional 12-bit quantization."""

    sigma: float = 0.05  # N
    quantize: bool = False
    full_scale: float = 30.0  # N
    seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def measure(self, true_tension: float) -> float:
        value = true_tension
        if self.sigma > 0:
            value += self._rng.normal(0.0, self.sigma)
        value = max(0.0, value)
        if self.quantize:
            value = round(value / self.full_scale * 4095) * self.full_scale / 4095
        return float(value)


@dataclass(frozen=True)
class SubjectConfig:
    f_max: float = 8.0  # N, maximum voluntary fingertip force
    gamma: float = 1.8  # activation -> force nonlinearity
    cocontraction: float = 0.35  # extensor RMS relative to flexor
    emg_noise_floor: float = 0.05  # V, resting EMG amplitude
    emg_scale: float = 1.0  # V at full activation
    activation_exponent: float = 0.9  # EMG amplitude vs activation
    interference_amp: float = 0.02  # V, 50 Hz power-line line
    # slow multiplicative amplitude wander per channel (motor-unit
    # recruitment variability); sigma 0 disables it
    amp_wander_sigma: float = 0.0
    amp_wander_tau: float = 0.7  # s
    # spectral concentration of the myoelectric noise process
    emg_band: tuple[float, float] = (20.0, 200.0)  # Hz
    # first-order activation-to-force dynamics (electromechanical delay);
    # 0 makes force follow excitation instantaneously
    force_tau: float = 0.0  # s


class SyntheticSubject:
    """Turns muscle activation into ground-truth force and raw two-channel EMG."""

    def __init__(self, config: SubjectConfig = SubjectConfig()):
        self.config = config

    def force(self, activation) -> np.ndarray:
        a = np.asarray(activation, dtype=float)
        if np.any(a < 0) or np.any(a > 1):
            raise ValueError("activation must lie in [0, 1]")
        g = self.config.gamma
        return self.config.f_max * (np.exp(g * a) - 1.0) / (np.exp(g) - 1.0)

    def inverse_force(self, force) -> np.ndarray:
        f = np.clip(np.asarray(force, dtype=float) / self.config.f_max, 0.0, 1.0)
        g = self.config.gamma
        return np.log1p(f * (np.exp(g) - 1.0)) / g

    def amplitude(self, activation) -> np.ndarray:
        a = np.asarray(activation, dtype=float)
        return self.config.emg_noise_floor + self.config.emg_scale * a**self.config.activation_exponent

    def activation_dynamics(self, activation: np.ndarray, sample_rate: float) -> np.ndarray:
        """Low-pass the excitation series with the force time constant.

        EMG reflects excitation immediately; contractile force builds with a
        first-order lag. With force_tau = 0 this is the identity.
        """
        a = np.asarray(activation, dtype=float)
        tau = self.config.force_tau
        if tau <= 0:
            return a
        beta = 1.0 - np.exp(-1.0 / (tau * sample_rate))
        zi = np.array([(1.0 - beta) * a[0]]) if len(a) else np.zeros(1)
        out, _ = lfilter([beta], [1.0, beta - 1.0], a, zi=zi)
        return out


def subject_force(subject: SyntheticSubject, activation):
    return subject.force(activation)


class EmgGeneratorStream:
    """Streaming EMG source: band-limited noise shaped by activation plus 50 Hz hum.

    Block-partitioning invariant: generating the same activation series in any
    block sizes consumes the rng identically and carries filter state, so
    streaming output matches one-shot batch output bit for bit.
    """

    def __init__(self, subject: SyntheticSubject, sample_rate: float, seed: int = 0):
        self.subject = subject
        self.sample_rate = sample_rate
        self.rng = np.random.default_rng(seed)
        low, high = subject.config.emg_band
        self.chain = design_bandpass(sample_rate, low, min(high, sample_rate / 2 * 0.9), 4)
        self.chain.reset(2)
        self.gain = _filtered_noise_rms(self.chain)
        self.phases = self.rng.uniform(0, 2 * np.pi, size=2)
        self.n_emitted = 0
        # independent rng for the amplitude wander so adding it leaves the
        # main noise stream (and the block-partitioning invariant) untouched
        self.wander_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        self.wander_zi = np.zeros((1, 2))
        cfg = subject.config
        self._wander_pole = np.exp(-1.0 / (cfg.amp_wander_tau * sample_rate))

    def generate(self, activation_block: np.ndarray) -> np.ndarray:
        a = np.asarray(activation_block, dtype=float)
        if np.any(a < 0) or np.any(a > 1):
            raise ValueError("activation must lie in [0, 1]")
        n = len(a)
        white = self.rng.standard_normal((n, 2))
        shaped = self.chain.process_block(white) / self.gain
        amp = self.subject.amplitude(a)
        sigma = self.subject.config.amp_wander_sigma
        if sigma > 0:
            rho = self._wander_pole
            drive = self.wander_rng.standard_normal((n, 2)) * sigma * np.sqrt(1.0 - rho**2)
            wander, self.wander_zi = lfilter(
                [1.0], [1.0, -rho], drive, axis=0, zi=self.wander_zi
            )
            amp = np.maximum(0.0, amp[:, None] * (1.0 + wander))
        else:
            amp = np.broadcast_to(amp[:, None], (n, 2))
        t = (self.n_emitted + np.arange(n)) / self.sample_rate
        hum = self.subject.config.interference_amp * np.sin(
            2 * np.pi * 50.0 * t[:, None] + self.phases[None, :]
        )
        out = np.empty((n, 2))
        out[:, 0] = amp[:, 0] * shaped[:, 0]
        out[:, 1] = self.subject.config.cocontraction * amp[:, 1] * shaped[:, 1]
        out += hum
        self.n_emitted += n
        return out


def _filtered_noise_rms(chain: FilterChain, n: int = 8192) -> float:
    """RMS gain of the chain for unit-variance white noise (impulse energy)."""
    probe = FilterChain(chain.sample_rate, chain.sos.copy())
    probe.reset(1)
    impulse = np.zeros((n, 1))
    impulse[0, 0] = 1.0
    h = probe.process_block(impulse)[:, 0]
    return float(np.sqrt(np.sum(h**2)))


def emg_generate(
    subject: SyntheticSubject,
    activation: np.ndarray,
    sample_rate: float,
    seed: int = 0,
) -> np.ndarray:
    """One-shot EMG for a full activation series; equals the streamed output."""
    return EmgGeneratorStream(subject, sample_rate, seed).generate(activation)


@dataclass(frozen=True)
class ForcePattern:
    """Piecewise-constant target force: seeded level order, fixed hold time."""

    levels: np.ndarray  # N, one entry per segment
    hold: float  # s
    duration: float  # s

    def at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        idx = np.clip((t / self.hold).astype(int), 0, len(self.levels) - 1)
        return self.levels[idx]

    def series(self, rate: float) -> tuple[np.ndarray, np.ndarray]:
        t = np.arange(int(round(self.duration * rate))) / rate
        return t, self.at(t)


PATTERN_FRACTIONS = (0.25, 0.50, 0.60)


def pattern_generate(
    max_force: float, duration: float = 250.0, hold: float = 5.0, seed: int = 0
) -> ForcePattern:
    """Pseudo-random sequence over {25%, 50%, 60%} of max force; neighbors differ."""
    if not duration > hold > 0:
        raise ValueError("need duration > hold > 0")
    rng = np.random.default_rng(seed)
    n_segments = int(round(duration / hold))
    choices = np.asarray(PATTERN_FRACTIONS) * max_force
    levels = np.empty(n_segments)
    prev = -1
    for i in range(n_segments):
        options = [j for j in range(len(choices)) if j != prev]
        prev = options[rng.integers(0, len(options))]
        levels[i] = choices[prev]
    return ForcePattern(levels=levels, hold=hold, duration=duration)


def save_plant_config(path, plant: PlantConfig, subject: SubjectConfig) -> None:
    with open(path, "w") as fh:
        json.dump({"plant": asdict(plant), "subject": asdict(subject)}, fh, sort_keys=True)
        fh.write("\n")


def load_plant_config(path) -> tuple[PlantConfig, SubjectConfig]:
    with open(path) as fh:
        doc = json.load(fh)
    subject_doc = dict(doc["subject"])
    if "emg_band" in subject_doc:
        subject_doc["emg_band"] = tuple(subject_doc["emg_band"])
    return PlantConfig(**doc["plant"]), SubjectConfig(**subject_doc)
