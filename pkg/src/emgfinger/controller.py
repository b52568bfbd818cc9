"""Admittance control, command conditioning, and the two-stage tension model."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdmittanceState:
    """Virtual mass-damper turning tension error into velocity.

    Sign convention: tension above the command drives a positive (tendon-
    releasing) velocity. velocity_limit, when set, clamps the persistent
    state as an anti-windup measure for saturated actuators.
    """

    mass: float = 1.0
    damping: float = 1.0
    period: float = 0.02
    velocity: float = 0.0
    velocity_limit: float | None = None

    def __post_init__(self):
        if self.mass <= 0 or self.damping < 0 or self.period <= 0:
            raise ValueError("invalid admittance parameters")

    def step(self, tension_measured: float, tension_cmd: float) -> float:
        v = (self.mass * self.velocity + self.period * (tension_measured - tension_cmd)) / (
            self.mass + self.damping * self.period
        )
        if self.velocity_limit is not None:
            v = float(np.clip(v, -self.velocity_limit, self.velocity_limit))
        self.velocity = v
        return v

    def reset(self) -> None:
        self.velocity = 0.0


def admittance_step(state: AdmittanceState, tension_measured: float, tension_cmd: float) -> float:
    return state.step(tension_measured, tension_cmd)


@dataclass(frozen=True)
class ConditionerConfig:
    tension_min: float = 0.0
    tension_max: float = 30.0
    slew_per_iteration: float = 2.0
    force_deadband: float = 1.0
    force_min: float = 0.0
    force_max: float = 8.0

    def __post_init__(self):
        if self.tension_min >= self.tension_max:
            raise ValueError("tension clamp low must be below high")
        if self.slew_per_iteration <= 0 or self.force_deadband < 0:
            raise ValueError("invalid conditioner config")


def condition_force(force_cmd_raw: float, cfg: ConditionerConfig) -> float:
    """Deadband: force commands strictly below the threshold drop to zero."""
    return 0.0 if force_cmd_raw < cfg.force_deadband else float(force_cmd_raw)


def condition_tension(tension_new: float, tension_prev: float, cfg: ConditionerConfig) -> float:
    """Clamp to the allowed range, then rate-limit against the previous command."""
    clamped = float(np.clip(tension_new, cfg.tension_min, cfg.tension_max))
    lo = tension_prev - cfg.slew_per_iteration
    hi = tension_prev + cfg.slew_per_iteration
    return float(np.clip(clamped, lo, hi))


class DegenerateSamplingError(ValueError):
    """Calibration samples do not span both force and position axes."""


@dataclass
class TensionSurface2D:
    """Polynomial surface T(F, p): tension from fingertip force and actuator position."""

    coeffs: np.ndarray  # (deg_force+1, deg_position+1), c[i, j] * F^i * p^j
    deg_force: int
    deg_position: int
    residual_rmse: float = 0.0

    def evaluate(self, force, position) -> np.ndarray:
        force = np.asarray(force, dtype=float)
        position = np.broadcast_to(np.asarray(position, dtype=float), force.shape)
        return np.polynomial.polynomial.polyval2d(force, position, self.coeffs)


def _surface_design(force, position, deg_force, deg_position):
    cols = []
    for i in range(deg_force + 1):
        for j in range(deg_position + 1):
            cols.append(force**i * position**j)
    return np.column_stack(cols)


def fit_surface(
    force: np.ndarray,
    position: np.ndarray,
    tension: np.ndarray,
    deg_force: int = 3,
    deg_position: int = 2,
) -> TensionSurface2D:
    """Least-squares polynomial surface through (F, p, T) calibration samples."""
    force = np.asarray(force, dtype=float)
    position = np.asarray(position, dtype=float)
    tension = np.asarray(tension, dtype=float)
    n_terms = (deg_force + 1) * (deg_position + 1)
    if len(force) < n_terms:
        raise ValueError(f"need at least {n_terms} samples")
    if np.ptp(force) == 0 or np.ptp(position) == 0:
        raise DegenerateSamplingError("samples must span both force and position axes")
    design = _surface_design(force, position, deg_force, deg_position)
    coef, *_ = np.linalg.lstsq(design, tension, rcond=None)
    resid = tension - design @ coef
    return TensionSurface2D(
        coeffs=coef.reshape(deg_force + 1, deg_position + 1),
        deg_force=deg_force,
        deg_position=deg_position,
        residual_rmse=float(np.sqrt(np.mean(resid**2))),
    )


def pava_non_decreasing(values: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators: least-squares non-decreasing fit to a sequence."""
    y = np.asarray(values, dtype=float).copy()
    n = len(y)
    weights = np.ones(n)
    # blocks as (value, weight) merged right-to-left on violations
    vals, wts, sizes = [], [], []
    for v in y:
        vals.append(v)
        wts.append(1.0)
        sizes.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, w2, s2 = vals.pop(), wts.pop(), sizes.pop()
            v1, w1, s1 = vals.pop(), wts.pop(), sizes.pop()
            w = w1 + w2
            vals.append((v1 * w1 + v2 * w2) / w)
            wts.append(w)
            sizes.append(s1 + s2)
    out = np.empty(n)
    pos = 0
    for v, s in zip(vals, sizes):
        out[pos : pos + s] = v
        pos += s
    return out


@dataclass
class TensionCurve1D:
    """Monotone piecewise-linear fingertip-force -> tendon-tension map.

    Zero-anchored: the first knot is (0 N, 0 N). Queries beyond the last knot
    extrapolate with the final segment slope.
    """

    force_knots: np.ndarray
    tension_values: np.ndarray

    def __post_init__(self):
        self.force_knots = np.asarray(self.force_knots, dtype=float)
        self.tension_values = np.asarray(self.tension_values, dtype=float)
        if self.force_knots[0] != 0.0:
            raise ValueError("force grid must start at 0 N")
        if np.any(np.diff(self.tension_values) < 0):
            raise ValueError("tension curve must be non-decreasing")

    def __call__(self, force):
        return force_to_tension(self, force)


def derive_curve_1d(
    surface: TensionSurface2D,
    positions: np.ndarray,
    force_grid: np.ndarray,
) -> TensionCurve1D:
    """Average the surface's constant-position curves into one monotone map.

    Pipeline: evaluate along the force grid at each position, average
    pointwise, subtract the value at F=0 (zero anchor), project onto
    non-decreasing sequences, clamp negatives to zero.
    """
    positions = np.asarray(positions, dtype=float)
    force_grid = np.asarray(force_grid, dtype=float)
    if positions.size == 0 or force_grid.size == 0:
        raise ValueError("positions and force grid must be non-empty")
    if force_grid[0] != 0.0:
        raise ValueError("force grid must start at 0 N")
    curves = np.array([surface.evaluate(force_grid, p) for p in positions])
    mean_curve = curves.mean(axis=0)
    anchored = mean_curve - mean_curve[0]
    monotone = pava_non_decreasing(anchored)
    return TensionCurve1D(force_grid, np.maximum(monotone, 0.0))


def force_to_tension(curve: TensionCurve1D, force: float) -> float:
    """Piecewise-linear interpolation with last-segment extrapolation."""
    if force < 0:
        raise ValueError("force must be non-negative")
    knots, values = curve.force_knots, curve.tension_values
    if force <= knots[-1]:
        return float(np.interp(force, knots, values))
    slope = (values[-1] - values[-2]) / (knots[-1] - knots[-2]) if len(knots) > 1 else 0.0
    return float(values[-1] + slope * (force - knots[-1]))


def tension_from_curve_inverse(curve: TensionCurve1D, tension: float) -> float:
    """Invert the monotone curve: tension -> fingertip force estimate.

    Flat segments map to their left edge; tension beyond the last knot
    extrapolates with the final rising segment.
    """
    values, knots = curve.tension_values, curve.force_knots
    if tension <= values[0]:
        return float(knots[0])
    if tension >= values[-1]:
        rising = np.nonzero(np.diff(values) > 0)[0]
        if rising.size == 0:
            return float(knots[-1])
        i = rising[-1]
        slope = (knots[i + 1] - knots[i]) / (values[i + 1] - values[i])
        return float(knots[-1] + slope * (tension - values[-1]))
    # keep first occurrence of each tension level so interp lands on left edges
    keep = np.concatenate([[True], np.diff(values) > 0])
    return float(np.interp(tension, values[keep], knots[keep]))


def pdm_generate(velocity_cmd: float, max_velocity: float, slots: int) -> tuple[np.ndarray, int]:
    """First-order sigma-delta pulse train for an actuator velocity command.

    Returns (bits over `slots` slots, direction in {-1, 0, +1}). Pulse density
    equals |velocity_cmd| / max_velocity.
    """
    if max_velocity <= 0:
        raise ValueError("max_velocity must be positive")
    if abs(velocity_cmd) > max_velocity * (1 + 1e-12):
        raise ValueError("velocity command exceeds actuator maximum")
    density = min(abs(velocity_cmd) / max_velocity, 1.0)
    bits = np.zeros(slots, dtype=np.uint8)
    acc = 0.0
    for i in range(slots):
        acc += density
        if acc >= 1.0 - 1e-12:
            bits[i] = 1
            acc -= 1.0
    direction = 0 if velocity_cmd == 0 else (1 if velocity_cmd > 0 else -1)
    return bits, direction


def save_tension_model(path, surface: TensionSurface2D, curve: TensionCurve1D) -> None:
    doc = {
        "surface": {
            "coeffs": surface.coeffs.tolist(),
            "deg_force": surface.deg_force,
            "deg_position": surface.deg_position,
            "residual_rmse": surface.residual_rmse,
        },
        "curve": {
            "force_knots": curve.force_knots.tolist(),
            "tension_values": curve.tension_values.tolist(),
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_tension_model(path) -> tuple[TensionSurface2D, TensionCurve1D]:
    with open(path) as fh:
        doc = json.load(fh)
    s = doc["surface"]
    surface = TensionSurface2D(
        np.asarray(s["coeffs"], dtype=float),
        int(s["deg_force"]),
        int(s["deg_position"]),
        float(s["residual_rmse"]),
    )
    c = doc["curve"]
    curve = TensionCurve1D(np.asarray(c["force_knots"]), np.asarray(c["tension_values"]))
    return surface, curve


def load_calibration_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a `force_N,position_mm,tension_N` sweep file."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["force_N", "position_mm", "tension_N"]:
            raise ValueError(f"unexpected calibration CSV header: {header}")
        rows = np.array([[float(v) for v in r] for r in reader], dtype=float)
    rows = rows.reshape(-1, 3)
    return rows[:, 0], rows[:, 1], rows[:, 2]


def save_calibration_csv(path, force, position, tension) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["force_N", "position_mm", "tension_N"])
        for f, p, t in zip(force, position, tension):
            writer.writerow([repr(float(f)), repr(float(p)), repr(float(t))])
