"""Experiment protocols: offline estimator comparison, tension-model
calibration, and the closed-loop control run, plus their metric reports."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as sig

from ..controller import (
    TensionCurve1D,
    TensionSurface2D,
    derive_curve_1d,
    fit_surface,
    tension_from_curve_inverse,
)
from ..dsp import NormalizationScale, extract_features
from ..estimators import (
    Dataset,
    TrainConfig,
    fit_bagged_trees,
    fit_linear,
    make_sequences,
    r_squared,
    rmse,
    train_clstm,
)
from ..plant import (
    FingerPlant,
    LoadCellModel,
    SubjectConfig,
    SyntheticSubject,
    emg_generate,
    pattern_generate,
)
from .config import ExperimentConfig
from .loop import ProsthesisPipeline, ScriptedActivation, TrialRecord, run_loop

REPORT_VERSION = 1


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def save_report(path, report: dict) -> None:
    doc = dict(report)
    doc["report_version"] = REPORT_VERSION
    with open(path, "w") as fh:
        json.dump(_jsonify(doc), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def compute_metrics(record: TrialRecord) -> dict:
    """The three controllability RMSEs plus basic summary statistics."""
    if len(record) == 0:
        raise ValueError("empty record")
    return {
        "tracking_rmse_N": rmse(record.command_N, record.applied_N),
        "targeting_rmse_N": rmse(record.target_N, record.command_N),
        "reaching_rmse_N": rmse(record.target_N, record.applied_N),
        "duration_s": float(record.t[-1] - record.t[0] + np.median(np.diff(record.t))) if len(record) > 1 else 0.0,
        "mean_command_N": float(np.mean(record.command_N)),
        "mean_applied_N": float(np.mean(record.applied_N)),
        "max_tension_N": float(np.max(record.tension_N)),
    }


# ---- subject population ----


def make_subject(cfg: ExperimentConfig, subject_index: int) -> SyntheticSubject:
    """Per-subject physiology drawn around the configured defaults."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 101, subject_index]))
    base = cfg.subject
    return SyntheticSubject(replace(
        base,
        f_max=float(rng.uniform(6.0, 12.0)),
        gamma=float(base.gamma * rng.uniform(0.85, 1.15)),
        cocontraction=float(base.cocontraction * rng.uniform(0.8, 1.2)),
    ))


def _seed(cfg: ExperimentConfig, *key: int) -> int:
    return int(np.random.SeedSequence([cfg.seed, *key]).generate_state(1)[0])


def _lagged_activation(cfg: ExperimentConfig, subject, pattern, seed: int, n: int) -> np.ndarray:
    """Activation series at the EMG rate: lagged pattern tracking plus jitter."""
    t = np.arange(n) / cfg.sample_rate
    target = subject.inverse_force(pattern.at(t))
    beta = 1.0 / (cfg.reaction_lag * cfg.sample_rate)
    lagged = sig.lfilter([beta], [1.0, beta - 1.0], target)
    rng = np.random.default_rng(seed)
    # slow effort wander: ~1 Hz first-order noise scaled to the jitter std
    pole = np.exp(-2.0 * np.pi * 1.0 / cfg.sample_rate)
    gain = np.sqrt((1.0 + pole) / (1.0 - pole))
    white = rng.normal(0.0, cfg.activation_jitter * gain, n)
    jitter = sig.lfilter([1.0 - pole], [1.0, -pole], white)
    return np.clip(lagged + jitter, 0.0, 1.0)


def _mvc_stage(cfg: ExperimentConfig, subject, subject_index: int) -> NormalizationScale:
    """Maximum-voluntary-contraction stage: ramp to full effort, record maxima."""
    n = int(cfg.mvc_duration * cfg.sample_rate)
    t = np.arange(n) / cfg.sample_rate
    ramp = np.clip(t / 5.0, 0.0, 1.0)
    emg = emg_generate(subject, ramp, cfg.sample_rate, _seed(cfg, 1, subject_index))
    _, feats = extract_features(emg, cfg.sample_rate, cfg.offline_window, cfg.offline_hop)
    force_max = float(np.max(subject.force(ramp)))
    return NormalizationScale(rms_max=np.max(feats, axis=0), force_max=force_max)


def _pattern_trial(
    cfg: ExperimentConfig,
    subject: SyntheticSubject,
    scale: NormalizationScale,
    subject_index: int,
    trial_index: int,
    window: float,
    hop: float,
) -> Dataset:
    """One force-pattern-following trial turned into a feature/force dataset."""
    pattern = pattern_generate(
        scale.force_max, cfg.pattern_duration, cfg.pattern_hold,
        _seed(cfg, 2, subject_index, trial_index),
    )
    n = int(cfg.pattern_duration * cfg.sample_rate)
    activation = _lagged_activation(
        cfg, subject, pattern, _seed(cfg, 3, subject_index, trial_index), n
    )
    emg = emg_generate(subject, activation, cfg.sample_rate, _seed(cfg, 4, subject_index, trial_index))
    times, feats = extract_features(emg, cfg.sample_rate, window, hop)
    feats_norm = scale.normalize(feats)
    # label each window with the mean force over its span, matching the
    # averaging the RMS feature applies to the EMG
    force = subject.force(subject.activation_dynamics(activation, cfg.sample_rate))
    csum = np.concatenate([[0.0], np.cumsum(force)])
    ends = (times * cfg.sample_rate).round().astype(int)
    span = int(round(window * cfg.sample_rate))
    force_norm = scale.normalize_force((csum[ends] - csum[ends - span]) / span)
    return Dataset(times, feats_norm, force_norm,
                   subject_id=f"s{subject_index}", trial_id=f"trial{trial_index}")


def _fit_all(cfg: ExperimentConfig, train: Dataset, subject_index: int) -> dict:
    seed = _seed(cfg, 5, subject_index)
    train_cfg = TrainConfig(
        max_steps=cfg.train_steps, batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate, seed=seed,
        sequence_length=cfg.sequence_length,
    )
    return {
        "linear": fit_linear(train),
        "random_forest": fit_bagged_trees(train, "random_forest", seed=seed),
        "gradient_boosting": fit_bagged_trees(train, "gradient_boosting", seed=seed),
        "clstm": train_clstm(train, train_cfg),
    }


def evaluate_model(name: str, model, dataset: Dataset, sequence_length: int) -> dict:
    if name == "clstm":
        X, y = make_sequences(dataset, sequence_length)
        pred = np.atleast_1d(model.predict(X))
    else:
        y = dataset.force
        pred = np.atleast_1d(model.predict(dataset.features))
    return {"r2": r_squared(y, pred), "rmse": rmse(y, pred)}


def run_force_estimation_experiment(cfg: ExperimentConfig) -> dict:
    """Offline protocol: per subject, MVC stage + two trials; train all four
    estimator kinds on trial 1 and score them on trial 2."""
    per_subject = []
    models_by_subject = []
    for s in range(cfg.n_subjects):
        subject = make_subject(cfg, s)
        scale = _mvc_stage(cfg, subject, s)
        train = _pattern_trial(cfg, subject, scale, s, 0, cfg.offline_window, cfg.offline_hop)
        test = _pattern_trial(cfg, subject, scale, s, 1, cfg.offline_window, cfg.offline_hop)
        models = _fit_all(cfg, train, s)
        entry = {"subject": s, "f_max_N": subject.config.f_max, "models": {}}
        for name, model in models.items():
            entry["models"][name] = {
                "train": evaluate_model(name, model, train, cfg.sequence_length),
                "test": evaluate_model(name, model, test, cfg.sequence_length),
            }
        per_subject.append(entry)
        models_by_subject.append((models, scale, train, test))

    summary = {}
    for name in ("linear", "random_forest", "gradient_boosting", "clstm"):
        test_r2 = [e["models"][name]["test"]["r2"] for e in per_subject]
        train_r2 = [e["models"][name]["train"]["r2"] for e in per_subject]
        summary[name] = {
            "mean_train_r2": float(np.mean(train_r2)),
            "mean_test_r2": float(np.mean(test_r2)),
            "mean_test_rmse": float(np.mean(
                [e["models"][name]["test"]["rmse"] for e in per_subject]
            )),
            "generalization_drop": float(np.mean(train_r2) - np.mean(test_r2)),
            "any_negative_test_r2": bool(np.any(np.array(test_r2) < 0)),
        }
    report = {
        "kind": "force_estimation",
        "seed": cfg.seed,
        "n_subjects": cfg.n_subjects,
        "per_subject": per_subject,
        "summary": summary,
        "random_forest_flagged": summary["random_forest"]["any_negative_test_r2"],
    }
    return {"report": report, "artifacts": models_by_subject}


# ---- tension model calibration ----


def run_tension_calibration(cfg: ExperimentConfig, noise_free: bool = False) -> dict:
    """Sweep actuator position (and arm-configuration scatter) against the
    plant, fit the 2-D surface, reduce it to the monotone 1-D curve, and score
    the round-trip force prediction in the pressing regime."""
    rng = np.random.default_rng(_seed(cfg, 6))
    cell = LoadCellModel(sigma=0.0 if noise_free else cfg.load_cell_sigma, seed=_seed(cfg, 7))
    lo, hi = cfg.calibration_depth_range
    depths = np.linspace(lo, hi, cfg.calibration_depth_samples)
    f_samples, p_samples, t_samples = [], [], []
    for depth in depths:
        plant = FingerPlant(replace(cfg.plant, contact=True, contact_depth=float(depth)))
        start = depth * (1.0 + 1.0 / (cfg.plant.tendon_stiffness * cfg.plant.free_compliance)) + 0.3
        for pos in np.linspace(start, 19.0, cfg.calibration_positions):
            tension, force, _ = plant.solve(float(pos))
            if not noise_free:
                force += rng.normal(0.0, cfg.calibration_force_sigma)
            f_samples.append(max(0.0, force))
            # the surface's position axis is the fingertip placement for this
            # press series, not the actuator travel within it
            p_samples.append(depth)
            t_samples.append(cell.measure(tension))
    force = np.array(f_samples)
    position = np.array(p_samples)
    tension = np.array(t_samples)

    surface = fit_surface(force, position, tension, deg_force=3, deg_position=2)
    grid = np.linspace(0.0, cfg.conditioner.force_max, 33)
    curve = derive_curve_1d(surface, np.unique(position), grid)

    estimated = np.array([tension_from_curve_inverse(curve, t) for t in tension])
    metrics = {
        "r_squared": r_squared(force, estimated),
        "rmse_N": rmse(force, estimated),
        "surface_residual_rmse_N": surface.residual_rmse,
        "n_samples": int(len(force)),
    }
    report = {"kind": "tension_calibration", "seed": cfg.seed,
              "noise_free": noise_free, "metrics": metrics}
    return {
        "surface": surface, "curve": curve, "report": report,
        "samples": (force, position, tension),
    }


# ---- closed-loop control experiment ----


def train_control_estimator(cfg: ExperimentConfig, subject: SyntheticSubject, subject_index: int = 0):
    """Train the online estimator on a trial processed with the online
    windowing (short window, hop = control period), so training and control
    see the same feature statistics."""
    scale = _mvc_stage(cfg, subject, subject_index)
    train = _pattern_trial(
        cfg, subject, scale, subject_index, 2, cfg.online_window, cfg.control_period
    )
    seed = _seed(cfg, 8, subject_index)
    if cfg.estimator == "linear":
        model = fit_linear(train)
    elif cfg.estimator in ("random_forest", "gradient_boosting"):
        model = fit_bagged_trees(train, cfg.estimator, seed=seed)
    elif cfg.estimator == "clstm":
        model = train_clstm(train, TrainConfig(
            max_steps=cfg.train_steps, batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate, seed=seed,
            sequence_length=cfg.sequence_length,
        ))
    else:
        raise ValueError(f"unknown estimator {cfg.estimator!r}")
    return model, scale, train


def build_pipeline(
    cfg: ExperimentConfig,
    subject: SyntheticSubject,
    scale: NormalizationScale,
    estimator,
    curve: TensionCurve1D,
    subject_index: int = 0,
) -> ProsthesisPipeline:
    return ProsthesisPipeline(
        cfg, subject, scale, estimator, curve,
        emg_seed=_seed(cfg, 9, subject_index),
        plant_seed=_seed(cfg, 10, subject_index),
        load_cell_seed=_seed(cfg, 11, subject_index),
    )


def run_prosthesis_control_experiment(
    cfg: ExperimentConfig,
    activation_source: str | np.ndarray = "scripted",
    subject_index: int = 0,
    duration: float | None = None,
    prepared: tuple | None = None,
) -> dict:
    """Closed-loop run: activation -> EMG -> features -> estimator -> force
    command -> tension command -> admittance -> plant, at 50 Hz.

    activation_source: "scripted" for the emulated subject, or an array of
    per-tick activation values to replay.
    """
    duration = duration if duration is not None else cfg.pattern_duration
    subject = make_subject(cfg, subject_index)
    if prepared is None:
        estimator, scale, _ = train_control_estimator(cfg, subject, subject_index)
        curve = run_tension_calibration(cfg)["curve"]
    else:
        estimator, scale, curve = prepared
    pattern = pattern_generate(
        cfg.force_scale, duration, cfg.pattern_hold, _seed(cfg, 12, subject_index)
    )
    pipeline = build_pipeline(cfg, subject, scale, estimator, curve, subject_index)

    if isinstance(activation_source, str) and activation_source == "scripted":
        source = ScriptedActivation(
            cfg, subject, pattern, _seed(cfg, 13, subject_index),
            command_fraction=scale.force_max / cfg.force_scale,
        )
    else:
        values = np.asarray(activation_source, dtype=float)
        period = cfg.control_period

        def source(t, _values=values, _period=period):
            idx = min(int(round(t / _period)), len(_values) - 1)
            return _values[idx]

    record = run_loop(pipeline, source, pattern, duration)
    report = {
        "kind": "prosthesis_control",
        "seed": cfg.seed,
        "subject": subject_index,
        "estimator": cfg.estimator,
        "metrics": compute_metrics(record),
    }
    return {"record": record, "report": report,
            "prepared": (estimator, scale, curve), "pattern": pattern}


def run_tension_step_response(
    cfg: ExperimentConfig,
    steps: list[tuple[float, float]] = ((0.0, 10.0), (4.0, 20.0), (8.0, 5.0)),
    duration: float = 12.0,
) -> TrialRecord:
    """Inner-loop check: drive tension commands directly through the
    admittance controller against the plant (no estimator in the loop)."""
    from ..controller import condition_tension

    plant = FingerPlant(cfg.plant, seed=_seed(cfg, 14))
    from ..plant import ActuatorModel
    actuator = ActuatorModel()
    cell = LoadCellModel(sigma=cfg.load_cell_sigma, seed=_seed(cfg, 15))
    from ..controller import AdmittanceState
    admittance = AdmittanceState(
        period=cfg.control_period,
        velocity_limit=cfg.admittance_speed_limit / cfg.velocity_gain,
    )
    rows = []
    prev_cmd = 0.0
    n_ticks = int(round(duration / cfg.control_period))
    for k in range(n_ticks):
        t = k * cfg.control_period
        target = 0.0
        for start, level in steps:
            if t >= start:
                target = level
        cmd = condition_tension(target, prev_cmd, cfg.conditioner)
        prev_cmd = cmd
        meas = cell.measure(plant.tension)
        v = admittance.step(meas, cmd)
        tension, force, position = plant.step(actuator, -cfg.velocity_gain * v, cfg.control_period)
        rows.append({
            "t": t, "target_N": target, "command_N": 0.0, "applied_N": force,
            "tension_cmd_N": cmd, "tension_N": tension, "activation": 0.0,
            "position_mm": position, "theta1": plant.theta1, "theta2": plant.theta2,
        })
    return TrialRecord.from_rows(rows)
