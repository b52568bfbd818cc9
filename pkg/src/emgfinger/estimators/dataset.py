"""Feature/force datasets shared by all estimators."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Dataset:
    """Time-ordered (feature, force) pairs for one subject and trial.

    features: (n, 2) normalized RMS, columns flexor/extensor.
    force: (n,) normalized fingertip force at each window's trailing edge.
    """

    t: np.ndarray
    features: np.ndarray
    force: np.ndarray
    subject_id: str = "s0"
    trial_id: str = "train"

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.features = np.asarray(self.features, dtype=float).reshape(len(self.t), -1)
        self.force = np.asarray(self.force, dtype=float)
        if not (len(self.t) == len(self.features) == len(self.force)):
            raise ValueError("dataset columns must have equal length")
        if len(self.t) > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("dataset must be time-ordered")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.force))):
            raise ValueError("dataset contains non-finite values")

    def __len__(self) -> int:
        return len(self.t)

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "flexor_rms", "extensor_rms", "force_norm"])
            for ti, (f, e), y in zip(self.t, self.features, self.force):
                writer.writerow([repr(float(ti)), repr(float(f)), repr(float(e)), repr(float(y))])

    @classmethod
    def load_csv(cls, path, subject_id: str = "s0", trial_id: str = "train") -> "Dataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["t", "flexor_rms", "extensor_rms", "force_norm"]:
                raise ValueError(f"unexpected dataset CSV header: {header}")
            rows = np.array([[float(v) for v in r] for r in reader], dtype=float)
        rows = rows.reshape(-1, 4)
        return cls(rows[:, 0], rows[:, 1:3], rows[:, 3], subject_id, trial_id)


def make_sequences(dataset: Dataset, length: int) -> tuple[np.ndarray, np.ndarray]:
    """Slide a window of `length` timesteps over the features.

    Returns (X (m, length, 2), y (m,)) where y is the force at each window's
    trailing edge.
    """
    n = len(dataset)
    if n < length:
        raise ValueError(f"dataset too short ({n}) for sequence length {length}")
    idx = np.arange(length)[None, :] + np.arange(n - length + 1)[:, None]
    return dataset.features[idx], dataset.force[length - 1 :]


@dataclass(frozen=True)
class TrainConfig:
    """Training schedule for the recurrent network; seed fixes all randomness."""

    epochs: int = 1
    max_steps: int = 200
    batch_size: int = 16
    learning_rate: float = 1e-3
    seed: int = 0
    sequence_length: int = 30
    grad_clip: float = 5.0  # global gradient norm ceiling per step

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
