"""Ordinary least squares baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset


class RankDeficientError(ValueError):
    """Design matrix does not have full column rank."""


@dataclass
class LinearModel:
    weights: np.ndarray  # (2,)
    intercept: float

    def predict(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        return features @ self.weights + self.intercept

    def to_dict(self) -> dict:
        return {
            "kind": "linear",
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearModel":
        return cls(np.asarray(doc["weights"], dtype=float), float(doc["intercept"]))


def fit_linear(train: Dataset) -> LinearModel:
    """OLS fit of force on the two RMS features plus an intercept."""
    if len(train) < 3:
        raise ValueError("need at least 3 samples")
    design = np.column_stack([train.features, np.ones(len(train))])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise RankDeficientError("feature matrix is rank-deficient")
    coef, *_ = np.linalg.lstsq(design, train.force, rcond=None)
    return LinearModel(weights=coef[:2], intercept=float(coef[2]))
