"""Regression scores used to rank the force estimators."""

from __future__ import annotations

import numpy as np


def rmse(actual: np.ndarray, predicted: np.ndarray) -> float:
    """Root mean squared error; same units as the inputs."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape:
        raise ValueError("series length mismatch")
    if actual.size < 1:
        raise ValueError("empty series")
    return float(np.sqrt(np.mean((actual - predicted) ** 2)))


def r_squared(actual: np.ndarray, predicted: np.ndarray) -> float:
    """Coefficient of determination, 1 - SS_res/SS_tot; negative when the
    prediction is worse than the mean."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape:
        raise ValueError("series length mismatch")
    if actual.size < 2:
        raise ValueError("need at least 2 samples")
    ss_tot = np.sum((actual - np.mean(actual)) ** 2)
    if ss_tot == 0:
        raise ValueError("actual series is constant")
    ss_res = np.sum((actual - predicted) ** 2)
    return float(1.0 - ss_res / ss_tot)
