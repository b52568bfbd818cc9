"""Self-describing JSON persistence for all estimator kinds."""

from __future__ import annotations

import json

import numpy as np

from .clstm import ClstmModel
from .linear import LinearModel
from .trees import BaggedTreeEnsemble

FORMAT_VERSION = 1


def model_to_document(model, scale=None, seed: int | None = None) -> dict:
    doc = model.to_dict()
    doc["format_version"] = FORMAT_VERSION
    if seed is not None:
        doc["seed"] = seed
    if scale is not None:
        doc["normalization"] = {
            "rms_max": np.asarray(scale.rms_max).tolist(),
            "force_max": scale.force_max,
        }
    return doc


def save_model(path, model, scale=None, seed: int | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_document(model, scale, seed), fh, sort_keys=True)
        fh.write("\n")


def model_from_document(doc: dict):
    kind = doc.get("kind")
    if kind == "linear":
        return LinearModel.from_dict(doc)
    if kind in ("random_forest", "gradient_boosting"):
        return BaggedTreeEnsemble.from_dict(doc)
    if kind == "clstm":
        return ClstmModel.from_dict(doc)
    raise ValueError(f"unknown model kind {kind!r}")


def load_model(path):
    with open(path) as fh:
        return model_from_document(json.load(fh))
