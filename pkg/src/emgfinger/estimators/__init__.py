from .clstm import Adam, ClstmConfig, ClstmModel, train_clstm
from .dataset import Dataset, TrainConfig, make_sequences
from .io import load_model, model_from_document, model_to_document, save_model
from .linear import LinearModel, RankDeficientError, fit_linear
from .metrics import r_squared, rmse
from .trees import BaggedTreeEnsemble, TreeParams, fit_bagged_trees

__all__ = [
    "Adam",
    "BaggedTreeEnsemble",
    "ClstmConfig",
    "ClstmModel",
    "Dataset",
    "LinearModel",
    "RankDeficientError",
    "TrainConfig",
    "TreeParams",
    "fit_bagged_trees",
    "fit_linear",
    "load_model",
    "make_sequences",
    "model_from_document",
    "model_to_document",
    "r_squared",
    "rmse",
    "save_model",
    "train_clstm",
]
