"""Three classifier families behind one probability-scoring contract.

The neural net and the SVM embed a z-score scaler fitted on their
training split; the boosted trees consume raw features.
"""
from __future__ import annotations

from typing import Union

import numpy as np

from ..errors import NonFiniteInput, SingleClassTraining
from ..telemetry import Dataset
from .base import (
    MODEL_FORMAT_VERSION,
    InferenceTiming,
    TrainedModel,
    ZScoreScaler,
    measure_inference_time,
    sigmoid,
)
from .gbt import GBTConfig, GBTModel, TreeNode, fit_gbt
from .mlp import MLPConfig, MLPModel, fit_mlp
from .svm import SVMConfig, SVMModel, fit_platt_sigmoid, fit_svm, rbf_kernel

ModelConfig = Union[MLPConfig, GBTConfig, SVMConfig]

MODEL_KINDS = {"mlp": MLPConfig, "xgb": GBTConfig, "svm": SVMConfig}


def config_for(kind: str, **overrides) -> ModelConfig:
    try:
        return MODEL_KINDS[kind](**overrides)
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected mlp|xgb|svm") from None


def kind_of(config: ModelConfig) -> str:
    for kind, cls in MODEL_KINDS.items():
        if isinstance(config, cls):
            return kind
    raise TypeError(f"unrecognized model config {type(config).__name__}")


def fit(config: ModelConfig, train: Dataset, seed: int) -> TrainedModel:
    """Train one classifier on a labeled dataset; deterministic given the seed."""
    y = train.y()
    if y.min() == y.max():
        raise SingleClassTraining("training data must contain both classes")
    X = train.rows
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("training data must be finite")
    names = train.schema.names
    if isinstance(config, MLPConfig):
        return fit_mlp(config, X, y, names, seed)
    if isinstance(config, GBTConfig):
        return fit_gbt(config, X, y, names)
    if isinstance(config, SVMConfig):
        return fit_svm(config, X, y, names, seed)
    raise TypeError(f"unrecognized model config {type(config).__name__}")


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    return model.predict_proba(X)


def predict(model: TrainedModel, X, threshold: float = 0.5) -> np.ndarray:
    return model.predict(X, threshold)


def model_to_json_dict(model: TrainedModel) -> dict:
    doc = model.to_json_dict()
    doc["format_version"] = MODEL_FORMAT_VERSION
    return doc


def model_from_json_dict(doc: dict) -> TrainedModel:
    kind = doc.get("kind")
    if kind == "mlp":
        return MLPModel.from_json_dict(doc)
    if kind == "xgb":
        return GBTModel.from_json_dict(doc)
    if kind == "svm":
        return SVMModel.from_json_dict(doc)
    raise ValueError(f"unknown model kind {kind!r}")


__all__ = [
    "GBTConfig",
    "GBTModel",
    "InferenceTiming",
    "MLPConfig",
    "MLPModel",
    "MODEL_FORMAT_VERSION",
    "MODEL_KINDS",
    "ModelConfig",
    "SVMConfig",
    "SVMModel",
    "TrainedModel",
    "TreeNode",
    "ZScoreScaler",
    "config_for",
    "fit",
    "fit_gbt",
    "fit_mlp",
    "fit_platt_sigmoid",
    "fit_svm",
    "kind_of",
    "measure_inference_time",
    "model_from_json_dict",
    "model_to_json_dict",
    "predict",
    "predict_proba",
    "rbf_kernel",
    "sigmoid",
]
