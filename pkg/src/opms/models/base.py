"""Shared model infrastructure: scaling, input validation, timing, JSON io."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import NonFiniteInput, SchemaMismatch

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ZScoreScaler:
    """Per-feature standardization fitted on training data."""

    mean: np.ndarray
    scale: np.ndarray  # stddev with zeros replaced by 1 to keep constants at 0

    @classmethod
    def fit(cls, X: np.ndarray) -> "ZScoreScaler":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)
        return cls(mean, scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return Z * self.scale + self.mean

    def to_json_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ZScoreScaler":
        return cls(np.asarray(doc["mean"]), np.asarray(doc["scale"]))


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class TrainedModel:
    """Uniform scoring contract over the three classifier families.

    Subclasses set `kind` and `feature_names` and implement `_score`,
    which maps validated float rows to attack probabilities in [0, 1].
    Instances are immutable after fitting and safe to share.
    """

    kind: str = ""
    feature_names: tuple[str, ...] = ()

    def _validate(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise SchemaMismatch(
                f"input has {X.shape[-1] if X.ndim else 0} features, "
                f"model expects {len(self.feature_names)}"
            )
        if not np.all(np.isfinite(X)):
            raise NonFiniteInput("model input must be finite")
        return X

    def _score(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_proba(self, X) -> np.ndarray:
        """Attack probability per row, deterministic."""
        return self._score(self._validate(X))

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        # ties go to the attack class: alarming is the safe direction
        return (self.predict_proba(X) >= threshold).astype(np.int64)

    def to_json_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class InferenceTiming:
    median_ns_per_sample: float
    spread_ns_per_sample: float  # interquartile range
    repetitions: int


def measure_inference_time(
    model: TrainedModel, X, repetitions: int = 11
) -> InferenceTiming:
    """Median wall-clock scoring latency per sample over repeated full batches."""
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        raise ValueError("X must be non-empty")
    if repetitions < 5:
        raise ValueError("repetitions must be >= 5")
    n = X.shape[0] if X.ndim == 2 else 1
    for _ in range(2):  # warm caches and allocator before timing
        model.predict_proba(X)
    per_sample = np.empty(repetitions)
    for i in range(repetitions):
        t0 = time.perf_counter_ns()
        model.predict_proba(X)
        per_sample[i] = (time.perf_counter_ns() - t0) / n
    q1, med, q3 = np.percentile(per_sample, [25, 50, 75])
    return InferenceTiming(float(med), float(q3 - q1), repetitions)
