"""Single-hidden-layer perceptron trained with mini-batch Adam on cross-entropy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import TrainedModel, ZScoreScaler, sigmoid


@dataclass(frozen=True)
class MLPConfig:
    hidden_units: int = 100
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_epochs: int = 200
    batch_size: int = 32
    l2: float = 1e-4
    plateau_tol: float = 1e-4
    plateau_window: int = 10

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")
        for name in ("learning_rate", "epsilon", "l2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


def _bce_with_logits(z: np.ndarray, y: np.ndarray) -> float:
    # max(z,0) - z*y + log1p(exp(-|z|)): stable for large |z|
    return float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))


class MLPModel(TrainedModel):
    kind = "mlp"

    def __init__(self, feature_names, scaler, W1, b1, W2, b2, epochs_run=0):
        self.feature_names = tuple(feature_names)
        self.scaler = scaler
        self.W1 = W1
        self.b1 = b1
        self.W2 = W2
        self.b2 = b2
        self.epochs_run = epochs_run

    def _forward(self, Xs: np.ndarray):
        z1 = Xs @ self.W1 + self.b1
        a1 = np.maximum(z1, 0.0)
        z = a1 @ self.W2 + self.b2
        return z1, a1, z.ravel()

    def margin(self, X) -> np.ndarray:
        """Pre-sigmoid output of the single output unit."""
        Xs = self.scaler.transform(self._validate(X))
        return self._forward(Xs)[2]

    def _score(self, X: np.ndarray) -> np.ndarray:
        Xs = self.scaler.transform(X)
        return sigmoid(self._forward(Xs)[2])

    def loss(self, X, y, l2: float) -> float:
        """Training objective: mean cross-entropy plus L2 weight penalty."""
        Xs = self.scaler.transform(self._validate(X))
        z = self._forward(Xs)[2]
        penalty = 0.5 * l2 * (float(np.sum(self.W1**2)) + float(np.sum(self.W2**2)))
        return _bce_with_logits(z, np.asarray(y, dtype=np.float64)) + penalty

    def gradients(self, X, y, l2: float):
        """Analytic gradients of `loss` w.r.t. (W1, b1, W2, b2)."""
        Xs = self.scaler.transform(self._validate(X))
        y = np.asarray(y, dtype=np.float64)
        z1, a1, z = self._forward(Xs)
        m = Xs.shape[0]
        dz = (sigmoid(z) - y)[:, None] / m
        dW2 = a1.T @ dz + l2 * self.W2
        db2 = dz.sum(axis=0)
        da1 = dz @ self.W2.T
        dz1 = da1 * (z1 > 0.0)
        dW1 = Xs.T @ dz1 + l2 * self.W1
        db1 = dz1.sum(axis=0)
        return dW1, db1, dW2, db2

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "scaler": self.scaler.to_json_dict(),
            "hidden_units": self.W1.shape[1],
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2.tolist(),
            "epochs_run": self.epochs_run,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "MLPModel":
        return cls(
            tuple(doc["feature_names"]),
            ZScoreScaler.from_json_dict(doc["scaler"]),
            np.asarray(doc["W1"], dtype=np.float64),
            np.asarray(doc["b1"], dtype=np.float64),
            np.asarray(doc["W2"], dtype=np.float64),
            np.asarray(doc["b2"], dtype=np.float64),
            doc.get("epochs_run", 0),
        )


def fit_mlp(config: MLPConfig, X, y, feature_names, seed: int) -> MLPModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    h = config.hidden_units
    rng = np.random.default_rng(seed)

    scaler = ZScoreScaler.fit(X)
    Xs = scaler.transform(X)

    # He init for the ReLU layer, small Glorot-style output layer
    W1 = rng.standard_normal((d, h)) * np.sqrt(2.0 / d)
    b1 = np.zeros(h)
    W2 = rng.standard_normal((h, 1)) * np.sqrt(1.0 / h)
    b2 = np.zeros(1)

    params = [W1, b1, W2, b2]
    m_state = [np.zeros_like(p) for p in params]
    v_state = [np.zeros_like(p) for p in params]
    t = 0

    model = MLPModel(feature_names, scaler, W1, b1, W2, b2)
    best_loss = np.inf
    stale_epochs = 0
    batch = min(config.batch_size, n)
    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            zb1 = Xs[idx] @ params[0] + params[1]
            ab1 = np.maximum(zb1, 0.0)
            zb = (ab1 @ params[2] + params[3]).ravel()
            dz = (sigmoid(zb) - y[idx])[:, None] / idx.size
            dz1 = dz @ params[2].T * (zb1 > 0.0)
            grads = [
                Xs[idx].T @ dz1 + config.l2 * params[0],
                dz1.sum(axis=0),
                ab1.T @ dz + config.l2 * params[2],
                dz.sum(axis=0),
            ]
            t += 1
            for p, g, ms, vs in zip(params, grads, m_state, v_state):
                ms *= config.beta1
                ms += (1 - config.beta1) * g
                vs *= config.beta2
                vs += (1 - config.beta2) * g * g
                m_hat = ms / (1 - config.beta1**t)
                v_hat = vs / (1 - config.beta2**t)
                p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
        model.epochs_run = epoch + 1
        epoch_loss = model.loss(X, y, config.l2)
        if best_loss - epoch_loss > config.plateau_tol:
            best_loss = epoch_loss
            stale_epochs = 0
        else:
            best_loss = min(best_loss, epoch_loss)
            stale_epochs += 1
            if stale_epochs >= config.plateau_window:
                break
    return model
