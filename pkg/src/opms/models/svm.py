"""RBF-kernel support vector machine trained by sequential minimal optimization.

The dual is solved pairwise with Platt's working-set heuristics and an
error cache over a precomputed Gram matrix.  Probability output comes
from a sigmoid fitted on the training decision values with the
damped-Newton procedure that is standard for Platt scaling.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import NonConvergenceWarning
from .base import TrainedModel, ZScoreScaler


@dataclass(frozen=True)
class SVMConfig:
    C: float = 1.0
    gamma: float | str = "scale"  # "scale" -> 1 / (n_features * variance)
    tol: float = 1e-3
    max_passes: int = 200

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be > 0")
        if isinstance(self.gamma, str) and self.gamma != "scale":
            raise ValueError("gamma must be a positive float or 'scale'")
        if not isinstance(self.gamma, str) and self.gamma <= 0:
            raise ValueError("gamma must be > 0")


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


class SVMModel(TrainedModel):
    kind = "svm"

    def __init__(
        self,
        feature_names,
        scaler,
        support_vectors,
        dual_coef,  # alpha_i * y_i per support vector
        bias,
        gamma,
        platt_a,
        platt_b,
        converged=True,
    ):
        self.feature_names = tuple(feature_names)
        self.scaler = scaler
        self.support_vectors = support_vectors
        self.dual_coef = dual_coef
        self.bias = bias
        self.gamma = gamma
        self.platt_a = platt_a
        self.platt_b = platt_b
        self.converged = converged

    def decision_function(self, X) -> np.ndarray:
        Xs = self.scaler.transform(self._validate(X))
        return rbf_kernel(Xs, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def _score(self, X: np.ndarray) -> np.ndarray:
        f = self.decision_function(X)
        return 1.0 / (1.0 + np.exp(np.clip(self.platt_a * f + self.platt_b, -500, 500)))

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "scaler": self.scaler.to_json_dict(),
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "gamma": self.gamma,
            "platt_a": self.platt_a,
            "platt_b": self.platt_b,
            "converged": self.converged,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SVMModel":
        return cls(
            tuple(doc["feature_names"]),
            ZScoreScaler.from_json_dict(doc["scaler"]),
            np.asarray(doc["support_vectors"], dtype=np.float64),
            np.asarray(doc["dual_coef"], dtype=np.float64),
            float(doc["bias"]),
            float(doc["gamma"]),
            float(doc["platt_a"]),
            float(doc["platt_b"]),
            bool(doc.get("converged", True)),
        )


class _SMOState:
    def __init__(self, K, y, C, tol, rng):
        self.K = K
        self.y = y
        self.C = C
        self.tol = tol
        self.rng = rng
        self.n = y.size
        self.alpha = np.zeros(self.n)
        self.b = 0.0
        self.err = -y.astype(np.float64)  # f(x) - y with all alphas at zero

    def take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        a1_old, a2_old = self.alpha[i1], self.alpha[i2]
        y1, y2 = self.y[i1], self.y[i2]
        E1, E2 = self.err[i1], self.err[i2]
        s = y1 * y2
        if s > 0:
            L = max(0.0, a1_old + a2_old - self.C)
            H = min(self.C, a1_old + a2_old)
        else:
            L = max(0.0, a2_old - a1_old)
            H = min(self.C, self.C + a2_old - a1_old)
        if L >= H:
            return False
        k11, k12, k22 = self.K[i1, i1], self.K[i1, i2], self.K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2 = a2_old + y2 * (E1 - E2) / eta
            a2 = min(max(a2, L), H)
        else:
            # flat direction: pick the boundary with the lower objective
            f1 = y1 * (E1 + self.b) - a1_old * k11 - s * a2_old * k12
            f2 = y2 * (E2 + self.b) - s * a1_old * k12 - a2_old * k22
            L1 = a1_old + s * (a2_old - L)
            H1 = a1_old + s * (a2_old - H)
            obj_l = L1 * f1 + L * f2 + 0.5 * L1**2 * k11 + 0.5 * L**2 * k22 + s * L * L1 * k12
            obj_h = H1 * f1 + H * f2 + 0.5 * H1**2 * k11 + 0.5 * H**2 * k22 + s * H * H1 * k12
            if obj_l < obj_h - 1e-12:
                a2 = L
            elif obj_l > obj_h + 1e-12:
                a2 = H
            else:
                a2 = a2_old
        if abs(a2 - a2_old) < 1e-10 * (a2 + a2_old + 1e-10):
            return False
        a1 = a1_old + s * (a2_old - a2)
        d1 = y1 * (a1 - a1_old)
        d2 = y2 * (a2 - a2_old)
        b1 = self.b - (E1 + d1 * k11 + d2 * k12)
        b2 = self.b - (E2 + d1 * k12 + d2 * k22)
        if 0.0 < a1 < self.C:
            b_new = b1
        elif 0.0 < a2 < self.C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        self.err += d1 * self.K[i1] + d2 * self.K[i2] + (b_new - self.b)
        self.alpha[i1] = a1
        self.alpha[i2] = a2
        self.b = b_new
        return True

    def examine(self, i2: int) -> bool:
        y2, a2, E2 = self.y[i2], self.alpha[i2], self.err[i2]
        r2 = E2 * y2
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0.0)):
            return False
        nonbound = np.flatnonzero((self.alpha > 0.0) & (self.alpha < self.C))
        if nonbound.size > 1:
            i1 = int(nonbound[np.argmax(np.abs(self.err[nonbound] - E2))])
            if self.take_step(i1, i2):
                return True
        if nonbound.size:
            start = self.rng.integers(nonbound.size)
            for i1 in np.roll(nonbound, -start):
                if self.take_step(int(i1), i2):
                    return True
        start = self.rng.integers(self.n)
        for i1 in np.roll(np.arange(self.n), -start):
            if self.take_step(int(i1), i2):
                return True
        return False


def _smo(K, y, C, tol, max_passes, rng):
    state = _SMOState(K, y, C, tol, rng)
    examine_all = True
    converged = False
    passes = 0
    while passes < max_passes:
        passes += 1
        if examine_all:
            targets = range(state.n)
        else:
            targets = np.flatnonzero((state.alpha > 0.0) & (state.alpha < state.C))
        num_changed = sum(state.examine(int(i)) for i in targets)
        if examine_all:
            if num_changed == 0:
                converged = True
                break
            examine_all = False
        elif num_changed == 0:
            examine_all = True
    return state.alpha, state.b, converged


def fit_platt_sigmoid(decision: np.ndarray, y01: np.ndarray) -> tuple[float, float]:
    """Damped-Newton fit of P(attack | f) = 1 / (1 + exp(A f + B))."""
    deci = np.asarray(decision, dtype=np.float64)
    y01 = np.asarray(y01)
    prior1 = int(y01.sum())
    prior0 = y01.size - prior1
    t = np.where(y01 > 0, (prior1 + 1.0) / (prior1 + 2.0), 1.0 / (prior0 + 2.0))
    A = 0.0
    B = float(np.log((prior0 + 1.0) / (prior1 + 1.0)))
    sigma = 1e-12

    def objective(a, b):
        fapb = deci * a + b
        pos = fapb >= 0
        val = np.empty_like(fapb)
        val[pos] = t[pos] * fapb[pos] + np.log1p(np.exp(-fapb[pos]))
        val[~pos] = (t[~pos] - 1.0) * fapb[~pos] + np.log1p(np.exp(fapb[~pos]))
        return float(val.sum())

    fval = objective(A, B)
    for _ in range(100):
        fapb = deci * A + B
        pos = fapb >= 0
        p = np.empty_like(fapb)
        q = np.empty_like(fapb)
        p[pos] = np.exp(-fapb[pos]) / (1.0 + np.exp(-fapb[pos]))
        q[pos] = 1.0 / (1.0 + np.exp(-fapb[pos]))
        p[~pos] = 1.0 / (1.0 + np.exp(fapb[~pos]))
        q[~pos] = np.exp(fapb[~pos]) / (1.0 + np.exp(fapb[~pos]))
        d2 = p * q
        h11 = float(np.sum(deci * deci * d2)) + sigma
        h22 = float(np.sum(d2)) + sigma
        h21 = float(np.sum(deci * d2))
        d1 = t - p
        g1 = float(np.sum(deci * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        stepsize = 1.0
        while stepsize >= 1e-10:
            new_a, new_b = A + stepsize * dA, B + stepsize * dB
            new_f = objective(new_a, new_b)
            if new_f < fval + 1e-4 * stepsize * gd:
                A, B, fval = new_a, new_b, new_f
                break
            stepsize *= 0.5
        else:
            break
    return float(A), float(B)


def fit_svm(config: SVMConfig, X, y01, feature_names, seed: int) -> SVMModel:
    X = np.asarray(X, dtype=np.float64)
    y01 = np.asarray(y01)
    y = np.where(y01 > 0, 1.0, -1.0)
    scaler = ZScoreScaler.fit(X)
    Xs = scaler.transform(X)
    if config.gamma == "scale":
        var = float(Xs.var())
        gamma = 1.0 / (Xs.shape[1] * var) if var > 0 else 1.0 / Xs.shape[1]
    else:
        gamma = float(config.gamma)
    K = rbf_kernel(Xs, Xs, gamma)
    rng = np.random.default_rng(seed)
    alpha, b, converged = _smo(K, y, config.C, config.tol, config.max_passes, rng)
    if not converged:
        warnings.warn(
            f"SMO stopped after {config.max_passes} passes without meeting the "
            "KKT tolerance; returning best-so-far model",
            NonConvergenceWarning,
        )
    decision = K @ (alpha * y) + b
    platt_a, platt_b = fit_platt_sigmoid(decision, y01)
    sv = alpha > 1e-12
    return SVMModel(
        feature_names,
        scaler,
        Xs[sv],
        (alpha * y)[sv],
        float(b),
        gamma,
        platt_a,
        platt_b,
        converged,
    )
