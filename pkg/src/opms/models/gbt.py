"""Stage-wise second-order gradient boosting on logistic loss.

Trees grow greedily by the regularized gain
    0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam))
over sorted candidate thresholds; leaves carry the Newton step
-lr * G/(H+lam).  Features are consumed raw (trees are scale-invariant).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import TrainedModel, sigmoid


@dataclass(frozen=True)
class GBTConfig:
    n_trees: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    l2_leaf: float = 1.0
    min_child_weight: float = 1.0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1:
            raise ValueError("n_trees and max_depth must be >= 1")
        if self.learning_rate <= 0 or self.l2_leaf < 0:
            raise ValueError("learning_rate must be > 0 and l2_leaf >= 0")


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: float = 0.0  # leaf payload, already scaled by the learning rate

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_json_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_json_dict(),
            "right": self.right.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TreeNode":
        if "value" in doc:
            return cls(value=float(doc["value"]))
        return cls(
            feature=int(doc["feature"]),
            threshold=float(doc["threshold"]),
            left=cls.from_json_dict(doc["left"]),
            right=cls.from_json_dict(doc["right"]),
        )


def _predict_tree(node: TreeNode, X: np.ndarray, out: np.ndarray, idx: np.ndarray) -> None:
    if node.is_leaf:
        out[idx] += node.value
        return
    go_left = X[idx, node.feature] < node.threshold
    _predict_tree(node.left, X, out, idx[go_left])
    _predict_tree(node.right, X, out, idx[~go_left])


def _best_split(X, g, h, idx, l2_leaf, min_child_weight):
    """Exhaustive greedy split over all features; returns (gain, feature, threshold)."""
    G = g[idx].sum()
    H = h[idx].sum()
    parent = G * G / (H + l2_leaf)
    best = (0.0, -1, 0.0)
    for f in range(X.shape[1]):
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        if sv[0] == sv[-1]:
            continue
        gs = np.cumsum(g[idx][order])[:-1]
        hs = np.cumsum(h[idx][order])[:-1]
        cut = sv[:-1] != sv[1:]  # split only between distinct values
        hl = hs
        hr = H - hs
        valid = cut & (hl >= min_child_weight) & (hr >= min_child_weight)
        if not valid.any():
            continue
        gain = np.where(
            valid,
            0.5 * (gs**2 / (hl + l2_leaf) + (G - gs) ** 2 / (hr + l2_leaf) - parent),
            -np.inf,
        )
        k = int(np.argmax(gain))
        if gain[k] > best[0]:
            best = (float(gain[k]), f, float(0.5 * (sv[k] + sv[k + 1])))
    return best


def _grow_tree(X, g, h, idx, depth, config: GBTConfig) -> TreeNode:
    if depth < config.max_depth and idx.size >= 2:
        gain, feature, threshold = _best_split(
            X, g, h, idx, config.l2_leaf, config.min_child_weight
        )
        if feature >= 0 and gain > 0.0:
            go_left = X[idx, feature] < threshold
            left = _grow_tree(X, g, h, idx[go_left], depth + 1, config)
            right = _grow_tree(X, g, h, idx[~go_left], depth + 1, config)
            return TreeNode(feature=feature, threshold=threshold, left=left, right=right)
    G = g[idx].sum()
    H = h[idx].sum()
    return TreeNode(value=float(-config.learning_rate * G / (H + config.l2_leaf)))


class GBTModel(TrainedModel):
    kind = "xgb"

    def __init__(self, feature_names, trees, loss_curve=()):
        self.feature_names = tuple(feature_names)
        self.trees = list(trees)
        self.loss_curve = tuple(loss_curve)  # training logloss after each tree

    def margin(self, X) -> np.ndarray:
        """Summed leaf values (log-odds); the quantity tree explanations attribute."""
        X = self._validate(X)
        out = np.zeros(X.shape[0])
        idx = np.arange(X.shape[0])
        for tree in self.trees:
            _predict_tree(tree, X, out, idx)
        return out

    def _score(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.margin(X))

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "trees": [t.to_json_dict() for t in self.trees],
            "loss_curve": list(self.loss_curve),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GBTModel":
        return cls(
            tuple(doc["feature_names"]),
            [TreeNode.from_json_dict(t) for t in doc["trees"]],
            tuple(doc.get("loss_curve", ())),
        )


def fit_gbt(config: GBTConfig, X, y, feature_names) -> GBTModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    idx = np.arange(n)
    margin = np.zeros(n)
    trees: list[TreeNode] = []
    losses: list[float] = []
    for _ in range(config.n_trees):
        p = sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)
        tree = _grow_tree(X, g, h, idx, 0, config)
        trees.append(tree)
        _predict_tree(tree, X, margin, idx)
        p = np.clip(sigmoid(margin), 1e-15, 1.0 - 1e-15)
        losses.append(float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))
    return GBTModel(feature_names, trees, losses)
