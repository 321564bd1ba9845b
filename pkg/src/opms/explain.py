"""Shapley-value attributions for the detectors, plus decision-plot data.

Three routes to the same quantity:

* ``exact_shapley`` enumerates every coalition of a set function (the
  brute-force oracle, capped at 20 features);
* ``kernel_shap`` solves the coalition-weighted least-squares problem,
  enumerating all coalitions when the feature count is small and falling
  back to stratified coalition sampling otherwise;
* ``tree_shap`` computes exact per-tree attributions for the boosted
  ensemble in polynomial time, against each background row.

All three use interventional semantics: a coalition's value is the mean
model output over background rows with the coalition's features taken
from the explained sample.  Tree attributions live in log-odds (margin)
space, where summing over trees is exact; the other models are explained
in probability space.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import (
    EmptyBackground,
    MisalignedInputs,
    TooManyFeatures,
    WrongModelKind,
)
from .models import GBTModel, TrainedModel, TreeNode
from .models.base import sigmoid

SHAPLEY_MAX_FEATURES = 20
EXACT_ENUMERATION_LIMIT = 12
DEFAULT_N_COALITIONS = 2048
DEFAULT_BACKGROUND_SIZE = 100

OUTPUT_PROBABILITY = "probability"
OUTPUT_MARGIN = "margin"


# ---------------------------------------------------------------- exact oracle


def exact_shapley(value_fn: Callable[[np.ndarray], float], n_features: int) -> np.ndarray:
    """Shapley values of a set function by full coalition enumeration.

    `value_fn` receives a boolean inclusion mask of length n_features.
    """
    m = n_features
    if m > SHAPLEY_MAX_FEATURES:
        raise TooManyFeatures(f"{m} features would need 2^{m} coalition evaluations")
    if m < 1:
        raise ValueError("need at least one feature")
    n_masks = 1 << m
    values = np.empty(n_masks)
    mask = np.zeros(m, dtype=bool)
    for code in range(n_masks):
        for j in range(m):
            mask[j] = (code >> j) & 1
        values[code] = float(value_fn(mask))
    fact = [math.factorial(k) for k in range(m + 1)]
    size_weight = np.array(
        [fact[s] * fact[m - s - 1] / fact[m] for s in range(m)]
    )
    codes = np.arange(n_masks, dtype=np.uint64)
    sizes = np.bitwise_count(codes).astype(np.int64)
    phi = np.empty(m)
    for j in range(m):
        bit = np.uint64(1 << j)
        without = codes[(codes & bit) == 0]
        s = sizes[(codes & bit) == 0]
        phi[j] = float(np.dot(size_weight[s], values[without | bit] - values[without]))
    return phi


def shapley_kernel_weight(m: int, s: int) -> float:
    """Weight of one size-s coalition in the Kernel SHAP regression."""
    if s <= 0 or s >= m:
        return math.inf
    return (m - 1) / (math.comb(m, s) * s * (m - s))


# ------------------------------------------------------------- kernel method


@dataclass(frozen=True)
class KernelShapResult:
    phi: np.ndarray
    base_value: float
    residual: float  # estimation-error diagnostic; 0 for full enumeration
    singular: bool = False  # regression needed diagonal regularization


def _coalition_values(
    score_fn, background: np.ndarray, x: np.ndarray, Z: np.ndarray, chunk: int = 256
) -> np.ndarray:
    """v(S) = mean over background of the score of (x on S, background off S)."""
    n_bg, d = background.shape
    out = np.empty(Z.shape[0])
    for start in range(0, Z.shape[0], chunk):
        block = Z[start : start + chunk]
        composite = np.where(block[:, None, :], x[None, None, :], background[None, :, :])
        scores = np.asarray(score_fn(composite.reshape(-1, d)))
        out[start : start + chunk] = scores.reshape(block.shape[0], n_bg).mean(axis=1)
    return out


def _solve_constrained_wls(Z, w, y, delta):
    """Weighted least squares with the efficiency constraint sum(phi) = delta.

    The last feature is eliminated through the constraint; a singular
    system is ridged with 1e-10 on the diagonal and flagged.
    """
    m = Z.shape[1]
    if m == 1:
        return np.array([delta]), False
    zl = Z[:, -1]
    Zr = Z[:, :-1] - zl[:, None]
    yr = y - zl * delta
    A = Zr.T @ (w[:, None] * Zr)
    b = Zr.T @ (w * yr)
    singular = False
    try:
        head = np.linalg.solve(A, b)
        if not np.all(np.isfinite(head)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        singular = True
        head = np.linalg.solve(A + 1e-10 * np.eye(m - 1), b)
    phi = np.empty(m)
    phi[:-1] = head
    phi[-1] = delta - head.sum()
    return phi, singular


def _enumeration_plan(m: int, budget: int):
    """Coalition sizes to enumerate fully vs sample.

    Size pairs (s, m-s) are taken together, smallest first, so whatever is
    left to sample stays closed under complementation.
    """
    pairs: list[tuple[int, ...]] = []
    lo, hi = 1, m - 1
    while lo <= hi:
        pairs.append((lo,) if lo == hi else (lo, hi))
        lo += 1
        hi -= 1
    enumerated: list[int] = []
    used = 0
    remaining: list[int] = []
    exhausted = False
    for pair in pairs:
        count = sum(math.comb(m, s) for s in pair)
        if exhausted or used + count > budget:
            exhausted = True
            remaining.extend(pair)
            continue
        enumerated.extend(pair)
        used += count
    return enumerated, sorted(remaining), budget - used


def kernel_shap(
    score_fn: Callable[[np.ndarray], np.ndarray],
    background,
    x,
    n_coalitions: int = DEFAULT_N_COALITIONS,
    exact_limit: int = EXACT_ENUMERATION_LIMIT,
    seed: int = 0,
) -> KernelShapResult:
    """Kernel SHAP attribution of one sample against a background set."""
    background = np.asarray(background, dtype=np.float64)
    if background.ndim == 1:
        background = background.reshape(1, -1)
    if background.size == 0:
        raise EmptyBackground("background must contain at least one row")
    x = np.asarray(x, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("sample to explain must be finite")
    m = x.size
    v0 = float(np.mean(score_fn(background)))
    vf = float(np.asarray(score_fn(x.reshape(1, -1))).ravel()[0])
    delta = vf - v0
    if m == 1:
        return KernelShapResult(np.array([delta]), v0, 0.0)

    full_count = (1 << m) - 2
    if m <= exact_limit or n_coalitions >= full_count:
        Z = np.zeros((full_count, m))
        w = np.empty(full_count)
        row = 0
        for s in range(1, m):
            weight = shapley_kernel_weight(m, s)
            for combo in combinations(range(m), s):
                Z[row, list(combo)] = 1.0
                w[row] = weight
                row += 1
        y = _coalition_values(score_fn, background, x, Z.astype(bool)) - v0
        phi, singular = _solve_constrained_wls(Z, w, y, delta)
        residual = abs(delta - float(phi.sum()))
        return KernelShapResult(phi, v0, residual, singular)

    return _sampled_kernel_shap(score_fn, background, x, v0, delta, n_coalitions, seed)


def _sampled_kernel_shap(score_fn, background, x, v0, delta, budget, seed):
    m = x.size
    rng = np.random.default_rng(seed)
    enumerated_sizes, remaining_sizes, n_rem = _enumeration_plan(m, budget)

    rows: list[np.ndarray] = []
    weights: list[float] = []
    halves: list[int] = []  # 0 = enumerated, 1/2 = sampled half for the residual
    for s in enumerated_sizes:
        weight = shapley_kernel_weight(m, s)
        for combo in combinations(range(m), s):
            z = np.zeros(m)
            z[list(combo)] = 1.0
            rows.append(z)
            weights.append(weight)
            halves.append(0)

    if remaining_sizes and n_rem > 0:
        mass = np.array([(m - 1) / (s * (m - s)) for s in remaining_sizes])
        total_mass = float(mass.sum())
        prob = mass / total_mass
        counts: dict[tuple[int, ...], list[float]] = {}
        draws = 0
        half = 1
        while draws < n_rem:
            s = int(rng.choice(remaining_sizes, p=prob))
            members = tuple(sorted(rng.choice(m, size=s, replace=False).tolist()))
            batch = [members]
            if draws + 1 < n_rem:  # antithetic complement
                batch.append(tuple(i for i in range(m) if i not in members))
            for coalition in batch:
                entry = counts.setdefault(coalition, [0.0, 0.0])
                entry[half - 1] += 1.0
                draws += 1
            half = 3 - half
        for coalition, (c1, c2) in counts.items():
            z = np.zeros(m)
            z[list(coalition)] = 1.0
            if c1 > 0:
                rows.append(z)
                weights.append(c1 / draws * total_mass)
                halves.append(1)
            if c2 > 0:
                rows.append(z)
                weights.append(c2 / draws * total_mass)
                halves.append(2)

    Z = np.asarray(rows)
    w = np.asarray(weights)
    half_tag = np.asarray(halves)
    y = _coalition_values(score_fn, background, x, Z.astype(bool)) - v0
    phi, singular = _solve_constrained_wls(Z, w, y, delta)

    residual = 0.0
    if (half_tag == 1).any() and (half_tag == 2).any():
        sub = []
        for keep in (1, 2):
            sel = (half_tag == 0) | (half_tag == keep)
            w_half = w[sel].copy()
            w_half[half_tag[sel] == keep] *= 2.0  # half the draws carry the stratum
            phi_half, _ = _solve_constrained_wls(Z[sel], w_half, y[sel], delta)
            sub.append(phi_half)
        residual = 0.5 * float(np.max(np.abs(sub[0] - sub[1])))
    return KernelShapResult(phi, v0, residual, singular)


# --------------------------------------------------------------- tree method


def _leaf_paths(node: TreeNode, path: list, out: list) -> None:
    if node.is_leaf:
        out.append((tuple(path), node.value))
        return
    path.append((node.feature, node.threshold, True))
    _leaf_paths(node.left, path, out)
    path.pop()
    path.append((node.feature, node.threshold, False))
    _leaf_paths(node.right, path, out)
    path.pop()


def _conjunction_coefficients(max_depth: int):
    fact = [math.factorial(k) for k in range(2 * max_depth + 2)]
    size = max_depth + 1
    coef_own = np.zeros((size, size))
    coef_other = np.zeros((size, size))
    for a in range(size):
        for c in range(size):
            if a >= 1 and a + c < len(fact):
                coef_own[a, c] = fact[a - 1] * fact[c] / fact[a + c]
            if c >= 1 and a + c < len(fact):
                coef_other[a, c] = fact[a] * fact[c - 1] / fact[a + c]
    return coef_own, coef_other


def _tree_shap_single(
    paths: Sequence, background: np.ndarray, x: np.ndarray, phi: np.ndarray
) -> None:
    n_bg = background.shape[0]
    for path, leaf_value in paths:
        if not path:
            continue
        per_feature: dict[int, tuple[bool, np.ndarray]] = {}
        for feature, threshold, go_left in path:
            x_ok = bool((x[feature] < threshold) == go_left)
            b_ok = (background[:, feature] < threshold) == go_left
            if feature in per_feature:
                prev_x, prev_b = per_feature[feature]
                per_feature[feature] = (prev_x and x_ok, prev_b & b_ok)
            else:
                per_feature[feature] = (x_ok, b_ok)
        reach = np.ones(n_bg, dtype=bool)
        for x_ok, b_ok in per_feature.values():
            reach &= b_ok | x_ok
        if not reach.any():
            continue
        a = np.zeros(n_bg, dtype=np.int64)
        c = np.zeros(n_bg, dtype=np.int64)
        for x_ok, b_ok in per_feature.values():
            if x_ok:
                a += ~b_ok
            else:
                c += b_ok
        coef_own, coef_other = _COEFS
        for feature, (x_ok, b_ok) in per_feature.items():
            if x_ok:
                sel = reach & ~b_ok
                if sel.any():
                    phi[feature] += leaf_value * float(coef_own[a[sel], c[sel]].sum())
            else:
                sel = reach  # within reach, a failed x-side always sits in the off-set
                phi[feature] -= leaf_value * float(coef_other[a[sel], c[sel]].sum())


_COEFS = _conjunction_coefficients(32)


def tree_shap(model: TrainedModel, background, x) -> np.ndarray:
    """Interventional Shapley values of the ensemble margin for one sample."""
    if not isinstance(model, GBTModel):
        raise WrongModelKind("tree attributions require the boosted-tree model")
    background = np.asarray(background, dtype=np.float64)
    if background.ndim == 1:
        background = background.reshape(1, -1)
    if background.size == 0:
        raise EmptyBackground("background must contain at least one row")
    x = np.asarray(x, dtype=np.float64).ravel()
    phi = np.zeros(x.size)
    for tree in model.trees:
        paths: list = []
        _leaf_paths(tree, [], paths)
        _tree_shap_single(paths, background, x, phi)
    return phi / background.shape[0]


def tree_shap_per_tree(model: GBTModel, background, x) -> np.ndarray:
    """Per-tree attribution matrix; rows sum to the ensemble attribution."""
    background = np.asarray(background, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).ravel()
    out = np.zeros((len(model.trees), x.size))
    for i, tree in enumerate(model.trees):
        paths: list = []
        _leaf_paths(tree, [], paths)
        _tree_shap_single(paths, background, x, out[i])
    return out / background.shape[0]


# ------------------------------------------------------- explanation objects


def _influence_order(phi: np.ndarray) -> tuple[int, ...]:
    mean_abs = np.abs(phi).mean(axis=0)
    return tuple(sorted(range(phi.shape[1]), key=lambda j: (-mean_abs[j], j)))


def _fingerprint(background: np.ndarray) -> str:
    digest = hashlib.sha256()
    digest.update(str(background.shape).encode())
    digest.update(np.ascontiguousarray(background).tobytes())
    return digest.hexdigest()[:16]


@dataclass(frozen=True)
class ShapExplanation:
    feature_names: tuple[str, ...]
    base_value: float
    phi: np.ndarray  # samples x features
    residuals: tuple[float, ...]
    output_space: str  # probability | margin
    background_fingerprint: str
    feature_order: tuple[int, ...] = ()

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[1] != len(self.feature_names):
            raise MisalignedInputs("phi must be samples x features")
        object.__setattr__(self, "phi", phi)
        if not self.feature_order:
            object.__setattr__(self, "feature_order", _influence_order(phi))

    @property
    def n_samples(self) -> int:
        return self.phi.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "base_value": self.base_value,
            "features": list(self.feature_names),
            "phi": self.phi.tolist(),
            "residuals": list(self.residuals),
            "output_space": self.output_space,
            "background_fingerprint": self.background_fingerprint,
            "feature_order": list(self.feature_order),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ShapExplanation":
        return cls(
            tuple(doc["features"]),
            float(doc["base_value"]),
            np.asarray(doc["phi"], dtype=np.float64),
            tuple(doc["residuals"]),
            doc["output_space"],
            doc["background_fingerprint"],
            tuple(doc.get("feature_order", ())),
        )


def explain_model(
    model: TrainedModel,
    background,
    X,
    n_coalitions: int = DEFAULT_N_COALITIONS,
    exact_limit: int = EXACT_ENUMERATION_LIMIT,
    seed: int = 0,
) -> ShapExplanation:
    """Attribute each row of X; tree models in margin space, others in probability."""
    background = np.asarray(background, dtype=np.float64)
    if background.size == 0:
        raise EmptyBackground("background must contain at least one row")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if isinstance(model, GBTModel):
        base = float(np.mean(model.margin(background)))
        outputs = model.margin(X)
        phi = np.vstack([tree_shap(model, background, row) for row in X])
        residuals = tuple(
            float(abs(base + p.sum() - out)) for p, out in zip(phi, outputs)
        )
        space = OUTPUT_MARGIN
    else:
        results = [
            kernel_shap(
                model.predict_proba,
                background,
                row,
                n_coalitions=n_coalitions,
                exact_limit=exact_limit,
                seed=seed + i,
            )
            for i, row in enumerate(X)
        ]
        base = results[0].base_value
        phi = np.vstack([r.phi for r in results])
        residuals = tuple(r.residual for r in results)
        space = OUTPUT_PROBABILITY
    return ShapExplanation(
        tuple(model.feature_names),
        base,
        phi,
        residuals,
        space,
        _fingerprint(background),
    )


def rank_features(expl: ShapExplanation) -> list[tuple[str, float]]:
    """Features by descending mean |phi|; ties fall back to schema order."""
    if expl.phi.size == 0:
        raise MisalignedInputs("explanation has no attribution values")
    mean_abs = np.abs(expl.phi).mean(axis=0)
    return [(expl.feature_names[j], float(mean_abs[j])) for j in expl.feature_order]


@dataclass(frozen=True)
class DecisionPlotData:
    """Cumulative attribution trajectories, least influential feature first."""

    base_value: float
    feature_names: tuple[str, ...]  # ascending influence, bottom to top
    cumulative: np.ndarray  # samples x features, in attribution space
    outputs: np.ndarray
    predicted: np.ndarray  # 1 = attack
    display_transform: str  # identity | sigmoid (margins shown as probabilities)

    def steps(self, i: int) -> list[tuple[str, float]]:
        return list(zip(self.feature_names, self.cumulative[i].tolist()))

    def display_base(self) -> float:
        if self.display_transform == "sigmoid":
            return float(sigmoid(np.array([self.base_value]))[0])
        return self.base_value

    def display_cumulative(self) -> np.ndarray:
        if self.display_transform == "sigmoid":
            return sigmoid(self.cumulative)
        return self.cumulative


def decision_plot_data(expl: ShapExplanation, outputs) -> DecisionPlotData:
    outputs = np.asarray(outputs, dtype=np.float64).ravel()
    if outputs.size != expl.n_samples:
        raise MisalignedInputs(
            f"{expl.n_samples} explained samples but {outputs.size} outputs"
        )
    ascending = tuple(reversed(expl.feature_order))
    cumulative = expl.base_value + np.cumsum(expl.phi[:, ascending], axis=1)
    if expl.output_space == OUTPUT_MARGIN:
        predicted = (outputs >= 0.0).astype(np.int64)
        transform = "sigmoid"
    else:
        predicted = (outputs >= 0.5).astype(np.int64)
        transform = "identity"
    return DecisionPlotData(
        expl.base_value,
        tuple(expl.feature_names[j] for j in ascending),
        cumulative,
        outputs,
        predicted,
        transform,
    )
