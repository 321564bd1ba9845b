"""Imbalance-aware detection metrics and the repeated-trial experiment runner.

Positive class is always Attack.  BAC is the mean of the true-positive
and true-negative rates, F1 the positive-class harmonic mean, G-Mean the
geometric mean of the two rates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyClass, LengthMismatch, NonBinaryLabel
from .models import ModelConfig, fit, kind_of
from .selection import FeatureSet, project_dataset
from .synthgen import DetectionScenario
from .telemetry import Dataset, stratified_split

METRIC_NAMES = ("bac", "f1", "g_mean")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(y_true, y_pred) -> ConfusionCounts:
    yt = np.asarray(y_true)
    yp = np.asarray(y_pred)
    if yt.shape != yp.shape or yt.size == 0:
        raise LengthMismatch(f"need equal non-empty vectors, got {yt.shape} vs {yp.shape}")
    for v in (yt, yp):
        if not np.isin(v, (0, 1)).all():
            raise NonBinaryLabel("labels must be 0 (normal) or 1 (attack)")
    tp = int(np.sum((yt == 1) & (yp == 1)))
    fp = int(np.sum((yt == 0) & (yp == 1)))
    tn = int(np.sum((yt == 0) & (yp == 0)))
    fn = int(np.sum((yt == 1) & (yp == 0)))
    return ConfusionCounts(tp, fp, tn, fn)


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float  # sample stddev (ddof=1), 0 for a single trial
    trials: tuple[float, ...]

    @classmethod
    def from_trials(cls, values: Sequence[float]) -> "MetricSummary":
        arr = np.asarray(values, dtype=np.float64)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return cls(float(arr.mean()), std, tuple(float(v) for v in arr))


@dataclass(frozen=True)
class MetricReport:
    bac: MetricSummary
    f1: MetricSummary
    g_mean: MetricSummary

    @property
    def n_trials(self) -> int:
        return len(self.bac.trials)

    def summary(self, name: str) -> MetricSummary:
        if name not in METRIC_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    @classmethod
    def from_trials(cls, per_trial: Sequence[Mapping[str, float]]) -> "MetricReport":
        return cls(
            *(
                MetricSummary.from_trials([t[name] for t in per_trial])
                for name in METRIC_NAMES
            )
        )

    def to_json_dict(self) -> dict:
        return {
            name: {
                "mean": s.mean,
                "std": s.std,
                "trials": list(s.trials),
            }
            for name, s in ((n, self.summary(n)) for n in METRIC_NAMES)
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "MetricReport":
        return cls(
            *(
                MetricSummary(
                    doc[name]["mean"], doc[name]["std"], tuple(doc[name]["trials"])
                )
                for name in METRIC_NAMES
            )
        )


def single_trial_metrics(c: ConfusionCounts) -> dict[str, float]:
    if c.tp + c.fn < 1 or c.tn + c.fp < 1:
        raise EmptyClass("both classes must be present among the true labels")
    tpr = c.tp / (c.tp + c.fn)
    tnr = c.tn / (c.tn + c.fp)
    denom = 2 * c.tp + c.fp + c.fn
    return {
        "bac": (tpr + tnr) / 2.0,
        "f1": 2 * c.tp / denom if denom else 0.0,
        "g_mean": float(np.sqrt(tpr * tnr)),
    }


def compute_metrics(c: ConfusionCounts) -> MetricReport:
    """Single-trial report: means equal the trial values, stddev is zero."""
    return MetricReport.from_trials([single_trial_metrics(c)])


@dataclass(frozen=True)
class TrialExperiment:
    """One detection experiment cell, repeated over seeded trials.

    Exactly one of `scenario` (fresh synthetic data per trial) or
    `dataset` (fixed data, re-split per trial) must be given.
    """

    model: ModelConfig
    scenario: DetectionScenario | None = None
    dataset: Dataset | None = None
    test_fraction: float = 0.3
    n_trials: int = 100
    feature_set: FeatureSet | None = None
    threshold: float = 0.5

    def __post_init__(self):
        if (self.scenario is None) == (self.dataset is None):
            raise ValueError("provide exactly one of scenario or dataset")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")

    @property
    def classifier(self) -> str:
        return kind_of(self.model)


def run_single_trial(experiment: TrialExperiment, seed: int) -> dict[str, float]:
    ds = experiment.scenario.build(seed) if experiment.scenario else experiment.dataset
    if experiment.feature_set is not None:
        ds = project_dataset(ds, experiment.feature_set)
    train, test = stratified_split(ds, experiment.test_fraction, seed)
    model = fit(experiment.model, train, seed)
    y_pred = model.predict(test.rows, experiment.threshold)
    return single_trial_metrics(confusion(test.y(), y_pred))


def run_trials(experiment: TrialExperiment, base_seed: int) -> MetricReport:
    """Repeat the experiment n_trials times with seeds base_seed + t."""
    per_trial = [
        run_single_trial(experiment, base_seed + t) for t in range(experiment.n_trials)
    ]
    return MetricReport.from_trials(per_trial)
