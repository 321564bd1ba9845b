"""Parameter-noising experiment: corrupt the most influential feature group
and measure the detection-quality drop for full vs. reduced detectors.

Noise replaces every statistic of the targeted base parameter with i.i.d.
uniform draws over that column's training range; models stay trained on
clean data (the adversary tampers at inference time).
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyRanking, UnknownGroup
from .metrics import (
    METRIC_NAMES,
    MetricReport,
    confusion,
    single_trial_metrics,
)
from .models import ModelConfig, fit
from .selection import FeatureSet, project_dataset
from .synthgen import DetectionScenario
from .telemetry import Dataset, build_default_schema, stratified_split

FULL_ARM = "full"
SELECTED_ARM = "selected"


@dataclass(frozen=True)
class NoisingSpec:
    target_base_param: str
    seed: int
    noise_kind: str = "uniform-training-range"


def _ranked_names(ranking: Sequence) -> list[str]:
    return [entry[0] if isinstance(entry, (tuple, list)) else entry for entry in ranking]


def pick_noising_target(ranking: Sequence, schema, seed: int) -> NoisingSpec:
    """Noise the whole statistics group of the top-ranked feature."""
    names = _ranked_names(ranking)
    if not names:
        raise EmptyRanking("cannot pick a noising target from an empty ranking")
    return NoisingSpec(schema.base_param_of(names[0]), seed)


def pick_control_target(scored_ranking: Sequence[tuple[str, float]], schema, seed: int) -> NoisingSpec:
    """Least influential group: the null-effect control for the experiment."""
    if not scored_ranking:
        raise EmptyRanking("cannot pick a control target from an empty ranking")
    totals: dict[str, float] = {}
    for name, score in scored_ranking:
        totals[schema.base_param_of(name)] = totals.get(
            schema.base_param_of(name), 0.0
        ) + abs(score)
    target = min(sorted(totals), key=lambda bp: totals[bp])
    return NoisingSpec(target, seed)


def training_ranges(train: Dataset) -> dict[str, tuple[float, float]]:
    lo = train.rows.min(axis=0)
    hi = train.rows.max(axis=0)
    return {name: (float(lo[i]), float(hi[i])) for i, name in enumerate(train.schema.names)}


def noise_group(
    ds: Dataset, spec: NoisingSpec, ranges: Mapping[str, tuple[float, float]]
) -> Dataset:
    """Replace the target group's columns with uniform draws over training ranges."""
    try:
        indices = ds.schema.group_indices(spec.target_base_param)
    except Exception:
        indices = ()
    if not indices:
        raise UnknownGroup(f"no group {spec.target_base_param!r} in schema")
    rng = np.random.default_rng(spec.seed)
    rows = ds.rows.copy()
    for i in indices:
        name = ds.schema.names[i]
        if name not in ranges:
            raise UnknownGroup(f"no training range recorded for column {name!r}")
        lo, hi = ranges[name]
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise ValueError(f"invalid training range for {name!r}: ({lo}, {hi})")
        rows[:, i] = lo if lo == hi else rng.uniform(lo, hi, ds.n_samples)
    return Dataset(
        ds.schema,
        rows,
        ds.labels,
        provenance=f"{ds.provenance} | {spec.target_base_param} group noised".strip(" |"),
        seed=ds.seed,
    )


def drop_percent(clean_mean: float, noised_mean: float) -> float:
    if clean_mean == 0.0:
        return 0.0
    return 100.0 * (clean_mean - noised_mean) / clean_mean


@dataclass(frozen=True)
class ResilienceCell:
    attack: str
    classifier: str
    feature_set: str  # full | selected
    noised_param: str
    clean: MetricReport
    noised: MetricReport

    def drops(self) -> dict[str, float]:
        return {
            name: drop_percent(self.clean.summary(name).mean, self.noised.summary(name).mean)
            for name in METRIC_NAMES
        }

    def to_json_dict(self) -> dict:
        return {
            "attack": self.attack,
            "classifier": self.classifier,
            "feature_set": self.feature_set,
            "noised_param": self.noised_param,
            "clean": self.clean.to_json_dict(),
            "noised": self.noised.to_json_dict(),
            "drop_percent": self.drops(),
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "ResilienceCell":
        return cls(
            doc["attack"],
            doc["classifier"],
            doc["feature_set"],
            doc["noised_param"],
            MetricReport.from_json_dict(doc["clean"]),
            MetricReport.from_json_dict(doc["noised"]),
        )


def _mean_drops(cells: Sequence[ResilienceCell]) -> dict[str, float]:
    return {
        name: float(np.mean([c.drops()[name] for c in cells])) if cells else 0.0
        for name in METRIC_NAMES
    }


@dataclass(frozen=True)
class ResilienceReport:
    cells: tuple[ResilienceCell, ...]

    def arm(self, feature_set: str) -> tuple[ResilienceCell, ...]:
        return tuple(c for c in self.cells if c.feature_set == feature_set)

    def cell(self, attack: str, classifier: str, feature_set: str) -> ResilienceCell:
        for c in self.cells:
            if (c.attack, c.classifier, c.feature_set) == (attack, classifier, feature_set):
                return c
        raise KeyError((attack, classifier, feature_set))

    def by_attack(self, feature_set: str) -> dict[str, dict[str, float]]:
        attacks = sorted({c.attack for c in self.cells})
        return {
            a: _mean_drops([c for c in self.arm(feature_set) if c.attack == a])
            for a in attacks
        }

    def by_classifier(self, feature_set: str) -> dict[str, dict[str, float]]:
        classifiers = sorted({c.classifier for c in self.cells})
        return {
            k: _mean_drops([c for c in self.arm(feature_set) if c.classifier == k])
            for k in classifiers
        }

    def overall(self, feature_set: str) -> dict[str, float]:
        return _mean_drops(list(self.arm(feature_set)))

    def to_json_dict(self) -> dict:
        return {
            "cells": [c.to_json_dict() for c in self.cells],
            "summary": {
                arm: {
                    "by_attack": self.by_attack(arm),
                    "by_classifier": self.by_classifier(arm),
                    "overall": self.overall(arm),
                }
                for arm in (FULL_ARM, SELECTED_ARM)
                if self.arm(arm)
            },
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "ResilienceReport":
        return cls(tuple(ResilienceCell.from_json_dict(c) for c in doc["cells"]))


@dataclass(frozen=True)
class ResilienceConfig:
    scenarios: Mapping[str, DetectionScenario]
    model_configs: Mapping[str, ModelConfig]
    rankings: Mapping[tuple[str, str], Sequence]  # (attack, classifier) -> ranking
    feature_sets: Mapping[str, FeatureSet]
    n_trials: int = 100
    test_fraction: float = 0.3
    control_base_param: str | None = None  # override every target (null control)

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        object.__setattr__(self, "scenarios", dict(self.scenarios))
        object.__setattr__(self, "model_configs", dict(self.model_configs))
        object.__setattr__(self, "rankings", dict(self.rankings))
        object.__setattr__(self, "feature_sets", dict(self.feature_sets))


def _run_cell(args) -> list[ResilienceCell]:
    cfg, attack, classifier, base_seed = args
    scenario = cfg.scenarios[attack]
    model_cfg = cfg.model_configs[classifier]
    fs = cfg.feature_sets[classifier]
    schema = build_default_schema()
    if cfg.control_base_param is not None:
        target = cfg.control_base_param
    else:
        ranking = cfg.rankings[(attack, classifier)]
        target = pick_noising_target(ranking, schema, 0).target_base_param
    results: dict[str, dict[str, list[dict[str, float]]]] = {
        arm: {"clean": [], "noised": []} for arm in (FULL_ARM, SELECTED_ARM)
    }
    for t in range(cfg.n_trials):
        seed = base_seed + t
        ds = scenario.build(seed)
        train, test = stratified_split(ds, cfg.test_fraction, seed)
        ranges = training_ranges(train)
        noised_test = noise_group(test, NoisingSpec(target, seed), ranges)
        for arm in (FULL_ARM, SELECTED_ARM):
            if arm == SELECTED_ARM:
                tr = project_dataset(train, fs)
                te = project_dataset(test, fs)
                nt = project_dataset(noised_test, fs)
            else:
                tr, te, nt = train, test, noised_test
            model = fit(model_cfg, tr, seed)
            for tag, data in (("clean", te), ("noised", nt)):
                pred = model.predict(data.rows)
                results[arm][tag].append(single_trial_metrics(confusion(data.y(), pred)))
    cells = []
    for arm in (FULL_ARM, SELECTED_ARM):
        cells.append(
            ResilienceCell(
                attack,
                classifier,
                arm,
                target,
                MetricReport.from_trials(results[arm]["clean"]),
                MetricReport.from_trials(results[arm]["noised"]),
            )
        )
    return cells


def run_resilience_experiment(
    cfg: ResilienceConfig, base_seed: int, jobs: int = 1
) -> ResilienceReport:
    """Train clean, evaluate on clean and group-noised test data, per cell."""
    cell_keys = [
        (attack, classifier)
        for attack in sorted(cfg.scenarios)
        for classifier in sorted(cfg.model_configs)
    ]
    tasks = [(cfg, attack, classifier, base_seed) for attack, classifier in cell_keys]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            grouped = list(pool.map(_run_cell, tasks))
    else:
        grouped = [_run_cell(t) for t in tasks]
    cells = [cell for group in grouped for cell in group]
    cells.sort(key=lambda c: (c.attack, c.classifier, c.feature_set))
    return ResilienceReport(tuple(cells))
