"""Explanation-driven feature selection: top-k per attack ranking, unioned."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EmptyRanking, UnknownFeature
from .telemetry import Dataset


@dataclass(frozen=True)
class FeatureSet:
    """Alphabetically stored, duplicate-free subset of schema feature names."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise EmptyRanking("feature set must be non-empty")
        object.__setattr__(self, "names", tuple(sorted(set(self.names))))

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def to_json_list(self) -> list[str]:
        return list(self.names)

    @classmethod
    def from_json_list(cls, doc: Sequence[str]) -> "FeatureSet":
        return cls(tuple(doc))


@dataclass(frozen=True)
class SelectionPolicy:
    """How to distill per-attack rankings into one reduced feature set."""

    k_per_attack: int
    rankings: Mapping[str, Sequence[str]]  # attack code -> names, most influential first
    classifier: str = ""

    def __post_init__(self):
        if not 1 <= self.k_per_attack <= 3:
            raise ValueError("k_per_attack must lie in [1, 3]")
        object.__setattr__(self, "rankings", dict(self.rankings))


def select_features(policy: SelectionPolicy) -> FeatureSet:
    """Union of each attack ranking's top k features."""
    if not policy.rankings:
        raise EmptyRanking("need rankings for at least one attack type")
    picked: set[str] = set()
    for attack, ranking in policy.rankings.items():
        if not ranking:
            raise EmptyRanking(f"ranking for {attack} is empty")
        picked.update(ranking[: policy.k_per_attack])
    return FeatureSet(tuple(picked))


def project_dataset(ds: Dataset, fs: FeatureSet) -> Dataset:
    """Restrict columns to the feature set (in its order); labels unchanged."""
    missing = [n for n in fs.names if n not in ds.schema.names]
    if missing:
        raise UnknownFeature(f"features not in schema: {missing}")
    idx = [ds.schema.index_of(n) for n in fs.names]
    return Dataset(
        ds.schema.subset(fs.names),
        ds.rows[:, idx],
        ds.labels,
        provenance=f"{ds.provenance} | projected to {len(fs)} features".strip(" |"),
        seed=ds.seed,
    )
