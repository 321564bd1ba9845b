"""OPM feature schema, labeled dataset container, imbalanced assembly, splits and CSV persistence.

The canonical schema expands each monitored parameter into per-minute
avg/max/min statistics, except the counter-style parameters (BE-FEC,
UBE-FEC, LOS) which are recorded as a single value.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateClass,
    HeaderMismatch,
    InsufficientAttackRows,
    MalformedRow,
    NonFiniteValue,
    SchemaMismatch,
)

# Monitored base parameters, in canonical row order.
BASE_PARAMS: tuple[str, ...] = (
    "CD",
    "DGD",
    "OSNR",
    "PDL",
    "Q-factor",
    "BE-FEC",
    "BER-FEC",
    "UBE-FEC",
    "BER-POST-FEC",
    "OPR",
    "OPT",
    "OFT",
    "OFR",
    "LOS",
)

# Counter-style parameters carry one value per interval instead of avg/max/min.
SINGLE_STAT_PARAMS: frozenset[str] = frozenset({"BE-FEC", "UBE-FEC", "LOS"})

# Attack mix contract: 15 attack samples per 100 normal samples.
ATTACK_PER_100_NORMAL = 15

LABEL_COLUMNS = ("label", "attack_kind", "intensity")


class Statistic(str, Enum):
    AVG = "avg"
    MAX = "max"
    MIN = "min"
    SINGLE = "single"


class SampleClass(str, Enum):
    NORMAL = "Normal"
    ATTACK = "Attack"


class AttackKind(str, Enum):
    INB = "INB"
    OOB = "OOB"
    POL = "POL"


class Intensity(str, Enum):
    LGT = "LGT"
    STR = "STR"


@dataclass(frozen=True)
class FeatureDescriptor:
    base_param: str
    statistic: Statistic

    def __post_init__(self):
        if self.base_param not in BASE_PARAMS:
            raise SchemaMismatch(f"unknown base parameter {self.base_param!r}")
        single = self.base_param in SINGLE_STAT_PARAMS
        if single != (self.statistic is Statistic.SINGLE):
            raise SchemaMismatch(
                f"{self.base_param} cannot carry statistic {self.statistic.value}"
            )

    @property
    def name(self) -> str:
        if self.statistic in (Statistic.AVG, Statistic.SINGLE):
            return self.base_param
        return f"{self.base_param}-{self.statistic.value}"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered, index-stable catalogue of dataset columns."""

    entries: tuple[FeatureDescriptor, ...]

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise SchemaMismatch("feature names must be unique")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaMismatch(f"no feature named {name!r}") from None

    def base_param_of(self, name: str) -> str:
        return self.entries[self.index_of(name)].base_param

    def group(self, base_param: str) -> tuple[str, ...]:
        """All feature names sharing one base parameter (its statistics group)."""
        members = tuple(e.name for e in self.entries if e.base_param == base_param)
        if not members:
            raise SchemaMismatch(f"no group for base parameter {base_param!r}")
        return members

    def group_indices(self, base_param: str) -> tuple[int, ...]:
        return tuple(i for i, e in enumerate(self.entries) if e.base_param == base_param)

    def groups(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, tuple[str, ...]] = {}
        for e in self.entries:
            out.setdefault(e.base_param, ())
        return {bp: self.group(bp) for bp in out}

    def subset(self, names: Sequence[str]) -> "FeatureSchema":
        return FeatureSchema(tuple(self.entries[self.index_of(n)] for n in names))


def build_default_schema() -> FeatureSchema:
    """Canonical 36-column schema: 11 parameters x avg/max/min plus 3 single counters."""
    entries = []
    for bp in BASE_PARAMS:
        if bp in SINGLE_STAT_PARAMS:
            entries.append(FeatureDescriptor(bp, Statistic.SINGLE))
        else:
            for stat in (Statistic.AVG, Statistic.MAX, Statistic.MIN):
                entries.append(FeatureDescriptor(bp, stat))
    return FeatureSchema(tuple(entries))


@dataclass(frozen=True)
class Label:
    sample_class: SampleClass
    attack_kind: AttackKind | None = None
    intensity: Intensity | None = None

    def __post_init__(self):
        is_attack = self.sample_class is SampleClass.ATTACK
        has_detail = self.attack_kind is not None and self.intensity is not None
        if is_attack != has_detail or (not is_attack and (self.attack_kind or self.intensity)):
            raise SchemaMismatch("attack_kind/intensity present iff class is Attack")

    @classmethod
    def normal(cls) -> "Label":
        return cls(SampleClass.NORMAL)

    @classmethod
    def attack(cls, kind: AttackKind, intensity: Intensity) -> "Label":
        return cls(SampleClass.ATTACK, kind, intensity)

    @property
    def is_attack(self) -> bool:
        return self.sample_class is SampleClass.ATTACK

    @property
    def code(self) -> str:
        """Compact label: 'Normal' or e.g. 'INBSTR'."""
        if not self.is_attack:
            return "Normal"
        return f"{self.attack_kind.value}{self.intensity.value}"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable labeled sample matrix; one row per OPM sample."""

    schema: FeatureSchema
    rows: np.ndarray
    labels: tuple[Label, ...]
    provenance: str = ""
    seed: int | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != len(self.schema):
            raise SchemaMismatch(
                f"rows have {rows.shape} but schema has {len(self.schema)} features"
            )
        if len(self.labels) != rows.shape[0]:
            raise SchemaMismatch("label count must equal row count")
        if rows.size and not np.all(np.isfinite(rows)):
            raise NonFiniteValue("dataset rows must be finite")
        rows = rows.copy()
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    def class_ratio(self) -> tuple[int, int]:
        attack = sum(1 for lb in self.labels if lb.is_attack)
        return self.n_samples - attack, attack

    def y(self) -> np.ndarray:
        """Binary target vector: attack = 1, normal = 0."""
        return np.fromiter((1 if lb.is_attack else 0 for lb in self.labels), dtype=np.int64)

    def take(self, indices: Sequence[int], provenance: str | None = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.schema,
            self.rows[idx],
            tuple(self.labels[i] for i in idx),
            provenance if provenance is not None else self.provenance,
            self.seed,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.schema.names == other.schema.names
            and np.array_equal(self.rows, other.rows)
            and self.labels == other.labels
        )


def concat(datasets: Sequence[Dataset], provenance: str = "") -> Dataset:
    if not datasets:
        raise SchemaMismatch("need at least one dataset to concatenate")
    names = datasets[0].schema.names
    for ds in datasets[1:]:
        if ds.schema.names != names:
            raise SchemaMismatch("datasets to concatenate must share one schema")
    rows = np.vstack([ds.rows for ds in datasets])
    labels = tuple(lb for ds in datasets for lb in ds.labels)
    return Dataset(datasets[0].schema, rows, labels, provenance)


def assemble_imbalanced(normal: Dataset, attacks: Dataset, seed: int) -> Dataset:
    """Mix all normal rows with floor(normal * 15/100) attack rows, shuffled by seed."""
    if normal.schema.names != attacks.schema.names:
        raise SchemaMismatch("normal and attack datasets must share one schema")
    n_attack = normal.n_samples * ATTACK_PER_100_NORMAL // 100
    if attacks.n_samples < n_attack:
        raise InsufficientAttackRows(
            f"need {n_attack} attack rows, pool has {attacks.n_samples}"
        )
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.permutation(attacks.n_samples)[:n_attack])
    rows = np.vstack([normal.rows, attacks.rows[picked]])
    labels = list(normal.labels) + [attacks.labels[i] for i in picked]
    order = rng.permutation(rows.shape[0])
    return Dataset(
        normal.schema,
        rows[order],
        tuple(labels[i] for i in order),
        provenance=f"assembled 100:{ATTACK_PER_100_NORMAL} from "
        f"({normal.n_samples} normal, {attacks.n_samples} attack pool)",
        seed=seed,
    )


def stratified_split(
    ds: Dataset, test_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Deterministic per-class holdout split; returns (train, test)."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    by_class: dict[str, list[int]] = {}
    for i, lb in enumerate(ds.labels):
        by_class.setdefault(lb.sample_class.value, []).append(i)
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cls in sorted(by_class):
        members = np.asarray(by_class[cls])
        if members.size < 2:
            raise DegenerateClass(f"class {cls} has {members.size} sample(s), need >= 2")
        # round-half-up, clamped so both sides keep at least one sample
        n_test = int(np.floor(members.size * test_fraction + 0.5))
        n_test = min(max(n_test, 1), members.size - 1)
        perm = rng.permutation(members.size)
        test_idx.extend(members[perm[:n_test]].tolist())
        train_idx.extend(members[perm[n_test:]].tolist())
    train_idx.sort()
    test_idx.sort()
    return ds.take(train_idx, provenance=ds.provenance), ds.take(
        test_idx, provenance=ds.provenance
    )


def _format_value(v: float) -> str:
    # repr of a Python float is the shortest decimal string that parses back
    # to the same bits, so the round trip is value-exact.
    return repr(float(v))


def write_csv(ds: Dataset, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.schema.names) + list(LABEL_COLUMNS))
        for row, lb in zip(ds.rows, ds.labels):
            writer.writerow(
                [_format_value(v) for v in row]
                + [
                    lb.sample_class.value,
                    lb.attack_kind.value if lb.attack_kind else "",
                    lb.intensity.value if lb.intensity else "",
                ]
            )


def _parse_label(fields: Sequence[str], line_no: int) -> Label:
    cls, kind, intensity = fields
    try:
        if cls == SampleClass.NORMAL.value:
            if kind or intensity:
                raise ValueError
            return Label.normal()
        if cls == SampleClass.ATTACK.value:
            return Label.attack(AttackKind(kind), Intensity(intensity))
    except ValueError:
        pass
    raise MalformedRow(f"line {line_no}: bad label fields {fields!r}")


def read_csv(path: str | Path, schema: FeatureSchema) -> Dataset:
    path = Path(path)
    expected = list(schema.names) + list(LABEL_COLUMNS)
    rows: list[list[float]] = []
    labels: list[Label] = []
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HeaderMismatch("empty file") from None
        if header != expected:
            raise HeaderMismatch(
                f"header does not match schema: got {header[:4]}..., "
                f"expected {expected[:4]}..."
            )
        n = len(schema)
        for line_no, rec in enumerate(reader, start=2):
            if len(rec) != n + len(LABEL_COLUMNS):
                raise MalformedRow(f"line {line_no}: expected {n + 3} fields, got {len(rec)}")
            try:
                values = [float(v) for v in rec[:n]]
            except ValueError as exc:
                raise MalformedRow(f"line {line_no}: {exc}") from None
            if not all(np.isfinite(values)):
                raise NonFiniteValue(f"line {line_no}: non-finite value")
            rows.append(values)
            labels.append(_parse_label(rec[n:], line_no))
    matrix = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, len(schema)))
    return Dataset(schema, matrix, tuple(labels), provenance=f"read from {path.name}")
