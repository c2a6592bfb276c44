"""Raw CSV ingestion, missing-value imputation, label taxonomy and splits."""

from __future__ import annotations

import csv
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AllMissingColumn,
    ClassTooSmall,
    EmptyFile,
    EmptyResult,
    LabelParse,
    LengthMismatch,
    MissingColumn,
    UnknownLabel,
)
from .schema import DEFAULT_ATTACK_LABELS, DEFAULT_NATURAL_LABELS, FeatureSchema

MISSING_TOKENS = frozenset(["", "nan", "NaN", "NAN", "inf", "-inf", "+inf", "Inf", "-Inf", "+Inf"])


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RawDataset:
    """Feature values with NaN marking missing cells."""

    schema: FeatureSchema
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if values.ndim != 2:
            values = values.reshape(len(labels), len(self.schema))
        if values.shape[0] != labels.shape[0]:
            raise LengthMismatch(f"{values.shape[0]} rows but {labels.shape[0]} labels")
        if values.shape[1] != len(self.schema):
            raise LengthMismatch(f"{values.shape[1]} columns but schema has {len(self.schema)}")
        # only NaN is used internally as the missing marker
        values = np.where(np.isfinite(values), values, np.nan)
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)


@dataclass(frozen=True, eq=False)
class Dataset:
    schema: FeatureSchema
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if values.ndim == 1 and labels.shape[0] == 0:
            values = values.reshape(0, len(self.schema))
        if values.ndim != 2 or values.shape[0] != labels.shape[0]:
            raise LengthMismatch(f"values {values.shape} vs labels {labels.shape}")
        if values.shape[1] != len(self.schema):
            raise LengthMismatch(f"{values.shape[1]} columns but schema has {len(self.schema)}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Dataset values must not contain missing entries")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.schema, self.values[rows], self.labels[rows])

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.schema, self.values, labels)


@dataclass(frozen=True)
class LabelTaxonomy:
    natural_labels: frozenset[int] = DEFAULT_NATURAL_LABELS
    attack_labels: frozenset[int] = DEFAULT_ATTACK_LABELS
    natural_marker: int = 1
    attack_marker: int = 0

    def __post_init__(self):
        nat = frozenset(int(x) for x in self.natural_labels)
        att = frozenset(int(x) for x in self.attack_labels)
        if nat & att:
            raise ValueError(f"labels in both groups: {sorted(nat & att)}")
        object.__setattr__(self, "natural_labels", nat)
        object.__setattr__(self, "attack_labels", att)

    @property
    def labels(self) -> frozenset[int]:
        return self.natural_labels | self.attack_labels

    def check(self, labels: Iterable[int]) -> None:
        unknown = set(np.unique(np.asarray(labels, dtype=np.int64)).tolist()) - self.labels
        if unknown:
            raise UnknownLabel(f"labels outside taxonomy: {sorted(unknown)}")

    def is_natural(self, labels) -> np.ndarray:
        return np.isin(np.asarray(labels), list(self.natural_labels))

    def restricted_to(self, observed: Iterable[int]) -> "LabelTaxonomy":
        """Taxonomy limited to the labels that actually occur in the data."""
        obs = set(int(x) for x in observed)
        return LabelTaxonomy(
            self.natural_labels & obs, self.attack_labels & obs, self.natural_marker, self.attack_marker
        )


@dataclass(frozen=True)
class ClassDistribution:
    counts: dict[int, int]

    @property
    def n_c(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def proportions(self) -> dict[int, float]:
        total = self.total
        return {k: v / total for k, v in self.counts.items()}

    @classmethod
    def from_counts(cls, counts) -> "ClassDistribution":
        if isinstance(counts, dict):
            return cls({int(k): int(v) for k, v in sorted(counts.items())})
        return cls({i: int(c) for i, c in enumerate(counts)})


# ---------------------------------------------------------------- loading


def _parse_cell(token: str) -> float:
    token = token.strip()
    if token in MISSING_TOKENS:
        return math.nan
    try:
        value = float(token)
    except ValueError:
        return math.nan
    return value if math.isfinite(value) else math.nan


def _parse_label(token: str, line_no: int) -> int:
    try:
        return int(token.strip())
    except ValueError:
        raise LabelParse(f"line {line_no}: label {token!r} is not an integer") from None


def load_csv(path, schema: FeatureSchema) -> RawDataset:
    """Read one CSV file; columns are matched to the schema by header name."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(str(path))
        header = [h.strip() for h in header]
        positions = {name: i for i, name in enumerate(header)}
        wanted = list(schema.feature_names) + [schema.label_column]
        missing = [n for n in wanted if n not in positions]
        if missing:
            raise MissingColumn(f"{path}: header lacks {missing[:5]}{'...' if len(missing) > 5 else ''}")
        cols = [positions[n] for n in schema.feature_names]
        label_col = positions[schema.label_column]

        rows, labels = [], []
        for line_no, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            record = record + [""] * (len(header) - len(record))
            rows.append([_parse_cell(record[c]) for c in cols])
            labels.append(_parse_label(record[label_col], line_no))
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    return RawDataset(schema, np.array(rows, dtype=np.float64), np.array(labels, dtype=np.int64))


def concat(parts: Sequence[RawDataset]) -> RawDataset:
    if not parts:
        raise EmptyFile("no input datasets")
    schema = parts[0].schema
    for p in parts[1:]:
        if p.schema != schema:
            raise ValueError("cannot concatenate datasets with different schemas")
    return RawDataset(
        schema,
        np.concatenate([p.values for p in parts]),
        np.concatenate([p.labels for p in parts]),
    )


def load_csvs(paths: Sequence, schema: FeatureSchema) -> RawDataset:
    """Load several files and stack their rows in argument order."""
    return concat([load_csv(p, schema) for p in paths])


def write_csv(path, data: RawDataset | Dataset) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(data.schema.feature_names) + [data.schema.label_column])
        for row, label in zip(data.values, data.labels):
            w.writerow(["NaN" if math.isnan(v) else repr(float(v)) for v in row] + [int(label)])


# ------------------------------------------------------------- imputation


class Imputation(str, Enum):
    MEAN = "mean"
    MEDIAN = "median"
    DROP = "drop"
    ZERO = "zero"


def impute_missing(raw: RawDataset, policy: Imputation | str = Imputation.ZERO, stats_rows=None) -> Dataset:
    """Fill or drop missing cells.

    ``stats_rows`` restricts the rows used to compute column means/medians
    (leak-free mode: pass the training indices).  By default every row is used.
    """
    policy = Imputation(policy)
    values = np.array(raw.values, dtype=np.float64)
    missing = np.isnan(values)

    if policy is Imputation.DROP:
        keep = ~missing.any(axis=1)
        if not keep.any():
            raise EmptyResult("drop policy removed every row")
        return Dataset(raw.schema, values[keep], raw.labels[keep])

    if policy is Imputation.ZERO:
        values[missing] = 0.0
        return Dataset(raw.schema, values, raw.labels)

    ref = values if stats_rows is None else values[np.asarray(stats_rows)]
    present = ~np.isnan(ref)
    empty = ~present.any(axis=0)
    cols_needing = missing.any(axis=0)
    bad = np.flatnonzero(empty & cols_needing)
    if bad.size:
        names = [raw.schema.feature_names[j] for j in bad[:5]]
        raise AllMissingColumn(f"no present values to impute from in {names}")
    with warnings.catch_warnings():
        # all-NaN columns that need no filling would warn here
        warnings.simplefilter("ignore", RuntimeWarning)
        fill = np.nanmean(ref, axis=0) if policy is Imputation.MEAN else np.nanmedian(ref, axis=0)
    rows, cols = np.nonzero(missing)
    values[rows, cols] = fill[cols]
    return Dataset(raw.schema, values, raw.labels)


# ---------------------------------------------------------------- splitting


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_indices(labels, train_fraction: float, seed: int, stratified: bool = True):
    """Return sorted (train_idx, test_idx) for a seeded split of ``labels``."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    labels = np.asarray(labels)
    n = labels.shape[0]
    rng = np.random.default_rng(seed)
    if not stratified:
        if n < 2:
            raise ClassTooSmall("need at least 2 rows to split")
        perm = rng.permutation(n)
        n_train = min(max(_round_half_up(train_fraction * n), 1), n - 1)
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])

    train_parts, test_parts = [], []
    classes, counts = np.unique(labels, return_counts=True)
    small = classes[counts < 2]
    if small.size:
        raise ClassTooSmall(f"classes with a single row cannot be split: {small.tolist()}")
    for cls, count in zip(classes, counts):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(count)]
        n_train = min(max(_round_half_up(train_fraction * count), 1), count - 1)
        train_parts.append(idx[:n_train])
        test_parts.append(idx[n_train:])
    return np.sort(np.concatenate(train_parts)), np.sort(np.concatenate(test_parts))


def split_train_test(data: Dataset, train_fraction: float = 0.8, seed: int = 0, stratified: bool = True):
    train_idx, test_idx = split_indices(data.labels, train_fraction, seed, stratified)
    return data.take(train_idx), data.take(test_idx)


def class_population(data: Dataset | RawDataset | np.ndarray) -> ClassDistribution:
    labels = data if isinstance(data, np.ndarray) else data.labels
    labels = np.asarray(labels)
    if labels.size == 0:
        raise EmptyResult("class_population of an empty dataset")
    counts = Counter(int(x) for x in labels)
    return ClassDistribution(dict(sorted(counts.items())))
