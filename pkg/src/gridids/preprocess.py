"""Feature scaling, log/status column removal and apparent-power fusion."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .errors import DimensionMismatch, OutputNameCollision
from .schema import MEASUREMENT, FeatureSchema, PhasorQuadruple


class ScalerKind(str, Enum):
    STANDARD = "standard"
    MEAN_NORM = "mean-normalization"
    MINMAX = "minmax"


@dataclass(frozen=True, eq=False)
class ScalerParams:
    kind: ScalerKind
    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray

    def __len__(self) -> int:
        return self.mean.shape[0]


def fit_scaler(train: Dataset, kind: ScalerKind | str = ScalerKind.STANDARD) -> ScalerParams:
    if train.n_rows == 0:
        raise ValueError("cannot fit a scaler on an empty dataset")
    x = train.values
    return ScalerParams(
        kind=ScalerKind(kind),
        mean=x.mean(axis=0),
        std=x.std(axis=0),  # population (ddof=0)
        min=x.min(axis=0),
        max=x.max(axis=0),
    )


def apply_scaler(params: ScalerParams, data: Dataset) -> Dataset:
    """Scale each column; a column with zero spread maps to all zeros."""
    if data.n_features != len(params):
        raise DimensionMismatch(f"scaler fitted on {len(params)} features, data has {data.n_features}")
    x = data.values
    if params.kind is ScalerKind.STANDARD:
        shift, denom = params.mean, params.std
    elif params.kind is ScalerKind.MEAN_NORM:
        shift, denom = params.mean, params.max - params.min
    else:
        shift, denom = params.min, params.max - params.min
    degenerate = denom == 0
    safe = np.where(degenerate, 1.0, denom)
    out = (x - shift) / safe
    out[:, degenerate] = 0.0
    return Dataset(data.schema, out, data.labels)


def drop_features(data: Dataset, names: Sequence[str]) -> Dataset:
    drop = {data.schema.index(n) for n in names}
    keep = [j for j in range(data.n_features) if j not in drop]
    return Dataset(data.schema.subset(keep), data.values[:, keep], data.labels)


def wrap_degrees(angle):
    """Map angles into (-180, 180]."""
    a = np.mod(np.asarray(angle, dtype=np.float64), 360.0)
    return np.where(a > 180.0, a - 360.0, a)


def derive_apparent_power(data: Dataset, groups: Sequence[PhasorQuadruple]) -> Dataset:
    """Replace each V/I phasor quadruple by apparent power magnitude and angle.

    ``|S| = |V| * |I|`` and ``angle(S) = angle(V) - angle(I)`` wrapped into
    (-180, 180] degrees.  New columns are appended after the survivors, in
    group order (magnitude first).
    """
    schema = data.schema
    sources: set[str] = set()
    for g in groups:
        for name in g.sources:
            schema.index(name)
            if name in sources:
                raise ValueError(f"feature {name} appears in more than one phasor group")
            sources.add(name)

    kept = [j for j, n in enumerate(schema.feature_names) if n not in sources]
    taken = {schema.feature_names[j] for j in kept}
    new_names: list[str] = []
    for g in groups:
        for out in (g.s_mag_feature, g.s_angle_feature):
            if out in taken or out in new_names:
                raise OutputNameCollision(out)
            new_names.append(out)

    x = data.values
    new_cols = []
    for g in groups:
        vm, va, im, ia = (x[:, schema.index(n)] for n in g.sources)
        new_cols.append(vm * im)
        new_cols.append(wrap_degrees(va - ia))

    values = np.column_stack([x[:, kept]] + new_cols) if new_cols else x[:, kept]
    new_schema = FeatureSchema(
        tuple(schema.feature_names[j] for j in kept) + tuple(new_names),
        tuple(schema.feature_kinds[j] for j in kept) + (MEASUREMENT,) * len(new_names),
        schema.label_column,
    )
    return Dataset(new_schema, values, data.labels)
