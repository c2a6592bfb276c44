"""Seeded synthetic data shaped like the 37-class, 128-feature PMU dataset.

Each class is a Gaussian cluster over the phasor measurements.  Impedance,
frequency, status and log columns carry no class signal, so they should
rank low on impurity-based importance.  A small fraction of measurement
cells is blanked (NaN/inf) to exercise imputation.
"""

from __future__ import annotations

import re

import numpy as np

from .dataset import LabelTaxonomy, RawDataset
from .preprocess import wrap_degrees
from .schema import FeatureSchema, default_schema

# Most/least populated classes in the real data (4685 and 1242 rows).
MAJORITY_CLASS = 36
MINORITY_CLASS = 21
IMBALANCE_RATIO = 3.7


def class_counts(labels, max_rows: int, ratio: float, rng: np.random.Generator) -> dict[int, int]:
    """Counts spaced evenly from ``max_rows`` down to ``max_rows / ratio``.

    The majority/minority classes of the real data get the extremes; the
    other classes get the intermediate levels in seeded random order.
    """
    labels = sorted(labels)
    min_rows = max(int(round(max_rows / ratio)), 2)
    levels = np.linspace(max_rows, min_rows, len(labels)).round().astype(int)
    rest = [l for l in labels if l not in (MAJORITY_CLASS, MINORITY_CLASS)]
    rest = [rest[i] for i in rng.permutation(len(rest))]
    ordered = ([MAJORITY_CLASS] if MAJORITY_CLASS in labels else []) + rest \
        + ([MINORITY_CLASS] if MINORITY_CLASS in labels else [])
    return {l: int(c) for l, c in sorted(zip(ordered, levels))}


def generate_demo(seed: int = 0, max_class_rows: int = 200, imbalance: float = IMBALANCE_RATIO,
                  separation: float = 1.0, group_shift: float = 1.5, missing_rate: float = 0.002,
                  taxonomy: LabelTaxonomy = LabelTaxonomy(), schema: FeatureSchema | None = None) -> RawDataset:
    """Imbalanced synthetic dataset over the default 128-column schema.

    ``separation`` scales class-mean offsets in units of the within-class
    noise, per measurement column.  ``group_shift`` moves all natural-event
    classes together (and all attack classes the opposite way) along a
    shared random direction, in the same units.
    """
    schema = default_schema() if schema is None else schema
    rng = np.random.default_rng(seed)
    labels = sorted(taxonomy.labels)
    counts = class_counts(labels, max_class_rows, imbalance, rng)
    names = schema.feature_names
    n_feat = len(names)

    is_angle = np.array([bool(re.search(r"-PA\d+:", n)) for n in names])
    is_mag = np.array([bool(re.search(r"-PM\d+:", n)) for n in names])
    is_volt = np.array([n.endswith(":V") for n in names])
    informative = is_angle | is_mag

    base = np.zeros(n_feat)
    noise = np.ones(n_feat)
    base[is_mag & is_volt] = 130_000.0
    noise[is_mag & is_volt] = 1_500.0
    base[is_mag & ~is_volt] = 400.0
    noise[is_mag & ~is_volt] = 25.0
    base[is_angle] = rng.uniform(-180, 180, size=is_angle.sum())
    noise[is_angle] = 6.0

    direction = rng.choice([-0.5, 0.5], size=n_feat) * group_shift * noise * informative
    blocks, ys = [], []
    for label in labels:
        n = counts[label]
        offset = rng.normal(size=n_feat) * separation * noise * informative
        side = 1.0 if label in taxonomy.natural_labels else -1.0
        mean = base + offset + side * direction
        x = mean + rng.normal(size=(n, n_feat)) * noise * informative
        blocks.append(x)
        ys.append(np.full(n, label, dtype=np.int64))
    x = np.concatenate(blocks)
    y = np.concatenate(ys)
    n = x.shape[0]

    x[:, is_angle] = wrap_degrees(x[:, is_angle])
    x[:, is_mag] = np.abs(x[:, is_mag])
    for j, name in enumerate(names):
        if informative[j]:
            continue
        if name.endswith("-F"):
            x[:, j] = 60.0 + rng.normal(scale=0.01, size=n)
        elif name.endswith("-DF"):
            x[:, j] = rng.normal(scale=0.002, size=n)
        elif name.endswith("PA:Z"):
            x[:, j] = np.abs(rng.normal(8.0, 2.0, size=n))
        elif name.endswith("PA:ZH"):
            x[:, j] = rng.uniform(-180, 180, size=n)
        else:  # logs and status flags
            x[:, j] = (rng.random(n) < 0.02).astype(float)

    if missing_rate > 0:
        hit = (rng.random((n, n_feat)) < missing_rate) & informative[None, :]
        kinds = rng.integers(0, 3, size=hit.sum())
        x[hit] = np.array([np.nan, np.inf, -np.inf])[kinds]

    order = rng.permutation(n)
    return RawDataset(schema, x[order], y[order])


def gaussian_clusters(n_classes: int, rows_per_class: int, n_features: int, separation: float,
                      seed: int = 0, sigma: float = 1.0):
    """Class c is centred ``separation * sigma`` along its own axis (cycled if classes > features)."""
    rng = np.random.default_rng(seed)
    means = np.zeros((n_classes, n_features))
    for c in range(n_classes):
        means[c, c % n_features] += separation * sigma * (1 + c // n_features)
    y = np.repeat(np.arange(n_classes), rows_per_class)
    x = means[y] + rng.normal(scale=sigma, size=(y.shape[0], n_features))
    order = rng.permutation(y.shape[0])
    return x[order], y[order]
