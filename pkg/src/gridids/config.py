"""Experiment configuration: a flat ``key = value`` text file.

Blank lines and ``#`` comments are ignored.  Lists are comma separated.
Per-layer forest overrides use ``layer1.<param>`` / ``layer2.<param>``.
See ``CONFIG_KEYS`` for every accepted key.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .dataset import Imputation
from .errors import ConfigError
from .forest import Criterion, ForestParams, MaxFeatures
from .preprocess import ScalerKind
from .resample import Method
from .schema import DEFAULT_LABEL_COLUMN

MODEL_KINDS = ("flat", "hierarchical", "primary-default")
FOREST_KEYS = ("n_estimators", "max_features", "criterion", "max_depth", "min_samples_split", "bootstrap")


@dataclass(frozen=True)
class ExperimentConfig:
    inputs: tuple[str, ...] = ()
    demo: bool = False
    demo_rows: int = 200
    demo_separation: float = 1.0
    label_column: str = DEFAULT_LABEL_COLUMN
    drop_logs: bool = True
    drop_list: Optional[tuple[str, ...]] = None  # None: every log_or_status column of the schema
    apparent_power: bool = False
    phasor_groups: Optional[tuple[tuple[str, ...], ...]] = None  # None: the default 12 groups
    imputation: Imputation = Imputation.ZERO
    impute_fit_on_train: bool = False
    scaler: ScalerKind = ScalerKind.STANDARD
    scale_before_resample: bool = True
    resampler: Method = Method.BORDERLINE
    k_neighbors: int = 5
    m_neighbors: int = 10
    target_count: Optional[int] = None
    adasyn_cap: bool = True
    resample_before_split: bool = False
    train_fraction: float = 0.8
    stratified: bool = True
    seed: int = 0
    model: str = "hierarchical"
    baselines: tuple[str, ...] = ()
    n_estimators: int = 330
    max_features: MaxFeatures = MaxFeatures.LOG2
    criterion: Criterion = Criterion.GINI
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    bootstrap: bool = True
    layer1: dict = field(default_factory=dict)
    layer2: dict = field(default_factory=dict)
    top_n: int = 10
    out: Optional[str] = None
    model_out: Optional[str] = None

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        for b in self.baselines:
            if b not in ("flat", "hierarchical"):
                raise ConfigError(f"unknown baseline {b!r}")
        for key in (*self.layer1, *self.layer2):
            if key not in FOREST_KEYS:
                raise ConfigError(f"unknown per-layer forest key {key!r}")
        for g in self.phasor_groups or ():
            if len(g) != 6:
                raise ConfigError(f"phasor group needs 6 names (V mag, V angle, I mag, I angle, S mag, S angle): {g}")
        if not self.demo and not self.inputs:
            raise ConfigError("no input files given (set inputs or demo)")

    @property
    def model_kind(self) -> str:
        return "hierarchical" if self.model == "primary-default" else self.model

    def forest_params(self, layer: Optional[str] = None, seed: int = 0) -> ForestParams:
        base = {k: getattr(self, k) for k in FOREST_KEYS}
        if layer is not None:
            base.update(getattr(self, layer))
        return ForestParams(seed=seed, **base)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if hasattr(v, "value"):
                v = v.value
            elif isinstance(v, tuple):
                v = [list(x) if isinstance(x, tuple) else x for x in v]
            elif isinstance(v, dict):
                v = {k: (x.value if hasattr(x, "value") else x) for k, x in sorted(v.items())}
            out[f.name] = v
        return out


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _opt_int(s: str) -> Optional[int]:
    return None if s.strip().lower() in ("", "none", "null") else int(s)


def _list(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _opt_list(s: str) -> Optional[tuple[str, ...]]:
    return None if s.strip().lower() in ("default", "none") else _list(s)


def _groups(s: str) -> Optional[tuple[tuple[str, ...], ...]]:
    # groups split on ';', names within a group on '|' (feature names contain ':')
    if s.strip().lower() in ("default", "none"):
        return None
    return tuple(tuple(n.strip() for n in g.split("|")) for g in s.split(";") if g.strip())


def _opt_str(s: str) -> Optional[str]:
    return None if s.strip().lower() in ("", "none") else s.strip()


_PARSERS = {
    "inputs": _list,
    "demo": _bool,
    "demo_rows": int,
    "demo_separation": float,
    "label_column": str.strip,
    "drop_logs": _bool,
    "drop_list": _opt_list,
    "apparent_power": _bool,
    "phasor_groups": _groups,
    "imputation": Imputation,
    "impute_fit_on_train": _bool,
    "scaler": ScalerKind,
    "scale_before_resample": _bool,
    "resampler": Method,
    "k_neighbors": int,
    "m_neighbors": int,
    "target_count": _opt_int,
    "adasyn_cap": _bool,
    "resample_before_split": _bool,
    "train_fraction": float,
    "stratified": _bool,
    "seed": int,
    "model": str.strip,
    "baselines": _list,
    "n_estimators": int,
    "max_features": MaxFeatures,
    "criterion": Criterion,
    "max_depth": _opt_int,
    "min_samples_split": int,
    "bootstrap": _bool,
    "top_n": int,
    "out": _opt_str,
    "model_out": _opt_str,
}

CONFIG_KEYS = tuple(_PARSERS) + tuple(f"layer{i}.{k}" for i in (1, 2) for k in FOREST_KEYS)


def parse_value(key: str, raw: str):
    """Convert the text form of ``key`` to its typed value."""
    if key.startswith(("layer1.", "layer2.")):
        _, sub = key.split(".", 1)
        if sub not in FOREST_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        return _PARSERS[sub](raw.strip())
    if key not in _PARSERS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return _PARSERS[key](raw.strip())
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None


def parse_config_text(text: str) -> dict:
    values: dict = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, raw = (p.strip() for p in line.split("=", 1))
        values[key] = parse_value(key, raw)
    return values


def build_config(values: dict) -> ExperimentConfig:
    layers = {"layer1": {}, "layer2": {}}
    plain = {}
    for key, v in values.items():
        if key.startswith(("layer1.", "layer2.")):
            layer, sub = key.split(".", 1)
            layers[layer][sub] = v
        else:
            plain[key] = v
    return ExperimentConfig(**plain, **layers)


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    values.update(overrides or {})
    return build_config(values)
