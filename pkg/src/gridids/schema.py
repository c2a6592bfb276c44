"""Default feature layout of the 4-PMU power-system attack dataset.

Each relay/PMU ``R1``..``R4`` reports 12 phasors (magnitude ``PM<k>`` and
angle ``PA<k>``): phase voltages A/B/C (k=1..3), phase currents A/B/C
(k=4..6), sequence voltages (k=7..9) and sequence currents (k=10..12).
Each PMU also reports impedance magnitude/angle, frequency, frequency
delta and a status flag.  Twelve control-panel, relay and snort log
columns follow the four PMU blocks.  That is 4 * 29 + 12 = 128 features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownFeature

MEASUREMENT = "measurement"
LOG_OR_STATUS = "log_or_status"

N_PMUS = 4
DEFAULT_LABEL_COLUMN = "marker"

# Scenario taxonomy: natural events vs attack scenarios.
DEFAULT_NATURAL_LABELS = frozenset([1, 2, 3, 4, 5, 6, 13, 14, 41])
DEFAULT_ATTACK_LABELS = frozenset(
    list(range(7, 13)) + list(range(15, 31)) + list(range(35, 41))
)


@dataclass(frozen=True)
class FeatureSchema:
    feature_names: tuple[str, ...]
    feature_kinds: tuple[str, ...]
    label_column: str = DEFAULT_LABEL_COLUMN

    def __post_init__(self):
        names = tuple(self.feature_names)
        kinds = tuple(self.feature_kinds)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "feature_kinds", kinds)
        if len(names) != len(kinds):
            raise ValueError("feature_names and feature_kinds differ in length")
        if any(not n for n in names):
            raise ValueError("feature names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        bad = set(kinds) - {MEASUREMENT, LOG_OR_STATUS}
        if bad:
            raise ValueError(f"unknown feature kinds: {sorted(bad)}")
        if self.label_column in names:
            raise ValueError("label column cannot also be a feature")

    def __len__(self) -> int:
        return len(self.feature_names)

    def index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise UnknownFeature(name) from None

    @property
    def log_or_status(self) -> list[str]:
        return [n for n, k in zip(self.feature_names, self.feature_kinds) if k == LOG_OR_STATUS]

    def subset(self, keep: list[int]) -> "FeatureSchema":
        return FeatureSchema(
            tuple(self.feature_names[i] for i in keep),
            tuple(self.feature_kinds[i] for i in keep),
            self.label_column,
        )

    @classmethod
    def plain(cls, names, label_column: str = DEFAULT_LABEL_COLUMN) -> "FeatureSchema":
        """Schema where every column is a measurement."""
        names = tuple(names)
        return cls(names, (MEASUREMENT,) * len(names), label_column)


@dataclass(frozen=True)
class PhasorQuadruple:
    v_mag_feature: str
    v_angle_feature: str
    i_mag_feature: str
    i_angle_feature: str
    s_mag_feature: str
    s_angle_feature: str

    @property
    def sources(self) -> tuple[str, str, str, str]:
        return (self.v_mag_feature, self.v_angle_feature, self.i_mag_feature, self.i_angle_feature)


def _pmu_block(r: int) -> list[tuple[str, str]]:
    cols = []
    for k in range(1, 13):
        kind = "V" if k in (1, 2, 3, 7, 8, 9) else "I"
        cols.append((f"R{r}-PA{k}:{kind}H", MEASUREMENT))
        cols.append((f"R{r}-PM{k}:{kind}", MEASUREMENT))
    # impedance, frequency and status are not phasor measurements; they are
    # dropped together with the logs in the 128 -> 96 reduction
    for name in ("PA:Z", "PA:ZH", "F", "DF", "S"):
        cols.append((f"R{r}-{name}", LOG_OR_STATUS))
    return cols


def default_schema(label_column: str = DEFAULT_LABEL_COLUMN) -> FeatureSchema:
    cols: list[tuple[str, str]] = []
    for r in range(1, N_PMUS + 1):
        cols.extend(_pmu_block(r))
    for r in range(1, N_PMUS + 1):
        cols.append((f"control_panel_log{r}", LOG_OR_STATUS))
    for r in range(1, N_PMUS + 1):
        cols.append((f"relay{r}_log", LOG_OR_STATUS))
    for r in range(1, N_PMUS + 1):
        cols.append((f"snort_log{r}", LOG_OR_STATUS))
    names, kinds = zip(*cols)
    return FeatureSchema(names, kinds, label_column)


def default_drop_list() -> list[str]:
    return default_schema().log_or_status


def default_phasor_groups() -> list[PhasorQuadruple]:
    """Phase voltage/current pairs: 3 phases x 4 PMUs = 12 groups."""
    groups = []
    for r in range(1, N_PMUS + 1):
        for phase, (kv, ki) in enumerate(((1, 4), (2, 5), (3, 6)), start=1):
            groups.append(
                PhasorQuadruple(
                    v_mag_feature=f"R{r}-PM{kv}:V",
                    v_angle_feature=f"R{r}-PA{kv}:VH",
                    i_mag_feature=f"R{r}-PM{ki}:I",
                    i_angle_feature=f"R{r}-PA{ki}:IH",
                    s_mag_feature=f"R{r}-SM{phase}:S",
                    s_angle_feature=f"R{r}-SA{phase}:SH",
                )
            )
    return groups
