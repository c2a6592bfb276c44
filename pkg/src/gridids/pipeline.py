"""End-to-end experiment runner, parameter sweeps and plot-data export."""

from __future__ import annotations

import json
import logging
import time
import warnings
import zlib
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ExperimentConfig, parse_value
from .dataset import (
    Dataset,
    Imputation,
    LabelTaxonomy,
    RawDataset,
    class_population,
    impute_missing,
    load_csvs,
    split_indices,
)
from .demo import generate_demo
from .errors import GridIDSError, MissingSection, StageError
from .forest import Forest, dump_json, forest_from_dict, forest_to_dict, importance_ranking, load_json, train_forest
from .hierarchy import (
    NATURAL,
    HierarchicalModel,
    evaluate_flat,
    evaluate_hierarchical,
    model_from_dict,
    model_to_dict,
    train_hierarchical,
)
from .preprocess import ScalerKind, ScalerParams, apply_scaler, derive_apparent_power, drop_features, fit_scaler
from .resample import Method, ResampleConfig, resample
from .schema import FeatureSchema, PhasorQuadruple, default_phasor_groups, default_schema

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
BUNDLE_FORMAT = "gridids-pipeline"
BUNDLE_VERSION = 1

SWEEP_AXES = {
    "imputation": "imputation",
    "resampler": "resampler",
    "scaler": "scaler",
    "max_features": "max_features",
    "criterion": "criterion",
    "n_estimators": "n_estimators",
}


def derive_seed(seed: int, stage: str) -> int:
    """Independent per-stage seed from the experiment seed and a stage name."""
    ss = np.random.SeedSequence([int(seed) % (1 << 63), zlib.crc32(stage.encode())])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


@contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = round(time.perf_counter() - start, 6)


def _population(labels) -> dict:
    return {str(k): v for k, v in class_population(labels).counts.items()}


def _shape(name: str, data) -> dict:
    return {"stage": name, "rows": int(data.values.shape[0]), "features": int(data.values.shape[1])}


@dataclass(frozen=True)
class FittedPreprocessing:
    """Everything needed to push new raw rows through the trained pipeline."""

    schema: FeatureSchema
    imputation: Imputation
    fill_values: Optional[np.ndarray]
    dropped: tuple[str, ...]
    phasor_groups: tuple[PhasorQuadruple, ...]
    scaler: ScalerParams

    def transform(self, raw: RawDataset) -> tuple[Dataset, np.ndarray]:
        """Returns the model-ready rows and the raw row indices they came from."""
        values = np.array(raw.values)
        keep = np.arange(raw.n_rows)
        missing = np.isnan(values)
        if self.imputation is Imputation.DROP:
            keep = np.flatnonzero(~missing.any(axis=1))
            values = values[keep]
        elif self.imputation is Imputation.ZERO:
            values[missing] = 0.0
        else:
            rows, cols = np.nonzero(missing)
            values[rows, cols] = self.fill_values[cols]
        data = Dataset(raw.schema, values, raw.labels[keep])
        if self.dropped:
            data = drop_features(data, self.dropped)
        if self.phasor_groups:
            data = derive_apparent_power(data, self.phasor_groups)
        return apply_scaler(self.scaler, data), keep


def _fill_values(raw: RawDataset, policy: Imputation, rows) -> Optional[np.ndarray]:
    if policy not in (Imputation.MEAN, Imputation.MEDIAN):
        return None
    ref = raw.values if rows is None else raw.values[rows]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fill = np.nanmean(ref, axis=0) if policy is Imputation.MEAN else np.nanmedian(ref, axis=0)
    return np.nan_to_num(fill, nan=0.0)


def _load(cfg: ExperimentConfig, seed: int) -> RawDataset:
    if cfg.demo:
        raw = generate_demo(seed=seed, max_class_rows=cfg.demo_rows, separation=cfg.demo_separation)
        if cfg.label_column != raw.schema.label_column:
            schema = FeatureSchema(raw.schema.feature_names, raw.schema.feature_kinds, cfg.label_column)
            raw = RawDataset(schema, raw.values, raw.labels)
        return raw
    return load_csvs(cfg.inputs, default_schema(cfg.label_column))


def _resample_cfg(cfg: ExperimentConfig, seed: int) -> ResampleConfig:
    return ResampleConfig(
        method=cfg.resampler,
        k_neighbors=cfg.k_neighbors,
        m_neighbors=cfg.m_neighbors,
        target_count=cfg.target_count,
        seed=seed,
        adasyn_cap=cfg.adasyn_cap,
    )


def _ranking(forest: Forest, top: int) -> list:
    return [[name, value] for name, value in importance_ranking(forest, top)]


def _train_and_score(kind: str, cfg: ExperimentConfig, seeds: dict, train: Dataset, test: Dataset,
                     taxonomy: LabelTaxonomy):
    if kind == "flat":
        params = cfg.forest_params(seed=seeds["flat"])
        model = train_forest(train, params)
        metrics = evaluate_flat(model, test, taxonomy)
        info = {"kind": "flat", "params": params.to_dict()}
        importance = {"flat": _ranking(model, cfg.top_n)}
    else:
        p1 = cfg.forest_params("layer1", seed=seeds["layer1"])
        p2 = cfg.forest_params("layer2", seed=seeds["layer2"])
        model = train_hierarchical(train, taxonomy, p1, p2)
        metrics = evaluate_hierarchical(model, test)
        info = {"kind": "hierarchical", "layer1_params": p1.to_dict(), "layer2_params": p2.to_dict()}
        importance = {"layer1": _ranking(model.layer1, cfg.top_n), "layer2": _ranking(model.layer2, cfg.top_n)}
    return model, info, metrics, importance


def _comparison_row(name: str, metrics: dict) -> dict:
    binary = metrics.get("layer1") or metrics.get("binary_collapsed")
    return {
        "model": name,
        "overall_accuracy": metrics["overall_accuracy"],
        "binary_accuracy": binary["accuracy"],
        "attack_only_accuracy": metrics["attack_only_accuracy"],
    }


def fit_pipeline(cfg: ExperimentConfig):
    """Run every stage; returns (report, preprocessing, trained primary model)."""
    timings: dict = {}
    stages: list = []
    seeds = {"experiment": cfg.seed}
    for name in ("demo", "split", "resample", "flat", "layer1", "layer2"):
        seeds[name] = derive_seed(cfg.seed, name)
    populations: dict = {}

    with _stage("load", timings):
        raw = _load(cfg, seeds["demo"])
    stages.append(_shape("load", raw))
    populations["raw"] = _population(raw.labels)

    with _stage("taxonomy", timings):
        taxonomy = LabelTaxonomy()
        taxonomy.check(raw.labels)
        taxonomy = taxonomy.restricted_to(np.unique(raw.labels).tolist())

    with _stage("impute", timings):
        stats_rows = None
        if cfg.impute_fit_on_train and cfg.imputation in (Imputation.MEAN, Imputation.MEDIAN):
            stats_rows, _ = split_indices(raw.labels, cfg.train_fraction, seeds["split"], cfg.stratified)
        data = impute_missing(raw, cfg.imputation, stats_rows)
        fill = _fill_values(raw, cfg.imputation, stats_rows)
    stages.append(_shape("impute", data))

    is_default_schema = raw.schema.feature_names == default_schema().feature_names
    dropped: tuple = ()
    if cfg.drop_logs:
        with _stage("drop_logs", timings):
            dropped = tuple(cfg.drop_list) if cfg.drop_list is not None else tuple(data.schema.log_or_status)
            data = drop_features(data, dropped)
        stages.append(_shape("drop_logs", data))
        if is_default_schema and cfg.drop_list is None:
            assert data.n_features == 96, data.n_features

    groups: tuple = ()
    if cfg.apparent_power:
        with _stage("apparent_power", timings):
            if cfg.phasor_groups is None:
                groups = tuple(default_phasor_groups())
            else:
                groups = tuple(PhasorQuadruple(*g) for g in cfg.phasor_groups)
            data = derive_apparent_power(data, groups)
        stages.append(_shape("apparent_power", data))
        if is_default_schema and cfg.drop_logs and cfg.drop_list is None and cfg.phasor_groups is None:
            assert data.n_features == 72, data.n_features

    rcfg = _resample_cfg(cfg, seeds["resample"])
    with _stage("split", timings):
        if cfg.resample_before_split and rcfg.method is not Method.NONE:
            # leaky order: synthetic rows can land in the test set
            data = resample(data, rcfg)
            populations["resampled_before_split"] = _population(data.labels)
        train_idx, test_idx = split_indices(data.labels, cfg.train_fraction, seeds["split"], cfg.stratified)
        train, test = data.take(train_idx), data.take(test_idx)
    stages.append(_shape("train", train))
    stages.append(_shape("test", test))
    populations["train_before_resample"] = _population(train.labels)
    populations["test"] = _population(test.labels)

    def scale():
        nonlocal train, test
        with _stage("scale", timings):
            params = fit_scaler(train, cfg.scaler)
            train, test = apply_scaler(params, train), apply_scaler(params, test)
        return params

    scaler = scale() if cfg.scale_before_resample else None
    if not cfg.resample_before_split:
        with _stage("resample", timings):
            train = resample(train, rcfg)
    if scaler is None:
        scaler = scale()
    stages.append(_shape("train_resampled", train))
    populations["train_after_resample"] = _population(train.labels)

    kind = cfg.model_kind
    with _stage("train", timings):
        model, info, metrics, importance = _train_and_score(kind, cfg, seeds, train, test, taxonomy)
    comparison = [_comparison_row(kind, metrics)]
    baselines = {}
    for b in cfg.baselines:
        if b == kind:
            continue
        with _stage(f"baseline_{b}", timings):
            _, b_info, b_metrics, b_imp = _train_and_score(b, cfg, seeds, train, test, taxonomy)
        baselines[b] = {"model": b_info, "metrics": b_metrics}
        importance.update({f"{b}:{k}" if k in importance else k: v for k, v in b_imp.items()})
        comparison.append(_comparison_row(b, b_metrics))

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "seeds": seeds,
        "taxonomy": {"natural_labels": sorted(taxonomy.natural_labels),
                     "attack_labels": sorted(taxonomy.attack_labels)},
        "stages": stages,
        "populations": populations,
        "model": info,
        "metrics": metrics,
        "baselines": baselines,
        "feature_importance": importance,
        "model_comparison": comparison,
        "timings": timings,
    }
    prep = FittedPreprocessing(raw.schema, cfg.imputation, fill, dropped, groups, scaler)
    return report, prep, model


def run_experiment(cfg: ExperimentConfig) -> dict:
    report, prep, model = fit_pipeline(cfg)
    if cfg.out:
        write_report(report, cfg.out)
    if cfg.model_out:
        save_bundle(prep, model, cfg.model_out)
    return report


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")


def strip_timings(report: dict) -> dict:
    """Copy of a report without wall-clock fields (for reproducibility checks)."""
    out = {k: v for k, v in report.items() if k != "timings"}
    if "rows" in out:
        out["rows"] = [{k: v for k, v in r.items() if k != "seconds"} for r in out["rows"]]
    return out


# ------------------------------------------------------------------ sweep


def sweep(cfg: ExperimentConfig, axis: str, values: list) -> dict:
    """One run per value along ``axis``, all else fixed; failures are kept as rows."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {sorted(SWEEP_AXES)}")
    field_name = SWEEP_AXES[axis]
    parsed = [parse_value(field_name, str(v)) for v in values]
    rows = []
    for raw_value, value in zip(values, parsed):
        row = {"value": str(raw_value)}
        start = time.perf_counter()
        try:
            report = run_experiment(cfg.replace(**{field_name: value}, out=None, model_out=None))
        except GridIDSError as exc:
            row["error"] = str(exc)
        else:
            m = report["metrics"]
            row["overall_accuracy"] = m["overall_accuracy"]
            row["attack_only_accuracy"] = m["attack_only_accuracy"]
            if "layer1" in m:
                row["layer1_accuracy"] = m["layer1"]["accuracy"]
                row["layer2_accuracy"] = (m["layer2"].get("true_attacks") or {}).get("accuracy")
            else:
                row["binary_accuracy"] = m["binary_collapsed"]["accuracy"]
            row["train_seconds"] = report["timings"].get("train")
        row["seconds"] = round(time.perf_counter() - start, 6)
        rows.append(row)
    return {"schema_version": REPORT_SCHEMA_VERSION, "axis": axis, "config": cfg.to_dict(), "rows": rows}


def format_sweep_table(result: dict) -> str:
    cols = ["value", "overall_accuracy", "layer1_accuracy", "layer2_accuracy", "binary_accuracy",
            "train_seconds", "error"]
    cols = [c for c in cols if any(c in r for r in result["rows"])]
    lines = ["\t".join(cols)]
    for r in result["rows"]:
        cells = []
        for c in cols:
            v = r.get(c, "")
            cells.append(f"{v:.4f}" if isinstance(v, float) else ("" if v is None else str(v)))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


# -------------------------------------------------------------- plot data

PLOT_KINDS = ("class_population", "importance_topN", "model_comparison")


def emit_plot_data(report: dict, kind: str, n: int = 10, section: Optional[str] = None) -> str:
    """Two-column ``label,value`` text for one report section."""
    if kind == "class_population":
        pops = report.get("populations") or {}
        key = section or "raw"
        if key not in pops:
            raise MissingSection(f"populations.{key}")
        rows = sorted(((int(k), v) for k, v in pops[key].items()))
        header = "class,count"
    elif kind == "importance_topN":
        imp = report.get("feature_importance") or {}
        if not imp:
            raise MissingSection("feature_importance")
        key = section or next(iter(imp))
        if key not in imp:
            raise MissingSection(f"feature_importance.{key}")
        ranked = sorted(imp[key], key=lambda r: -r[1])  # stable: keeps column order on ties
        rows = [(name, value) for name, value in ranked[:n]]
        header = "feature,importance"
    elif kind == "model_comparison":
        comp = report.get("model_comparison")
        if not comp:
            raise MissingSection("model_comparison")
        field_name = section or "overall_accuracy"
        rows = [(r["model"], r[field_name]) for r in comp]
        header = f"model,{field_name}"
    else:
        raise ValueError(f"plot kind must be one of {PLOT_KINDS}")
    lines = [header] + [f"{label},{value!r}" if isinstance(value, float) else f"{label},{value}" for label, value in rows]
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ persistence


def _groups_to_list(groups) -> list:
    return [[g.v_mag_feature, g.v_angle_feature, g.i_mag_feature, g.i_angle_feature,
             g.s_mag_feature, g.s_angle_feature] for g in groups]


def save_bundle(prep: FittedPreprocessing, model, path) -> None:
    if isinstance(model, HierarchicalModel):
        kind, payload = "hierarchical", model_to_dict(model)
    else:
        kind, payload = "flat", forest_to_dict(model)
    s = prep.scaler
    dump_json({
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "schema": {"feature_names": list(prep.schema.feature_names),
                   "feature_kinds": list(prep.schema.feature_kinds),
                   "label_column": prep.schema.label_column},
        "imputation": prep.imputation.value,
        "fill_values": None if prep.fill_values is None else prep.fill_values.tolist(),
        "dropped": list(prep.dropped),
        "phasor_groups": _groups_to_list(prep.phasor_groups),
        "scaler": {"kind": s.kind.value, "mean": s.mean.tolist(), "std": s.std.tolist(),
                   "min": s.min.tolist(), "max": s.max.tolist()},
        "model_kind": kind,
        "model": payload,
    }, path)


def load_bundle(path):
    d = load_json(path)
    if d.get("format") != BUNDLE_FORMAT or d.get("version") != BUNDLE_VERSION:
        raise ValueError(f"{path} is not a pipeline bundle")
    sc = d["scaler"]
    prep = FittedPreprocessing(
        schema=FeatureSchema(tuple(d["schema"]["feature_names"]), tuple(d["schema"]["feature_kinds"]),
                             d["schema"]["label_column"]),
        imputation=Imputation(d["imputation"]),
        fill_values=None if d["fill_values"] is None else np.array(d["fill_values"]),
        dropped=tuple(d["dropped"]),
        phasor_groups=tuple(PhasorQuadruple(*g) for g in d["phasor_groups"]),
        scaler=ScalerParams(ScalerKind(sc["kind"]), *(np.array(sc[k]) for k in ("mean", "std", "min", "max"))),
    )
    model = model_from_dict(d["model"]) if d["model_kind"] == "hierarchical" else forest_from_dict(d["model"])
    return prep, model


def predict_rows(model, x: np.ndarray) -> list[str]:
    """Human-readable verdicts: ``Natural`` / ``Attack(<label>)`` or the flat label."""
    if isinstance(model, HierarchicalModel):
        pred = model.predict_many(x)
        return ["Natural" if p == NATURAL else f"Attack({int(p)})" for p in pred]
    return [str(int(p)) for p in model.predict_many(x)]
