"""Command-line entry point: ``gridids <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

from .config import load_config, parse_value
from .dataset import load_csv, write_csv
from .demo import generate_demo
from .errors import GridIDSError, StageError
from .pipeline import (
    PLOT_KINDS,
    SWEEP_AXES,
    emit_plot_data,
    format_sweep_table,
    load_bundle,
    predict_rows,
    run_experiment,
    sweep,
)

# flag dest -> config key
_OVERRIDES = {
    "seed": "seed",
    "out": "out",
    "model": "model",
    "resampler": "resampler",
    "imputation": "imputation",
    "scaler": "scaler",
    "trees": "n_estimators",
    "max_features": "max_features",
    "criterion": "criterion",
    "model_out": "model_out",
}


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="PATH", help="write the JSON report here")
    p.add_argument("--model", choices=["flat", "hierarchical", "primary-default"])
    p.add_argument("--resampler", metavar="NAME", help="none, ros, smote, borderline-smote, adasyn")
    p.add_argument("--imputation", metavar="NAME", help="mean, median, drop, zero")
    p.add_argument("--scaler", metavar="NAME", help="standard, mean-normalization, minmax")
    p.add_argument("--trees", type=int, metavar="N")
    p.add_argument("--max-features", choices=["sqrt", "log2", "all"])
    p.add_argument("--criterion", choices=["gini", "entropy"])
    p.add_argument("--demo", action="store_true", help="use the bundled synthetic generator")
    p.add_argument("--input", action="append", metavar="CSV", help="input file (repeatable)")
    p.add_argument("--model-out", metavar="PATH", help="persist the fitted pipeline here")


def _config_from(args):
    overrides = {}
    for dest, key in _OVERRIDES.items():
        v = getattr(args, dest, None)
        if v is not None:
            overrides[key] = v if isinstance(v, int) else parse_value(key, str(v))
    if args.demo:
        overrides["demo"] = True
    if args.input:
        overrides["inputs"] = tuple(args.input)
    return load_config(args.config, overrides)


@contextmanager
def _tagged(stage: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc


def _summary(report: dict) -> str:
    m = report["metrics"]
    lines = [f"overall accuracy: {m['overall_accuracy']:.4f}"]
    if "layer1" in m:
        lines.append(f"layer-1 (natural vs attack) accuracy: {m['layer1']['accuracy']:.4f}")
    for row in report["model_comparison"][1:]:
        lines.append(f"baseline {row['model']} overall accuracy: {row['overall_accuracy']:.4f}")
    return "\n".join(lines)


def cmd_run(args) -> int:
    cfg = _config_from(args)
    report = run_experiment(cfg)
    print(_summary(report))
    if cfg.out is None:
        print(json.dumps(report, indent=2))
    return 0


def cmd_train(args) -> int:
    cfg = _config_from(args)
    if cfg.model_out is None:
        raise StageError("config", ValueError("train needs --model-out PATH"))
    report = run_experiment(cfg)
    print(_summary(report))
    print(f"model written to {cfg.model_out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    result = sweep(cfg.replace(out=None), args.axis, values)
    print(format_sweep_table(result), end="")
    if cfg.out:
        Path(cfg.out).write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    return 1 if all("error" in r for r in result["rows"]) else 0


def cmd_plotdata(args) -> int:
    with _tagged("plotdata"):
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
        text = emit_plot_data(report, args.kind, n=args.n, section=args.section)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def cmd_gen_demo(args) -> int:
    with _tagged("gen-demo"):
        raw = generate_demo(seed=args.seed, max_class_rows=args.rows, separation=args.separation)
        write_csv(args.out, raw)
    print(f"wrote {raw.n_rows} rows x {raw.n_features} features to {args.out}")
    return 0


def cmd_predict(args) -> int:
    with _tagged("load_model"):
        prep, model = load_bundle(args.bundle)
    with _tagged("load"):
        raw = load_csv(args.csv, prep.schema)
    with _tagged("predict"):
        data, kept = prep.transform(raw)
        verdicts = predict_rows(model, data.values)
    lines = ["row,prediction"] + [f"{int(i)},{v}" for i, v in zip(kept, verdicts)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridids", description="Hierarchical random-forest intrusion detection")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment and write a report")
    _experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("train", help="run one experiment and persist the fitted pipeline")
    _experiment_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="vary one setting, all else fixed")
    _experiment_flags(p)
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma separated")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plotdata", help="export one report section as label,value text")
    p.add_argument("report", help="JSON report written by run")
    p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p.add_argument("--n", type=int, default=10, help="rows for importance_topN")
    p.add_argument("--section", help="population stage, importance model or comparison field")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("gen-demo", help="write the synthetic demo dataset as CSV")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rows", type=int, default=200, help="rows of the largest class")
    p.add_argument("--separation", type=float, default=1.0)
    p.set_defaults(func=cmd_gen_demo)

    p = sub.add_parser("predict", help="score a CSV with a persisted pipeline")
    p.add_argument("csv")
    p.add_argument("--bundle", required=True, metavar="PATH", help="file written by train --model-out")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except GridIDSError as exc:
        print(f"error: [config] {type(exc).__name__}: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
