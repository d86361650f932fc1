"""Command-line entry point: generate -> extract -> select -> evaluate -> report."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from neuroskill import __version__
from neuroskill.classifiers import KINDS
from neuroskill.datagen import PERTURBATIONS, GeneratorConfig, iter_scenario_segments
from neuroskill.evaluation import (
    DEFAULT_FEATURE_COUNTS,
    DEFAULT_FRACTIONS,
    ExperimentConfig,
    confusion_ranges,
    fmt,
    read_report_csv,
    run_grid,
)
from neuroskill.features import FeatureMatrix, catalog_reference, extract_features, normalize
from neuroskill.selection import select
from neuroskill.trial_io import DatasetWriter, iter_scenario_recordings, read_features_csv, write_features_csv

log = logging.getLogger("neuroskill")

MANIFEST = "manifest.json"


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def write_manifest(out_dir: Path, command: str, argv: list[str], args: argparse.Namespace, inputs, outputs, started: float) -> None:
    resolved = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items() if k != "func"}
    doc = {
        "command": command,
        "argv": argv,
        "config": resolved,
        "seed": resolved.get("seed", resolved.get("master_seed")),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
        "wall_time_s": round(time.time() - started, 3),
    }
    (out_dir / MANIFEST).write_text(json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n")


# ---------------------------------------------------------------------------
# verbs


def cmd_generate(args, argv):
    started = time.time()
    cfg = GeneratorConfig(
        n_skilled=args.n_skilled,
        n_novice=args.n_novice,
        delta=args.delta,
        sample_rate_hz=args.sample_rate,
        segment_duration_s=args.segment_duration,
        scenarios=tuple(args.scenarios),
        seed=args.seed,
        perturbations=tuple(args.perturbations),
    )
    out = Path(args.out_dir)
    writer = DatasetWriter(out)
    for _, _, _, segs in iter_scenario_segments(cfg):
        for t in segs:
            writer.add(t)
    side = writer.close({"generator": {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.__dict__.items()}})
    write_manifest(out, "generate", argv, args, [], [side], started)
    log.info("wrote %d trials to %s", len(writer.entries), out)


def cmd_extract(args, argv):
    started = time.time()
    vectors, labels, scen = [], [], []
    for pid, label, sc, segs in iter_scenario_recordings(args.in_dir):
        vectors.append(extract_features(segs, trial_id=f"{pid}_S{sc}"))
        labels.append(label)
        scen.append(sc)
    if not vectors:
        raise StageError("extract", f"no trials found in {args.in_dir}")
    matrix = FeatureMatrix.from_vectors(vectors, labels, scen)
    if args.normalize_on == "full":
        matrix = normalize(matrix, np.arange(len(matrix)))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_features_csv(matrix, out)
    write_manifest(out.parent, "extract", argv, args, [args.in_dir], [out], started)
    log.info("wrote %d feature rows to %s", len(matrix), out)


def cmd_select(args, argv):
    started = time.time()
    matrix = read_features_csv(args.features)
    doc = {"alpha": args.alpha, "k_max": args.k_max, "normalize_on": args.normalize_on, "scenarios": {}}
    for sc in sorted(set(matrix.scenario_ids.tolist())):
        sub = matrix.scenario(sc)
        values = sub.values
        if args.normalize_on == "full":
            values = normalize(sub, np.arange(len(sub))).values
        res = select(values, sub.y, sub.feature_ids, k_max=args.k_max, alpha=args.alpha)
        doc["scenarios"][str(sc)] = res.to_dict()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=1) + "\n")
    write_manifest(out.parent, "select", argv, args, [args.features], [out], started)


def _experiment_config(args) -> ExperimentConfig:
    params = {
        "knn": {"k": args.knn_k},
        "fknn": {"k": args.fknn_k, "m": args.fknn_m},
        "svm": {"C": args.svm_c, "kernel": args.svm_kernel, "gamma": args.svm_gamma if args.svm_gamma == "auto" else float(args.svm_gamma)},
        "parzen": {"bandwidth": args.parzen_bandwidth if args.parzen_bandwidth == "auto" else float(args.parzen_bandwidth)},
    }
    return ExperimentConfig(
        train_fractions=tuple(args.train_fractions),
        feature_counts=tuple(args.feature_counts),
        iterations=args.iterations,
        classifiers=tuple(args.classifiers),
        master_seed=args.master_seed,
        working_point=(args.working_point[0], int(args.working_point[1])),
        alpha=args.alpha,
        stratify=not args.no_stratify,
        normalize_on=args.normalize_on,
        ranking=args.ranking,
        classifier_params=params,
    )


def summarize(report, config: ExperimentConfig) -> dict:
    frac, count = config.working_point
    scen = sorted(report.class_sizes)
    mean = {
        str(sc): {k: _num(report.mean_eer(classifier=k, scenario=sc)) for k in config.classifiers}
        for sc in scen
    }
    wp = {
        str(sc): {k: _num(report.mean_eer(classifier=k, scenario=sc, train_frac=frac, n_features=count)) for k in config.classifiers}
        for sc in scen
    }
    return {
        "class_sizes": {str(sc): {"skilled": s, "novice": n} for sc, (s, n) in report.class_sizes.items()},
        "n_cells": len(report),
        "n_failed": len(report.failures()),
        "failures": sorted({c.error for c in report.failures()}),
        "working_point": {"train_frac": frac, "n_features": count},
        "mean_eer": mean,
        "working_point_eer": wp,
        "overall_mean_eer": {k: _num(report.mean_eer(classifier=k)) for k in config.classifiers},
        "working_point_mean_eer": {
            k: _num(report.mean_eer(classifier=k, train_frac=frac, n_features=count)) for k in config.classifiers
        },
    }


def _num(x):
    return None if math.isnan(x) else x


def cmd_evaluate(args, argv):
    started = time.time()
    matrix = read_features_csv(args.features)
    config = _experiment_config(args)
    report = run_grid(matrix, config, workers=args.workers)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "report.csv")
    summary = summarize(report, config)
    summary["config"] = config.to_dict()
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    write_manifest(out, "evaluate", argv, args, [args.features], [out / "report.csv", out / "summary.json"], started)
    log.info("evaluated %d cells (%d failed)", len(report), summary["n_failed"])


def _group_mean(cells, key):
    groups: dict = {}
    for c in cells:
        if c.ok and not math.isnan(c.eer):
            groups.setdefault(key(c), []).append(c.eer)
    return {k: (float(np.mean(v)), float(np.std(v)), len(v)) for k, v in sorted(groups.items())}


def _write_agg(path, header, groups):
    with open(path, "w") as fh:
        fh.write(",".join(header + ("mean_eer", "std_eer", "n")) + "\n")
        for key, (m, s, n) in groups.items():
            fh.write(",".join([str(k) if not isinstance(k, float) else fmt(k) for k in key] + [fmt(m), fmt(s), str(n)]) + "\n")


def cmd_report(args, argv):
    started = time.time()
    cells = read_report_csv(args.report)
    summary_path = Path(args.summary) if args.summary else Path(args.report).with_name("summary.json")
    if summary_path.exists():
        sizes = {int(k): (v["skilled"], v["novice"]) for k, v in json.loads(summary_path.read_text())["class_sizes"].items()}
    else:
        if args.n_skilled is None or args.n_novice is None:
            raise StageError("report", f"{summary_path} not found; pass --n-skilled and --n-novice")
        sizes = {c.scenario: (args.n_skilled, args.n_novice) for c in cells}
    frac, count = args.working_point[0], int(args.working_point[1])
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_agg(out / "fig3_train_fraction.csv", ("scenario", "classifier", "train_frac"),
               _group_mean([c for c in cells if c.n_features == count], lambda c: (c.scenario, c.classifier, c.train_frac)))
    _write_agg(out / "fig4_feature_count.csv", ("scenario", "classifier", "n_features"),
               _group_mean(cells, lambda c: (c.scenario, c.classifier, c.n_features)))
    _write_agg(out / "fig5_working_point.csv", ("scenario", "classifier"),
               _group_mean([c for c in cells if c.n_features == count and math.isclose(c.train_frac, frac)],
                           lambda c: (c.scenario, c.classifier)))
    kinds = [k for k in KINDS if any(c.classifier == k for c in cells)]
    ranges = confusion_ranges(cells, sizes, (frac, count), kinds)
    text = []
    for k in kinds:
        r = ranges[k]
        text.append(f"Classifier {k}: correctly/incorrectly classified at {int(round(frac * 100))}% train, "
                    f"{count} features ({r.n_cells} cells)\n")
        text.append(r.table())
        text.append("\n")
    (out / "table3.txt").write_text("".join(text))
    outputs = [out / n for n in ("fig3_train_fraction.csv", "fig4_feature_count.csv", "fig5_working_point.csv", "table3.txt")]
    write_manifest(out, "report", argv, args, [args.report], outputs, started)


def cmd_pipeline(args, argv):
    root = Path(args.out_dir)
    common = ["--log-level", args.log_level]
    gen = ["generate", "--out-dir", str(root / "data"), "--n-skilled", str(args.n_skilled), "--n-novice", str(args.n_novice),
           "--delta", repr(args.delta), "--seed", str(args.seed), "--sample-rate", repr(args.sample_rate),
           "--segment-duration", repr(args.segment_duration), "--scenarios", *map(str, args.scenarios)]
    steps = [
        gen,
        ["extract", "--in-dir", str(root / "data"), "--out", str(root / "features" / "features.csv")],
        ["select", "--features", str(root / "features" / "features.csv"), "--out", str(root / "selection" / "selection.json"),
         "--alpha", repr(args.alpha), "--k-max", str(max(args.feature_counts))],
        ["evaluate", "--features", str(root / "features" / "features.csv"), "--out-dir", str(root / "evaluation"),
         "--master-seed", str(args.master_seed), "--workers", str(args.workers), "--iterations", str(args.iterations),
         "--alpha", repr(args.alpha), "--working-point", *map(repr, args.working_point),
         "--train-fractions", *map(repr, args.train_fractions), "--feature-counts", *map(str, args.feature_counts)],
        ["report", "--report", str(root / "evaluation" / "report.csv"), "--out-dir", str(root / "report"),
         "--working-point", *map(repr, args.working_point)],
    ]
    for step in steps:
        code = main(common + step)
        if code:
            raise StageError(step[0], "stage failed (see message above)")
    root.mkdir(parents=True, exist_ok=True)
    (root / MANIFEST).write_text(json.dumps({"command": "pipeline", "argv": argv, "steps": steps, "tool_version": __version__}, indent=1) + "\n")


def cmd_rerun(args, argv):
    doc = json.loads(Path(args.manifest).read_text())
    code = main(doc["argv"])
    if code:
        raise StageError(doc.get("command", "rerun"), "re-run failed")


def cmd_catalog(args, argv):
    text = catalog_reference()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# parser


def _add_generator_flags(p):
    p.add_argument("--n-skilled", type=int, default=23)
    p.add_argument("--n-novice", type=int, default=92)
    p.add_argument("--delta", type=float, default=0.0, help="separability of the novice group (0 = identical)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-rate", type=float, default=100.0)
    p.add_argument("--segment-duration", type=float, default=180.0, help="seconds per tumour segment")
    p.add_argument("--scenarios", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6])


def _add_grid_flags(p):
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--train-fractions", type=float, nargs="+", default=list(DEFAULT_FRACTIONS))
    p.add_argument("--feature-counts", type=int, nargs="+", default=list(DEFAULT_FEATURE_COUNTS))
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--working-point", type=float, nargs=2, default=[0.5, 15], metavar=("FRACTION", "COUNT"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neuroskill", description=__doc__)
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic trial dataset")
    _add_generator_flags(p)
    p.add_argument("--perturbations", nargs="+", default=list(PERTURBATIONS), choices=PERTURBATIONS)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("extract", help="compute the 68 catalog features per participant and scenario")
    p.add_argument("--in-dir", required=True)
    p.add_argument("--out", required=True, help="feature CSV path")
    p.add_argument("--normalize-on", choices=("none", "full"), default="none")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("select", help="t-test filter and forward ranking per scenario")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="selection report (JSON)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--k-max", type=int, default=30)
    p.add_argument("--normalize-on", choices=("none", "full"), default="full")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="run the train-fraction x feature-count x classifier grid")
    p.add_argument("--features", required=True)
    p.add_argument("--out-dir", required=True)
    _add_grid_flags(p)
    p.add_argument("--classifiers", nargs="+", default=list(KINDS), choices=KINDS)
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--normalize-on", choices=("train", "full"), default="train")
    p.add_argument("--ranking", choices=("per-cell", "global"), default="per-cell")
    p.add_argument("--knn-k", type=int, default=7)
    p.add_argument("--fknn-k", type=int, default=7)
    p.add_argument("--fknn-m", type=float, default=2.0)
    p.add_argument("--svm-c", type=float, default=1.0)
    p.add_argument("--svm-kernel", choices=("rbf", "linear"), default="rbf")
    p.add_argument("--svm-gamma", default="auto")
    p.add_argument("--parzen-bandwidth", default="auto")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="figure-style aggregates and a confusion-range table")
    p.add_argument("--report", required=True)
    p.add_argument("--summary", default=None, help="summary.json with class sizes (default: next to the report)")
    p.add_argument("--n-skilled", type=int, default=None)
    p.add_argument("--n-novice", type=int, default=None)
    p.add_argument("--working-point", type=float, nargs=2, default=[0.5, 15], metavar=("FRACTION", "COUNT"))
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="generate, extract, select, evaluate and report in one go")
    _add_generator_flags(p)
    _add_grid_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("rerun", help="repeat a verb from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)

    p = sub.add_parser("catalog", help="print the feature catalog reference")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args, argv)
    except StageError as exc:
        print(f"neuroskill: error in {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as exc:
        print(f"neuroskill: error in {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
