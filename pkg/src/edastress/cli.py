"""Command-line harness: synth, train, eval, cv, loso, personalize, and
plot-data subcommands over a shared JSON config with flat flag overrides
(e.g. ``--train.epochs 100``). Every run writes its reports plus a
RunManifest into a timestamped subdirectory of the output directory; the
manifest's config snapshot can be passed back via --config to reproduce
the run byte-for-byte (timestamps aside).
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .modelio import ModelFormatError, load_model, save_model
from .personalization import loso_all, loso_run, personalize
from .pipeline import (
    CsvFormatError,
    DegenerateSignalError,
    PipelineConfig,
    StratificationError,
    build_corpus,
    load_corpus,
    make_split,
    write_recording_csv,
)
from .network import ModelConfig
from .reports import (
    corpus_summary,
    cv_report_dict,
    emit_plot_data,
    eval_report_dict,
    loso_report_dict,
    personalization_report_dict,
    train_report_dict,
    write_cv_csv,
    write_history_csv,
    write_json,
    write_loso_csv,
    write_manifest,
    write_personalization_csv,
)
from .synth import GeneratorProfile, synth_corpus
from .training import TrainConfig, assemble_task, cross_validate, evaluate, train

DEFAULT_CONFIG: dict = {
    "data_dir": None,
    "output_dir": "runs",
    "task": "bi",
    "seed": 7,
    "jobs": 1,
    "train_fraction": 0.75,
    "model_file": None,   # eval: path to a saved model
    "report_file": None,  # plot-data: path to a report JSON
    "plot_kind": None,    # plot-data: loso_accuracy | loso_f1 | history
    "pipeline": {"window_seconds": 60, "overlap_fraction": 0.5},
    "model": {
        "num_classes": None,  # derived from task unless set explicitly
        "input_len": 240,
        "conv1_filters": 100, "conv1_kernel": 5,
        "conv2_filters": 100, "conv2_kernel": 10,
        "dense1_units": 128, "dense2_units": 64,
        "dropout1": 0.3, "dropout2": 0.2,
    },
    "train": {"epochs": 200, "batch_size": 32, "lr": 0.001,
              "shuffle_each_epoch": True, "optimizer": "adam"},
    "cv": {"k": 10},
    "synth": {"n_subjects": 15, "shifted_subjects": [],
              "profile": GeneratorProfile().to_dict()},
    "personalize": {"subject": None, "epochs_per_step": 50, "stride": 1,
                    "mode": "finetune"},
}

COMMANDS = ("synth", "train", "eval", "cv", "loso", "personalize", "plot-data")


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file or run manifest")
    common.add_argument("--data-dir", type=Path, help="directory of S<id>.csv subject files")
    common.add_argument("--out-dir", type=Path, help="directory for run outputs")
    common.add_argument("--task", choices=["bi", "tri"], help="classification task")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--jobs", type=int, help="parallel workers for CV/LOSO folds")

    parser = argparse.ArgumentParser(
        prog="edastress",
        description="EDA stress classification: pipeline, CNN training, LOSO, personalization.")
    parser.add_argument("--version", action="version", version=f"edastress {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="generate synthetic subject CSVs")
    sub.add_parser("train", parents=[common], help="train on a 75/25 split and save the model")
    p_eval = sub.add_parser("eval", parents=[common], help="evaluate a saved model on a data dir")
    p_eval.add_argument("--model", type=Path, help="saved model JSON")
    sub.add_parser("cv", parents=[common], help="stratified k-fold cross-validation")
    sub.add_parser("loso", parents=[common], help="leave-one-subject-out analysis")
    sub.add_parser("personalize", parents=[common],
                   help="LOSO plus incremental re-training on the left-out subject")
    p_plot = sub.add_parser("plot-data", parents=[common], help="emit plot-ready CSV from a report")
    p_plot.add_argument("--report", type=Path, help="report JSON produced by train/loso")
    p_plot.add_argument("--kind", choices=["loso_accuracy", "loso_f1", "history"])
    return parser


def _parse_override_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_overrides(extras: list[str], parser: argparse.ArgumentParser) -> dict[str, object]:
    """Turn leftover ``--section.field value`` tokens into a {path: value} map."""
    overrides: dict[str, object] = {}
    i = 0
    while i < len(extras):
        token = extras[i]
        if not token.startswith("--") or i + 1 >= len(extras):
            parser.error(f"unknown flag {token!r}")
        key = token[2:].replace("-", "_")
        node: object = DEFAULT_CONFIG
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                parser.error(f"unknown flag {token!r}")
            node = node[part]
        overrides[key] = _parse_override_value(extras[i + 1])
        i += 2
    return overrides


def _deep_update(base: dict, update: dict) -> None:
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value


def load_config_file(path: Path) -> dict:
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise CliError("missing-config", f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError("config-parse-error", f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise CliError("config-parse-error", f"{path}: expected a JSON object")
    if doc.get("tool") == "edastress" and isinstance(doc.get("config"), dict):
        return doc["config"]  # run manifest: reuse its config snapshot
    return doc


def resolve_config(args: argparse.Namespace, overrides: dict[str, object]) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if args.config is not None:
        file_cfg = load_config_file(args.config)
        unknown = [k for k in file_cfg if k not in cfg]
        if unknown:
            raise CliError("config-parse-error", f"unknown config keys: {unknown}")
        _deep_update(cfg, file_cfg)
    if args.data_dir is not None:
        cfg["data_dir"] = str(args.data_dir)
    if args.out_dir is not None:
        cfg["output_dir"] = str(args.out_dir)
    if args.task is not None:
        cfg["task"] = args.task
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.jobs is not None:
        cfg["jobs"] = args.jobs
    if getattr(args, "model", None) is not None:
        cfg["model_file"] = str(args.model)
    if getattr(args, "report", None) is not None:
        cfg["report_file"] = str(args.report)
    if getattr(args, "kind", None) is not None:
        cfg["plot_kind"] = args.kind
    for path, value in overrides.items():
        node = cfg
        parts = path.split(".")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
    if cfg["task"] not in ("bi", "tri"):
        raise CliError("config-parse-error", f"task must be bi or tri, got {cfg['task']!r}")
    return cfg


def model_config_from(cfg: dict) -> ModelConfig:
    section = dict(cfg["model"])
    derived = 2 if cfg["task"] == "bi" else 3
    explicit = section.pop("num_classes")
    if explicit is not None and explicit != derived:
        raise CliError("config-parse-error",
                       f"model.num_classes={explicit} conflicts with task={cfg['task']}")
    try:
        return ModelConfig(num_classes=derived, **section)
    except ValueError as exc:
        raise CliError("config-parse-error", f"bad model config: {exc}") from exc


def train_config_from(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(seed=cfg["seed"], **cfg["train"])
    except (TypeError, ValueError) as exc:
        raise CliError("config-parse-error", f"bad train config: {exc}") from exc


def pipeline_config_from(cfg: dict) -> PipelineConfig:
    try:
        return PipelineConfig(**cfg["pipeline"])
    except (TypeError, ValueError) as exc:
        raise CliError("config-parse-error", f"bad pipeline config: {exc}") from exc


def make_run_dir(cfg: dict, command: str) -> Path:
    out_dir = Path(cfg["output_dir"])
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    run_dir = out_dir / f"{command}-{stamp}"
    counter = 2
    while run_dir.exists():
        run_dir = out_dir / f"{command}-{stamp}-{counter}"
        counter += 1
    run_dir.mkdir(parents=True)
    return run_dir


def load_task_corpus(cfg: dict):
    if not cfg["data_dir"]:
        raise CliError("missing-data", "no data directory given (use --data-dir)")
    recordings = load_corpus(cfg["data_dir"])
    corpus = build_corpus(recordings, pipeline_config_from(cfg))
    return assemble_task(corpus, cfg["task"])


def cmd_synth(cfg: dict) -> tuple[dict, list[str]]:
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    section = cfg["synth"]
    profile = GeneratorProfile.from_dict(section["profile"])
    recordings = synth_corpus(int(section["n_subjects"]), cfg["seed"], profile,
                              tuple(section["shifted_subjects"]))
    for rec in recordings:
        write_recording_csv(rec, out_dir / f"{rec.subject_id}.csv")
    lines = [f"wrote {len(recordings)} subject CSVs to {out_dir}"]
    return {"n_subjects": len(recordings)}, lines


def cmd_train(cfg: dict, run_dir: Path) -> tuple[dict, list[str]]:
    ds = load_task_corpus(cfg)
    mcfg = model_config_from(cfg)
    tcfg = train_config_from(cfg)
    train_ds, test_ds = make_split(ds, float(cfg["train_fraction"]), cfg["seed"])
    report = train(train_ds, tcfg, mcfg, test_set=test_ds)
    write_json(run_dir / "report.json", train_report_dict(report))
    write_history_csv(run_dir / "history.csv", report)
    save_model(report.params, mcfg, run_dir / "model.json", seed=tcfg.seed)
    lines = [
        f"train windows: {len(train_ds)}  test windows: {len(test_ds)}",
        f"train accuracy: {report.train_metrics.accuracy:.4f}  f1: {report.train_metrics.f1:.4f}",
        f"test accuracy:  {report.test_metrics.accuracy:.4f}  f1: {report.test_metrics.f1:.4f}",
    ]
    return corpus_summary(ds), lines


def cmd_eval(cfg: dict, run_dir: Path) -> tuple[dict, list[str]]:
    if not cfg["model_file"]:
        raise CliError("missing-model", "no model file given (use --model)")
    params, mcfg, _ = load_model(cfg["model_file"])
    derived = 2 if cfg["task"] == "bi" else 3
    if mcfg.num_classes != derived:
        raise CliError("config-parse-error",
                       f"model has {mcfg.num_classes} classes but task is {cfg['task']}")
    ds = load_task_corpus(cfg)
    metrics = evaluate(params, ds, mcfg)
    write_json(run_dir / "report.json", eval_report_dict(metrics))
    lines = [f"evaluated {len(ds)} windows: accuracy {metrics.accuracy:.4f} f1 {metrics.f1:.4f}"]
    return corpus_summary(ds), lines


def cmd_cv(cfg: dict, run_dir: Path) -> tuple[dict, list[str]]:
    ds = load_task_corpus(cfg)
    report = cross_validate(ds, int(cfg["cv"]["k"]), train_config_from(cfg),
                            model_config_from(cfg), jobs=int(cfg["jobs"]))
    write_json(run_dir / "report.json", cv_report_dict(report))
    write_cv_csv(run_dir / "folds.csv", report)
    lines = [f"cv ({len(report.folds)} folds): val accuracy "
             f"{report.mean_val_accuracy:.4f} +/- {report.std_val_accuracy:.4f}, "
             f"val f1 {report.mean_val_f1:.4f} +/- {report.std_val_f1:.4f}"]
    return corpus_summary(ds), lines


def cmd_loso(cfg: dict, run_dir: Path) -> tuple[dict, list[str]]:
    ds = load_task_corpus(cfg)
    report = loso_all(ds, train_config_from(cfg), model_config_from(cfg),
                      jobs=int(cfg["jobs"]))
    write_json(run_dir / "report.json", loso_report_dict(report))
    write_loso_csv(run_dir / "folds.csv", report)
    lines = [f"loso ({len(report.folds)} subjects): mean test accuracy "
             f"{report.mean_test_accuracy:.4f}, mean test f1 {report.mean_test_f1:.4f}"]
    return corpus_summary(ds), lines


def cmd_personalize(cfg: dict, run_dir: Path) -> tuple[dict, list[str]]:
    ds = load_task_corpus(cfg)
    tcfg = train_config_from(cfg)
    mcfg = model_config_from(cfg)
    section = cfg["personalize"]
    subjects = ds.subject_tags()
    if section["subject"] is not None:
        if section["subject"] not in subjects:
            raise CliError("missing-data", f"subject {section['subject']!r} not in corpus")
        folds = [loso_run(ds, section["subject"], tcfg, mcfg)]
    else:
        # paper protocol: personalize every subject whose left-out accuracy
        # falls short of its fold's training accuracy
        loso = loso_all(ds, tcfg, mcfg, jobs=int(cfg["jobs"]))
        folds = [f for f in loso.folds
                 if f.test_metrics.accuracy < f.train_metrics.accuracy]
    reports = []
    lines = []
    for fold in folds:
        result = personalize(
            fold.params, ds.for_subject(fold.left_out_subject),
            target=fold.train_metrics.accuracy, cfg=tcfg, mcfg=mcfg,
            epochs_per_step=int(section["epochs_per_step"]),
            stride=int(section["stride"]), mode=section["mode"])
        reports.append(result)
        lines.append(
            f"{result.subject}: original {result.original_test_accuracy:.4f} -> "
            f"final {result.final_test_accuracy:.4f} using {result.retrain_sample_size}"
            f"/{result.total_samples} samples"
            + ("" if result.reached_target else " (target not reached)"))
    write_json(run_dir / "report.json", personalization_report_dict(reports))
    write_personalization_csv(run_dir / "personalization.csv", reports)
    if not reports:
        lines.append("no subject scored below its training accuracy; nothing to personalize")
    return corpus_summary(ds), lines


def cmd_plot_data(cfg: dict, run_dir: Path) -> tuple[dict, list[str]]:
    if not cfg["report_file"]:
        raise CliError("missing-report", "no report file given (use --report)")
    if not cfg["plot_kind"]:
        raise CliError("missing-plot-kind", "no plot kind given (use --kind)")
    path = Path(cfg["report_file"])
    try:
        report = json.loads(path.read_text())
    except FileNotFoundError:
        raise CliError("missing-report", f"report file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError("report-parse-error", f"{path}: {exc}") from exc
    out_csv = run_dir / f"{cfg['plot_kind']}.csv"
    emit_plot_data(report, cfg["plot_kind"], out_csv)
    return {}, [f"wrote {out_csv}"]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    overrides = parse_overrides(extras, parser)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(args, overrides)
        if args.command == "synth":
            corpus_info, lines = cmd_synth(cfg)
            manifest_path = Path(cfg["output_dir"]) / "run_manifest.json"
        else:
            run_dir = make_run_dir(cfg, args.command)
            handler = {
                "train": cmd_train,
                "eval": cmd_eval,
                "cv": cmd_cv,
                "loso": cmd_loso,
                "personalize": cmd_personalize,
                "plot-data": cmd_plot_data,
            }[args.command]
            corpus_info, lines = handler(cfg, run_dir)
            lines.append(f"run directory: {run_dir}")
            manifest_path = run_dir / "run_manifest.json"
        write_manifest(manifest_path, args.command, cfg, __version__, started,
                       time.perf_counter() - t0, corpus_info or None)
        for line in lines:
            print(line)
        return 0
    except CliError as exc:
        print(f"edastress: error: {exc.code}: {exc}", file=sys.stderr)
    except FileNotFoundError as exc:
        print(f"edastress: error: missing-data: {exc}", file=sys.stderr)
    except CsvFormatError as exc:
        print(f"edastress: error: csv-format-error: {exc}", file=sys.stderr)
    except DegenerateSignalError as exc:
        print(f"edastress: error: degenerate-signal: {exc}", file=sys.stderr)
    except StratificationError as exc:
        print(f"edastress: error: stratification-error: {exc}", file=sys.stderr)
    except ModelFormatError as exc:
        print(f"edastress: error: model-format-error: {exc}", file=sys.stderr)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"edastress: error: run-error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
