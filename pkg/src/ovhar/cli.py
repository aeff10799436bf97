"""Command-line interface: table building, synthesis, training, evaluation,
inference, and gradient checking, driven by one config file.

Exit codes: 0 success, 1 assertion/check failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ovhar.config import RunConfig, load_run_config
from ovhar.data import (
    Normalization,
    fit_normalization,
    load_manifest,
    read_sequence,
)
from ovhar.decode import (
    HttpTextClient,
    LookupInversionStub,
    confusion_to_csv,
    evaluate,
    load_split,
    predict_activity,
    save_split,
)
from ovhar.errors import (
    ConfigError,
    FormatError,
    LexiconError,
    ManifestError,
    OvharError,
)
from ovhar.lexicon import build_table, load_lexicon, load_table, save_table
from ovhar.nn.checkpoint import load_checkpoint, save_checkpoint
from ovhar.nn.gradcheck import standard_check
from ovhar.nn.model import RegressorModel
from ovhar.synth import default_spec, generate, load_spec, make_open_vocab_split, save_spec
from ovhar.train import make_examples, train

USAGE_ERRORS = (ConfigError, ManifestError, LexiconError, FormatError)


def _load_config(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    cfg = load_run_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
        cfg.train.seed = args.seed
    if getattr(args, "max_epochs", None) is not None:
        cfg.train.max_epochs = args.max_epochs
    if getattr(args, "stride_seconds", None) is not None:
        cfg.window.stride_seconds = args.stride_seconds
    if getattr(args, "candidates", None) is not None:
        cfg.candidates = args.candidates
    if getattr(args, "embedder", None) is not None:
        cfg.embedder = args.embedder
    return cfg


def _normalization_path(cfg: RunConfig) -> Path:
    return cfg.resolved_run_dir() / "normalization.json"


def _apply_normalization(cfg: RunConfig, manifest) -> None:
    if cfg.normalization != "fit":
        return
    path = _normalization_path(cfg)
    if not path.is_file():
        raise ConfigError(f"normalization 'fit' configured but {path} is missing (run train first)")
    obj = json.loads(path.read_text())
    manifest.normalization = Normalization.from_json(obj)


def cmd_embed_table(cfg: RunConfig) -> int:
    lexicon = load_lexicon(cfg.resolve(cfg.lexicon))
    imported = None
    if cfg.embedder == "file":
        if not cfg.imported_table:
            raise ConfigError("embedder 'file' requires imported_table in the config")
        imported = load_table(cfg.resolve(cfg.imported_table))
    table = build_table(lexicon, lexicon.class_ids(), embedder=cfg.embedder, imported=imported)
    out = cfg.resolve(cfg.table)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_table(table, out)
    print(f"wrote {len(table.entries)} entries (encoder {table.encoder_name}) to {out}")
    return 0


def cmd_synth(args) -> int:
    spec = load_spec(args.spec) if args.spec else default_spec(seed=args.seed or 0)
    if args.seed is not None:
        spec.seed = args.seed
    out_dir = Path(args.out)
    manifest_path, lexicon_path = generate(spec, out_dir)
    save_spec(spec, out_dir / "spec.json")
    print(f"wrote dataset to {manifest_path} and lexicon to {lexicon_path}")
    if args.m_test:
        split = make_open_vocab_split(
            spec, m_test=args.m_test, seed=spec.seed, min_motion_coverage=args.min_motion_coverage
        )
        split_path = out_dir / "split.json"
        save_split(split, split_path)
        print(f"wrote split (train {len(split.train_class_ids)} / test {len(split.test_class_ids)}) to {split_path}")
    return 0


def _select_train_records(manifest, split) -> list[str]:
    train_classes = set(split.train_class_ids)
    test_classes = set(split.test_class_ids)
    selected = []
    for rec in manifest.records:
        if rec.class_id in train_classes:
            selected.append(rec.id)
        elif rec.class_id not in test_classes and rec.class_id is not None:
            raise ConfigError(
                f"record {rec.id!r} has class {rec.class_id!r} outside the split"
            )
    leaked = [r for r in selected if manifest.record(r).class_id in test_classes]
    if leaked:  # unreachable unless the split invariant is bypassed
        raise OvharError(f"leakage guard: test-class records in training input: {leaked}")
    return selected


def cmd_train(cfg: RunConfig) -> int:
    manifest = load_manifest(cfg.resolve(cfg.manifest))
    lexicon = load_lexicon(cfg.resolve(cfg.lexicon))
    split = load_split(cfg.resolve(cfg.split))
    split.validate_coverage(lexicon)
    run_dir = cfg.resolved_run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    train_ids = _select_train_records(manifest, split)
    if cfg.normalization == "fit":
        stats = fit_normalization(manifest, train_ids)
        _normalization_path(cfg).write_text(json.dumps(stats.to_json(), sort_keys=True) + "\n")
        manifest.normalization = stats
    table = load_table(cfg.resolve(cfg.table))
    examples = make_examples(manifest, lexicon, table, cfg.window, record_ids=train_ids)
    model = RegressorModel(cfg.model_config(manifest.channels))
    log_lines: list[str] = []

    def log(line: str) -> None:
        log_lines.append(line)
        print(line)

    model, report = train(model, examples, cfg.train, log=log)
    (run_dir / "epochs.csv").write_text("\n".join(log_lines) + "\n")
    (run_dir / "train_report.json").write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    )
    checkpoint_path = cfg.resolve(cfg.checkpoint)
    checkpoint_path.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, checkpoint_path)
    print(
        f"best epoch {report.best_epoch} (val_mse {report.best_val_mse:.6g}, "
        f"{report.stop_reason}); checkpoint {checkpoint_path}"
    )
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    manifest = load_manifest(cfg.resolve(cfg.manifest))
    _apply_normalization(cfg, manifest)
    split = load_split(cfg.resolve(cfg.split))
    table = load_table(cfg.resolve(cfg.table))
    model = load_checkpoint(cfg.resolve(cfg.checkpoint))
    run_dir = cfg.resolved_run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    report = evaluate(
        model, manifest, split, table, cfg.window,
        candidates=cfg.candidates, aggregation=cfg.aggregation,
    )
    (run_dir / "eval_report.json").write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    )
    (run_dir / "confusion.csv").write_text(confusion_to_csv(report.confusion))
    print(f"candidates: {report.candidate_mode} ({len(report.candidate_class_ids)} classes)")
    print(f"{'class':<20} {'precision':>9} {'recall':>9} {'f1':>9} {'support':>8}")
    for cls, stats in sorted(report.per_class.items()):
        print(
            f"{cls:<20} {stats['precision']:>9.3f} {stats['recall']:>9.3f} "
            f"{stats['f1']:>9.3f} {stats['support']:>8.0f}"
        )
    if report.tie_count:
        print(f"ties: {report.tie_count}")
    if report.undecodable:
        print(f"undecodable: {report.undecodable}")
    print(f"macro_f1={report.macro_f1:.6f}")
    return 0


def cmd_infer(cfg: RunConfig, record_id: str | None, raw_path: str | None) -> int:
    manifest = load_manifest(cfg.resolve(cfg.manifest))
    _apply_normalization(cfg, manifest)
    table = load_table(cfg.resolve(cfg.table))
    model = load_checkpoint(cfg.resolve(cfg.checkpoint))
    if record_id is not None:
        seq = read_sequence(manifest, record_id)
    elif raw_path is not None:
        raw = np.fromfile(raw_path, dtype="<f4").astype(np.float64)
        if raw.size % manifest.channels:
            raise FormatError(
                f"raw file length {raw.size} not divisible by {manifest.channels} channels"
            )
        from ovhar.data import SensorSequence

        seq = SensorSequence(
            id=Path(raw_path).stem,
            class_id=None,
            modality=manifest.modality,
            rate_hz=manifest.rate_hz,
            samples=raw.reshape(-1, manifest.channels),
        )
    else:
        raise ConfigError("infer requires --record or --raw")
    prediction = predict_activity(model, seq, cfg.window, table, aggregation=cfg.aggregation)
    print(f"record {seq.id}: {prediction.window_count} window(s)")
    for cls, sim in prediction.final.ranked[:5]:
        print(f"  {cls:<20} {sim:+.6f}")
    if len(prediction.final.tie_set) > 1:
        print(f"tie set: {prediction.final.tie_set}")
    client = cfg.inversion_client
    if client.mode == "stub":
        inverter = LookupInversionStub(table)
    else:
        inverter = HttpTextClient(client.mode, client.timeout_seconds)
    h = prediction.embedding if prediction.embedding is not None else table.embedding(prediction.final.top)
    print(f"inverted description: {inverter.invert(h)}")
    print(f"top={prediction.final.top}")
    return 0


def cmd_gradcheck(args) -> int:
    seeds = list(range(args.seed, args.seed + args.seeds))
    worst = 0.0
    ok = True
    for seed in seeds:
        report = standard_check(
            seed,
            full_size=args.full_size,
            corrupt_tensor="conv.weight" if args.corrupt_conv_backward else None,
        )
        print(f"seed {seed}: {report.summary()}")
        worst = max(worst, report.max_rel_error)
        ok = ok and report.passed
    print(f"max_rel_error={worst:.6e} {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ovhar", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="path to the run config JSON")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--max-epochs", type=int, default=None, dest="max_epochs")
        p.add_argument("--candidates", choices=["all", "test"], default=None)
        p.add_argument("--stride-seconds", type=float, default=None, dest="stride_seconds")
        p.add_argument("--embedder", choices=["test", "file"], default=None)

    add_common(sub.add_parser("embed-table", help="build the class embedding table"))
    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("--spec", help="synth spec JSON (default: built-in 11-class spec)")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--m-test", type=int, default=0, dest="m_test")
    p_synth.add_argument("--min-motion-coverage", type=int, default=2, dest="min_motion_coverage")
    add_common(sub.add_parser("train", help="train the regressor"))
    add_common(sub.add_parser("eval", help="evaluate held-out classes"))
    p_infer = sub.add_parser("infer", help="decode one recording")
    add_common(p_infer)
    p_infer.add_argument("--record", help="record id from the manifest")
    p_infer.add_argument("--raw", help="raw .f32 file (channels from manifest)")
    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--seeds", type=int, default=10, help="number of consecutive seeds")
    p_grad.add_argument("--full-size", action="store_true", dest="full_size")
    p_grad.add_argument(
        "--corrupt-conv-backward", action="store_true", dest="corrupt_conv_backward",
        help="flip the conv gradient sign (verifies the checker detects breakage)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "embed-table":
            return cmd_embed_table(_load_config(args))
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "train":
            return cmd_train(_load_config(args))
        if args.command == "eval":
            return cmd_eval(_load_config(args))
        if args.command == "infer":
            return cmd_infer(_load_config(args), args.record, args.raw)
        if args.command == "gradcheck":
            return cmd_gradcheck(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OvharError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
