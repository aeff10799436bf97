"""End-to-end open-vocabulary experiment on synthetic data.

Generates a compositional dataset, trains the regressor on the training
classes only, and scores lookup decoding of the held-out classes against the
full candidate table. Used by scripts/run_open_vocab.py and the acceptance
suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ovhar.data import load_manifest
from ovhar.decode import EvalReport, EvalSplit, evaluate
from ovhar.lexicon import build_table, load_lexicon
from ovhar.nn.model import ModelConfig, RegressorModel
from ovhar.synth import SynthSpec, default_spec, generate, make_open_vocab_split
from ovhar.train import TrainConfig, make_examples, train
from ovhar.windows import WindowConfig


@dataclass
class OpenVocabResult:
    seed: int
    split: EvalSplit
    train_mse: float
    val_mse: float
    epochs: int
    report: EvalReport

    @property
    def macro_f1(self) -> float:
        return self.report.macro_f1


def experiment_model_config(channels: int, seed: int) -> ModelConfig:
    """Reduced profile: trains in seconds on CPU, same architecture family."""
    return ModelConfig(
        in_channels=channels,
        conv_filters=16,
        kernel_size=5,
        pool_size=2,
        hidden_size=32,
        seed=seed,
    )


def experiment_train_config(seed: int, max_epochs: int = 150) -> TrainConfig:
    return TrainConfig(
        max_epochs=max_epochs,
        early_stop_patience_epochs=30,
        lr_patience_epochs=10,
        batch_size=32,
        seed=seed,
        val_fraction=0.15,
    )


def run_open_vocab(
    work_dir: str | Path,
    seed: int,
    m_test: int = 3,
    spec: SynthSpec | None = None,
    max_epochs: int = 150,
    candidates: str = "all",
) -> OpenVocabResult:
    work_dir = Path(work_dir)
    spec = spec if spec is not None else default_spec(seed=seed)
    manifest_path, lexicon_path = generate(spec, work_dir / f"data_seed{seed}")
    manifest = load_manifest(manifest_path)
    lexicon = load_lexicon(lexicon_path)
    # coverage >= 2 keeps every held-out motion identifiable from training
    split = make_open_vocab_split(spec, m_test=m_test, seed=seed, min_motion_coverage=2)
    table = build_table(lexicon, lexicon.class_ids(), embedder="test")
    window_cfg = WindowConfig()
    train_ids = [r.id for r in manifest.records if r.class_id in set(split.train_class_ids)]
    examples = make_examples(manifest, lexicon, table, window_cfg, record_ids=train_ids)
    model = RegressorModel(experiment_model_config(spec.channels, seed))
    model, report = train(model, examples, experiment_train_config(seed, max_epochs))
    eval_report = evaluate(model, manifest, split, table, window_cfg, candidates=candidates)
    return OpenVocabResult(
        seed=seed,
        split=split,
        train_mse=report.epochs[report.best_epoch - 1].train_mse,
        val_mse=report.best_val_mse,
        epochs=len(report.epochs),
        report=eval_report,
    )
