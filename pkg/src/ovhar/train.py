"""Training loop: per-window MSE regression onto class target embeddings,
Adam with plateau-decayed learning rate, early stopping, restore-best."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ovhar.data import DatasetManifest, read_sequence
from ovhar.errors import LexiconError, OvharError, TrainingDiverged
from ovhar.lexicon import EmbeddingTable, Lexicon
from ovhar.nn.checkpoint import load_checkpoint, save_checkpoint  # re-export  # noqa: F401
from ovhar.nn.loss import mse_loss_batch
from ovhar.nn.model import RegressorModel
from ovhar.nn.optim import AdamState, adam_step
from ovhar.rng import SplitMix64, derive_seed
from ovhar.windows import Window, WindowConfig, segment

IMPROVEMENT_EPS = 1e-6


@dataclass
class TrainConfig:
    max_epochs: int = 300
    initial_lr: float = 1e-3
    lr_decay_factor: float = 0.5
    lr_patience_epochs: int = 10
    early_stop_patience_epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    val_fraction: float = 0.15

    def __post_init__(self):
        if not (0 < self.val_fraction < 0.5):
            raise OvharError("val_fraction must be in (0, 0.5)")
        if self.lr_patience_epochs < 1 or self.early_stop_patience_epochs < 1:
            raise OvharError("patience values must be >= 1")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise OvharError("max_epochs and batch_size must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    train_mse: float
    val_mse: float
    lr: float

    def log_line(self) -> str:
        return f"{self.epoch},{self.train_mse:.12g},{self.val_mse:.12g},{self.lr:.12g}"


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = -1
    best_val_mse: float = float("inf")
    stop_reason: str = ""
    val_records: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "epochs": [
                {"epoch": e.epoch, "train_mse": e.train_mse, "val_mse": e.val_mse, "lr": e.lr}
                for e in self.epochs
            ],
            "best_epoch": self.best_epoch,
            "best_val_mse": self.best_val_mse,
            "stop_reason": self.stop_reason,
            "val_records": self.val_records,
        }


def make_examples(
    manifest: DatasetManifest,
    lexicon: Lexicon,
    table: EmbeddingTable,
    cfg: WindowConfig,
    record_ids: list[str] | None = None,
) -> list[tuple[Window, np.ndarray]]:
    """Pair every window of every record with its class's target embedding.

    All windows of one activity share that activity's single target.
    """
    ids = record_ids if record_ids is not None else manifest.record_ids()
    examples: list[tuple[Window, np.ndarray]] = []
    for record_id in ids:
        seq = read_sequence(manifest, record_id)
        if seq.class_id is None:
            raise LexiconError(f"record {record_id!r} has no class id")
        if seq.class_id not in table.entries:
            raise LexiconError(f"class {seq.class_id!r} missing from embedding table")
        target = table.embedding(seq.class_id)
        for window in segment(seq, cfg):
            examples.append((window, target))
    return examples


def _split_records(
    examples: list[tuple[Window, np.ndarray]], cfg: TrainConfig
) -> tuple[list[int], list[int], list[str]]:
    """Record-level train/val split: all windows of one record stay together."""
    by_record: dict[str, list[int]] = {}
    for i, (window, _) in enumerate(examples):
        by_record.setdefault(window.source_id, []).append(i)
    record_ids = sorted(by_record)
    rng = SplitMix64(derive_seed(cfg.seed, "train-val-split"))
    rng.shuffle(record_ids)
    n_val = int(round(cfg.val_fraction * len(record_ids)))
    if len(record_ids) >= 2:
        n_val = max(1, n_val)
    else:
        n_val = 0
        warnings.warn("single-record dataset: no validation split, early stopping on train loss")
    val_records = sorted(record_ids[:n_val])
    val_idx = [i for r in val_records for i in by_record[r]]
    train_idx = [i for r in record_ids[n_val:] for i in by_record[r]]
    return sorted(train_idx), sorted(val_idx), val_records


def _eval_mse(model: RegressorModel, examples, indices, batch_size: int) -> float:
    if not indices:
        return float("nan")
    total = 0.0
    for start in range(0, len(indices), batch_size):
        chunk = indices[start : start + batch_size]
        windows = np.stack([examples[i][0].samples for i in chunk])
        targets = np.stack([examples[i][1] for i in chunk])
        preds = model.forward_batch(windows)
        diff = preds - targets
        total += float(np.sum(np.mean(diff * diff, axis=1)))
    return total / len(indices)


def train(
    model: RegressorModel,
    examples: list[tuple[Window, np.ndarray]],
    cfg: TrainConfig,
    log=None,
) -> tuple[RegressorModel, TrainReport]:
    """Adam on mean batch MSE with plateau LR decay and early stopping.

    Validation MSE is monitored (train MSE if no validation split is
    possible); the parameters of the best epoch are restored at the end.
    ``log`` receives one `epoch,train_mse,val_mse,lr` line per epoch.
    """
    if not examples:
        raise OvharError("train requires at least one example")
    train_idx, val_idx, val_records = _split_records(examples, cfg)
    if not train_idx:  # every record landed in val; train on them anyway
        train_idx, val_idx = val_idx, []
    rng = SplitMix64(derive_seed(cfg.seed, "batch-shuffle"))
    state = AdamState(lr=cfg.initial_lr)
    params = model.parameters()
    report = TrainReport(val_records=val_records)
    best_params = {k: v.copy() for k, v in params.items()}
    plateau = 0
    stop_reason = "epoch_cap"
    lr = cfg.initial_lr
    for epoch in range(1, cfg.max_epochs + 1):
        order = list(train_idx)
        rng.shuffle(order)
        state.lr = lr
        train_loss_sum = 0.0
        for batch_no, start in enumerate(range(0, len(order), cfg.batch_size)):
            chunk = order[start : start + cfg.batch_size]
            windows = np.stack([examples[i][0].samples for i in chunk])
            targets = np.stack([examples[i][1] for i in chunk])
            preds = model.forward_batch(windows)
            loss, upstream = mse_loss_batch(preds, targets)
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, batch_no, lr)
            grads = model.backward_batch(upstream)
            adam_step(params, grads, state)
            train_loss_sum += loss * len(chunk)
        train_mse = train_loss_sum / len(order)
        val_mse = _eval_mse(model, examples, val_idx, cfg.batch_size) if val_idx else train_mse
        stats = EpochStats(epoch=epoch, train_mse=train_mse, val_mse=val_mse, lr=lr)
        report.epochs.append(stats)
        if log is not None:
            log(stats.log_line())
        significant = val_mse < report.best_val_mse - IMPROVEMENT_EPS
        if val_mse < report.best_val_mse:  # exact running min is what gets restored
            report.best_val_mse = val_mse
            report.best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
        if significant:
            plateau = 0
        else:
            plateau += 1
            if plateau >= cfg.early_stop_patience_epochs:
                stop_reason = "early_stop"
                break
            if plateau % cfg.lr_patience_epochs == 0:
                lr *= cfg.lr_decay_factor
    if report.best_epoch < 0:  # no epoch improved on +inf? only if all NaN-guarded out
        report.best_epoch = len(report.epochs)
        best_params = {k: v.copy() for k, v in params.items()}
    report.stop_reason = stop_reason
    model.set_parameters(best_params)
    return model, report
