"""Run configuration: one JSON file drives every CLI subcommand; a few flags
override individual fields (flags win)."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ovhar.errors import ConfigError
from ovhar.nn.model import ModelConfig
from ovhar.train import TrainConfig
from ovhar.windows import WindowConfig

RUN_DIR_ENV = "OVHAR_RUN_DIR"


@dataclass
class ClientConfig:
    mode: str = "stub"  # "stub" or a URL
    timeout_seconds: float = 10.0


@dataclass
class RunConfig:
    seed: int = 0
    manifest: str = ""
    lexicon: str = ""
    table: str = ""
    checkpoint: str = ""
    split: str = ""
    run_dir: str = "run"
    embedder: str = "test"  # "test" or "file"
    imported_table: str = ""  # source OVHT when embedder == "file"
    candidates: str = "all"  # "all" or "test"
    aggregation: str = "mean"
    normalization: str | None = None  # None or "fit"
    window: WindowConfig = field(default_factory=WindowConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    model: dict = field(default_factory=dict)  # ModelConfig overrides
    inversion_client: ClientConfig = field(default_factory=ClientConfig)
    mapping_client: ClientConfig = field(default_factory=ClientConfig)
    base_dir: Path = field(default_factory=Path)

    def resolve(self, path_str: str) -> Path:
        path = Path(path_str)
        return path if path.is_absolute() else self.base_dir / path

    def resolved_run_dir(self) -> Path:
        env = os.environ.get(RUN_DIR_ENV)
        return Path(env) if env else self.resolve(self.run_dir)

    def model_config(self, in_channels: int) -> ModelConfig:
        known = {"conv_filters", "kernel_size", "pool_size", "hidden_size", "embedding_dim"}
        unknown = set(self.model) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return ModelConfig(in_channels=in_channels, seed=self.seed, **self.model)


def _client_from_json(obj: dict | None) -> ClientConfig:
    if not obj:
        return ClientConfig()
    return ClientConfig(
        mode=obj.get("mode", "stub"),
        timeout_seconds=obj.get("timeout_seconds", 10.0),
    )


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    train_obj = dict(obj.get("train", {}))
    train_seed = train_obj.pop("seed", obj.get("seed", 0))
    try:
        window = WindowConfig(**obj.get("window", {}))
        train = TrainConfig(seed=train_seed, **train_obj)
    except TypeError as exc:
        raise ConfigError(f"bad window/train config: {exc}") from exc
    clients = obj.get("clients", {})
    cfg = RunConfig(
        seed=obj.get("seed", 0),
        manifest=obj.get("manifest", ""),
        lexicon=obj.get("lexicon", ""),
        table=obj.get("table", ""),
        checkpoint=obj.get("checkpoint", ""),
        split=obj.get("split", ""),
        run_dir=obj.get("run_dir", "run"),
        embedder=obj.get("embedder", "test"),
        imported_table=obj.get("imported_table", ""),
        candidates=obj.get("candidates", "all"),
        aggregation=obj.get("aggregation", "mean"),
        normalization=obj.get("normalization"),
        window=window,
        train=train,
        model=obj.get("model", {}),
        inversion_client=_client_from_json(clients.get("inversion")),
        mapping_client=_client_from_json(clients.get("mapping")),
        base_dir=path.parent,
    )
    if cfg.embedder not in ("test", "file"):
        raise ConfigError(f"embedder must be 'test' or 'file', got {cfg.embedder!r}")
    if cfg.candidates not in ("all", "test"):
        raise ConfigError(f"candidates must be 'all' or 'test', got {cfg.candidates!r}")
    if cfg.normalization not in (None, "fit"):
        raise ConfigError("normalization must be null or 'fit'")
    return cfg
