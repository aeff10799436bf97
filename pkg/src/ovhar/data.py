"""Canonical sensor-recording representation and disk formats.

Every modality (pose, IMU, pressure map, SMPL) enters the pipeline as a
time x channel float64 matrix. On disk a record is raw little-endian float32,
row-major, described by a JSON manifest. Converters flatten joints/taxels to
channels before this module sees the data; nothing here interprets channel
semantics.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ovhar.errors import FormatError, ManifestError

MODALITIES = ("pose3d", "imu", "pressure", "smpl", "other")

BYTES_PER_SAMPLE = 4  # float32 on disk


@dataclass
class SensorSequence:
    id: str
    class_id: str | None
    modality: str
    rate_hz: float
    samples: np.ndarray  # [length, channels] float64
    nan_replaced: int = 0

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    @property
    def channels(self) -> int:
        return self.samples.shape[1]


@dataclass
class ManifestRecord:
    id: str
    class_id: str | None
    path: str
    length: int


@dataclass
class Normalization:
    mean: np.ndarray  # [channels]
    std: np.ndarray  # [channels], floored at 1e-8

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @staticmethod
    def from_json(obj: dict) -> "Normalization":
        return Normalization(
            mean=np.asarray(obj["mean"], dtype=np.float64),
            std=np.asarray(obj["std"], dtype=np.float64),
        )


@dataclass
class DatasetManifest:
    name: str
    modality: str
    rate_hz: float
    channels: int
    records: list[ManifestRecord]
    normalization: Normalization | None = None
    root: Path = field(default_factory=Path)

    def record(self, record_id: str) -> ManifestRecord:
        for rec in self.records:
            if rec.id == record_id:
                return rec
        raise ManifestError(f"no record with id {record_id!r}")

    def record_ids(self) -> list[str]:
        return [rec.id for rec in self.records]

    def data_path(self, rec: ManifestRecord) -> Path:
        return self.root / rec.path


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse and validate a manifest; every referenced data file must exist
    with byte length == record length * channels * 4."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    for key in ("name", "modality", "rate_hz", "channels", "records"):
        if key not in obj:
            raise ManifestError(f"manifest missing field {key!r}")
    if obj["modality"] not in MODALITIES:
        raise ManifestError(f"unknown modality {obj['modality']!r}")
    if obj["rate_hz"] <= 0:
        raise ManifestError("rate_hz must be positive")
    channels = int(obj["channels"])
    if channels < 1:
        raise ManifestError("channels must be positive")
    records = []
    seen = set()
    for entry in obj["records"]:
        rec = ManifestRecord(
            id=entry["id"],
            class_id=entry.get("class_id"),
            path=entry["path"],
            length=int(entry["length"]),
        )
        if rec.id in seen:
            raise ManifestError(f"duplicate record id {rec.id!r}")
        seen.add(rec.id)
        if rec.length < 1:
            raise ManifestError(f"non-positive length, record {rec.id!r}")
        data_path = path.parent / rec.path
        if not data_path.is_file():
            raise ManifestError(f"missing data file, record {rec.id!r}: {data_path}")
        expected = rec.length * channels * BYTES_PER_SAMPLE
        actual = data_path.stat().st_size
        if actual != expected:
            raise ManifestError(
                f"length mismatch, record {rec.id!r}: expected {expected} bytes, file has {actual}"
            )
        records.append(rec)
    normalization = None
    if obj.get("normalization"):
        normalization = Normalization.from_json(obj["normalization"])
        if normalization.mean.shape != (channels,) or normalization.std.shape != (channels,):
            raise ManifestError("normalization mean/std must have one value per channel")
    return DatasetManifest(
        name=obj["name"],
        modality=obj["modality"],
        rate_hz=float(obj["rate_hz"]),
        channels=channels,
        records=records,
        normalization=normalization,
        root=path.parent,
    )


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    obj = {
        "name": manifest.name,
        "modality": manifest.modality,
        "rate_hz": manifest.rate_hz,
        "channels": manifest.channels,
        "normalization": manifest.normalization.to_json() if manifest.normalization else None,
        "records": [
            {"id": r.id, "class_id": r.class_id, "path": r.path, "length": r.length}
            for r in manifest.records
        ],
    }
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_sequence(path: str | Path, samples: np.ndarray) -> None:
    """Raw little-endian float32, row-major."""
    Path(path).write_bytes(np.ascontiguousarray(samples, dtype="<f4").tobytes())


def _read_raw(manifest: DatasetManifest, rec: ManifestRecord) -> tuple[np.ndarray, int]:
    """float64 samples with NaN replaced by 0.0; returns (samples, nan count)."""
    raw = manifest.data_path(rec).read_bytes()
    expected = rec.length * manifest.channels * BYTES_PER_SAMPLE
    if len(raw) != expected:
        raise FormatError(
            f"data file for record {rec.id!r} has {len(raw)} bytes, expected {expected}"
        )
    samples = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    samples = samples.reshape(rec.length, manifest.channels)
    nan_mask = np.isnan(samples)
    nan_count = int(nan_mask.sum())
    if nan_count > 0.10 * samples.size:
        raise ManifestError(
            f"record unusable, record {rec.id!r}: {nan_count}/{samples.size} NaN samples"
        )
    if nan_count:
        samples = np.where(nan_mask, 0.0, samples)
    return samples, nan_count


def read_sequence(manifest: DatasetManifest, record_id: str) -> SensorSequence:
    """Decode a record, replace NaNs, apply declared normalization."""
    rec = manifest.record(record_id)
    samples, nan_count = _read_raw(manifest, rec)
    if manifest.normalization is not None:
        samples = (samples - manifest.normalization.mean) / manifest.normalization.std
    return SensorSequence(
        id=rec.id,
        class_id=rec.class_id,
        modality=manifest.modality,
        rate_hz=manifest.rate_hz,
        samples=samples,
        nan_replaced=nan_count,
    )


def resample(seq: SensorSequence, target_hz: float) -> SensorSequence:
    """Linear interpolation per channel onto the uniform grid k/target_hz.

    The grid covers the original duration (last grid point within one target
    period of it); grid points that coincide with source sample times are
    copied bit-exactly, so equal-rate resampling is the identity.
    """
    if target_hz <= 0:
        raise ManifestError("target_hz must be positive")
    duration = (seq.length - 1) / seq.rate_hz
    n_out = int(np.floor(duration * target_hz + 1e-9)) + 1
    if seq.length == 1 and n_out <= 1:
        warnings.warn(f"record {seq.id!r}: single-sample input, constant extension")
    out = np.empty((n_out, seq.channels))
    for k in range(n_out):
        src = (k / target_hz) * seq.rate_hz
        nearest = round(src)
        if abs(src - nearest) < 1e-9 and 0 <= nearest < seq.length:
            out[k] = seq.samples[int(nearest)]
            continue
        lo = int(np.floor(src))
        if lo < 0:
            out[k] = seq.samples[0]
        elif lo >= seq.length - 1:
            out[k] = seq.samples[-1]
        else:
            frac = src - lo
            out[k] = (1.0 - frac) * seq.samples[lo] + frac * seq.samples[lo + 1]
    return replace(seq, samples=out, rate_hz=target_hz)


def fit_normalization(manifest: DatasetManifest, train_ids: list[str]) -> Normalization:
    """Per-channel population mean/std over the training records only.

    Computed on raw (NaN-replaced, unnormalized) samples; std floored at 1e-8.
    """
    if not train_ids:
        raise ManifestError("fit_normalization requires at least one training record")
    count = 0
    total = np.zeros(manifest.channels)
    total_sq = np.zeros(manifest.channels)
    for record_id in train_ids:
        rec = manifest.record(record_id)
        samples, _ = _read_raw(manifest, rec)
        count += samples.shape[0]
        total += samples.sum(axis=0)
        total_sq += (samples * samples).sum(axis=0)
    mean = total / count
    var = total_sq / count - mean * mean
    std = np.sqrt(np.maximum(var, 0.0))
    return Normalization(mean=mean, std=np.maximum(std, 1e-8))
