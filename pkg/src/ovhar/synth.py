"""Compositional synthetic sensor data.

Each atomic motion is an enveloped multi-channel sinusoid with its own
frequency band; a class is an ordered concatenation of motions. Because
every motion has a recoverable spectral signature, generalization to unseen
motion combinations can actually be measured.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ovhar.data import DatasetManifest, ManifestRecord, save_manifest, write_sequence
from ovhar.decode import EvalSplit
from ovhar.errors import OvharError
from ovhar.lexicon import ActivityClass, AtomicMotion, Lexicon, save_lexicon
from ovhar.rng import SplitMix64, derive_seed


@dataclass
class ChannelPattern:
    freq_hz: float
    amplitude: float
    phase: float


@dataclass
class MotionPrimitive:
    motion_id: str
    duration_seconds: float
    channels: list[ChannelPattern]
    attack_fraction: float = 0.15
    decay_fraction: float = 0.2

    def validate(self, rate_hz: float) -> None:
        if self.duration_seconds <= 0:
            raise OvharError(f"primitive {self.motion_id!r}: duration must be positive")
        for pattern in self.channels:
            if pattern.freq_hz >= rate_hz / 2:
                raise OvharError(
                    f"primitive {self.motion_id!r}: frequency {pattern.freq_hz} Hz "
                    f"violates Nyquist at rate {rate_hz} Hz"
                )


@dataclass
class SynthSpec:
    rate_hz: float
    channels: int
    noise_std: float
    classes: list[tuple[str, list[str]]]  # (class_id, ordered motion ids)
    records_per_class: int
    seed: int
    primitives: dict[str, MotionPrimitive] = field(default_factory=dict)
    jitter_fraction: float = 0.1
    modality: str = "imu"

    def validate(self) -> None:
        if self.records_per_class < 1:
            raise OvharError("records_per_class must be >= 1")
        for class_id, motion_ids in self.classes:
            if not motion_ids:
                raise OvharError(f"class {class_id!r} has no motions")
            for mid in motion_ids:
                if mid not in self.primitives:
                    raise OvharError(f"class {class_id!r} uses unknown motion {mid!r}")
        for prim in self.primitives.values():
            if len(prim.channels) != self.channels:
                raise OvharError(
                    f"primitive {prim.motion_id!r} has {len(prim.channels)} channel "
                    f"patterns, spec declares {self.channels}"
                )
            prim.validate(self.rate_hz)


def primitive_waveform(
    prim: MotionPrimitive,
    rate_hz: float,
    duration_factor: float = 1.0,
    amplitude_factor: float = 1.0,
) -> np.ndarray:
    """[n, channels] enveloped sinusoids; the trapezoid envelope ramps up over
    attack_fraction of the duration and down over decay_fraction."""
    duration = prim.duration_seconds * duration_factor
    n = max(1, int(round(duration * rate_hz)))
    t = np.arange(n) / rate_hz
    attack = max(prim.attack_fraction * duration, 1e-12)
    decay = max(prim.decay_fraction * duration, 1e-12)
    envelope = np.clip(np.minimum(t / attack, (duration - t) / decay), 0.0, 1.0)
    out = np.empty((n, len(prim.channels)))
    for c, pattern in enumerate(prim.channels):
        out[:, c] = (
            amplitude_factor
            * pattern.amplitude
            * envelope
            * np.sin(2.0 * np.pi * pattern.freq_hz * t + pattern.phase)
        )
    return out


def _record_samples(spec: SynthSpec, motion_ids: list[str], record_seed: int) -> np.ndarray:
    rng = SplitMix64(record_seed)
    pieces = []
    for mid in motion_ids:
        prim = spec.primitives[mid]
        jitter = spec.jitter_fraction
        dur_factor = 1.0 + rng.uniform(-jitter, jitter) if jitter > 0 else 1.0
        amp_factor = 1.0 + rng.uniform(-jitter, jitter) if jitter > 0 else 1.0
        pieces.append(primitive_waveform(prim, spec.rate_hz, dur_factor, amp_factor))
    samples = np.concatenate(pieces, axis=0)
    if spec.noise_std > 0:
        noise = rng.normals(samples.size).reshape(samples.shape) * spec.noise_std
        samples = samples + noise
    return samples


def build_lexicon(spec: SynthSpec) -> Lexicon:
    lex = Lexicon()
    used = sorted({mid for _, motion_ids in spec.classes for mid in motion_ids})
    for mid in used:
        lex.motions[mid] = AtomicMotion(id=mid, phrase=mid.replace("_", " "))
    for class_id, motion_ids in spec.classes:
        lex.classes[class_id] = ActivityClass(
            id=class_id, label=class_id.replace("_", " "), motions=list(motion_ids)
        )
    lex.validate()
    return lex


def generate(spec: SynthSpec, out_dir: str | Path) -> tuple[Path, Path]:
    """Write the dataset (manifest + .f32 files) and the matching lexicon.

    Fully deterministic: record r of the run is keyed by (spec.seed, r), so
    records could be generated in parallel without changing the output.
    Returns (manifest path, lexicon path).
    """
    spec.validate()
    out_dir = Path(out_dir)
    data_dir = out_dir / "records"
    data_dir.mkdir(parents=True, exist_ok=True)
    records = []
    record_index = 0
    for class_id, motion_ids in spec.classes:
        for r in range(spec.records_per_class):
            record_id = f"{class_id}_r{r:02d}"
            samples = _record_samples(spec, motion_ids, derive_seed(spec.seed, record_index))
            rel_path = f"records/{record_id}.f32"
            write_sequence(out_dir / rel_path, samples)
            records.append(
                ManifestRecord(
                    id=record_id, class_id=class_id, path=rel_path, length=samples.shape[0]
                )
            )
            record_index += 1
    manifest = DatasetManifest(
        name=f"synth-seed{spec.seed}",
        modality=spec.modality,
        rate_hz=spec.rate_hz,
        channels=spec.channels,
        records=records,
        root=out_dir,
    )
    manifest_path = out_dir / "manifest.json"
    save_manifest(manifest, manifest_path)
    lexicon_path = out_dir / "lexicon.json"
    save_lexicon(build_lexicon(spec), lexicon_path)
    return manifest_path, lexicon_path


def make_open_vocab_split(
    spec: SynthSpec, m_test: int, seed: int, min_motion_coverage: int = 1
) -> EvalSplit:
    """Pick m_test held-out classes whose motions are fully covered by the
    motions of the remaining (training) classes; deterministic per seed.

    ``min_motion_coverage`` requires every test-class motion to appear in at
    least that many training classes. One occurrence satisfies the coverage
    criterion; two or more keeps each motion identifiable (an atom seen in a
    single co-occurrence context cannot be disentangled from its partner).
    """
    class_ids = [cid for cid, _ in spec.classes]
    motions = {cid: set(mids) for cid, mids in spec.classes}
    if not (0 < m_test < len(class_ids)):
        raise OvharError(f"m_test must be in 1..{len(class_ids) - 1}")
    order = list(class_ids)
    SplitMix64(derive_seed(seed, "ov-split")).shuffle(order)
    first_failure = None
    for combo in itertools.combinations(order, m_test):
        test_set = set(combo)
        train_ids = [cid for cid in class_ids if cid not in test_set]
        uncovered = {}
        for cid in combo:
            for mid in motions[cid]:
                occurrences = sum(1 for t in train_ids if mid in motions[t])
                if occurrences < min_motion_coverage:
                    uncovered.setdefault(cid, []).append(mid)
        if not uncovered:
            return EvalSplit(
                train_class_ids=sorted(train_ids),
                test_class_ids=sorted(test_set),
            )
        if first_failure is None:
            first_failure = (combo, {k: sorted(v) for k, v in uncovered.items()})
    combo, uncovered = first_failure
    raise OvharError(
        f"no feasible open-vocabulary split with m_test={m_test} and motion "
        f"coverage >= {min_motion_coverage}; e.g. holding out {sorted(combo)} "
        f"leaves motions under-covered: {uncovered}"
    )


def default_motion_set(channels: int = 6) -> dict[str, MotionPrimitive]:
    """Six atomic motions in disjoint frequency bands with distinct
    per-channel amplitude profiles."""
    names = ["walk_cycle", "arm_raise", "body_twist", "leg_kick", "arm_circle", "torso_bend"]
    freqs = [1.0, 2.2, 3.4, 4.6, 5.8, 7.0]
    durations = [2.2, 2.0, 2.1, 1.9, 2.3, 2.0]
    primitives = {}
    for j, (name, freq, dur) in enumerate(zip(names, freqs, durations)):
        patterns = []
        for c in range(channels):
            if c % len(names) == j:
                amp = 1.0
            elif (c + 1) % len(names) == j:
                amp = 0.45
            else:
                amp = 0.12
            phase = 2.0 * np.pi * ((0.13 * c + 0.29 * j) % 1.0)
            patterns.append(ChannelPattern(freq_hz=freq, amplitude=amp, phase=phase))
        primitives[name] = MotionPrimitive(
            motion_id=name, duration_seconds=dur, channels=patterns
        )
    return primitives


def default_spec(seed: int = 0, records_per_class: int = 16) -> SynthSpec:
    """11 classes over 6 atomic motions, each class a distinct two-motion
    combination. Every motion appears in several classes, so held-out classes
    are unseen combinations of well-covered motions (the compositional
    generalization setting)."""
    classes = [
        ("walk_twist", ["walk_cycle", "body_twist"]),
        ("walk_kick", ["walk_cycle", "leg_kick"]),
        ("walk_swim", ["walk_cycle", "arm_circle"]),
        ("walk_bow", ["walk_cycle", "torso_bend"]),
        ("wave_kick", ["arm_raise", "leg_kick"]),
        ("wave_swim", ["arm_raise", "arm_circle"]),
        ("wave_bow", ["arm_raise", "torso_bend"]),
        ("twist_swim", ["body_twist", "arm_circle"]),
        ("twist_bow", ["body_twist", "torso_bend"]),
        ("kick_swim", ["leg_kick", "arm_circle"]),
        ("kick_bow", ["leg_kick", "torso_bend"]),
    ]
    return SynthSpec(
        rate_hz=25.0,
        channels=6,
        noise_std=0.05,
        classes=classes,
        records_per_class=records_per_class,
        seed=seed,
        primitives=default_motion_set(6),
    )


def load_spec(path: str | Path) -> SynthSpec:
    obj = json.loads(Path(path).read_text())
    primitives = {}
    for entry in obj["primitives"]:
        primitives[entry["motion_id"]] = MotionPrimitive(
            motion_id=entry["motion_id"],
            duration_seconds=entry["duration_seconds"],
            channels=[
                ChannelPattern(p["freq_hz"], p["amplitude"], p.get("phase", 0.0))
                for p in entry["channels"]
            ],
            attack_fraction=entry.get("attack_fraction", 0.15),
            decay_fraction=entry.get("decay_fraction", 0.2),
        )
    spec = SynthSpec(
        rate_hz=obj["rate_hz"],
        channels=obj["channels"],
        noise_std=obj["noise_std"],
        classes=[(c["id"], list(c["motions"])) for c in obj["classes"]],
        records_per_class=obj["records_per_class"],
        seed=obj["seed"],
        primitives=primitives,
        jitter_fraction=obj.get("jitter_fraction", 0.1),
        modality=obj.get("modality", "imu"),
    )
    spec.validate()
    return spec


def save_spec(spec: SynthSpec, path: str | Path) -> None:
    obj = {
        "rate_hz": spec.rate_hz,
        "channels": spec.channels,
        "noise_std": spec.noise_std,
        "records_per_class": spec.records_per_class,
        "seed": spec.seed,
        "jitter_fraction": spec.jitter_fraction,
        "modality": spec.modality,
        "classes": [{"id": cid, "motions": mids} for cid, mids in spec.classes],
        "primitives": [
            {
                "motion_id": p.motion_id,
                "duration_seconds": p.duration_seconds,
                "attack_fraction": p.attack_fraction,
                "decay_fraction": p.decay_fraction,
                "channels": [
                    {"freq_hz": c.freq_hz, "amplitude": c.amplitude, "phase": c.phase}
                    for c in p.channels
                ],
            }
            for p in spec.primitives.values()
        ],
    }
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")
