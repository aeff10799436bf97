"""Cosine-similarity lookup decoding, open-vocabulary evaluation, and the
stub clients for the external text-inversion / class-mapping paths."""

from __future__ import annotations

import json
import re
import urllib.request
from dataclasses import dataclass, field

import numpy as np

from ovhar.data import DatasetManifest, SensorSequence, read_sequence
from ovhar.errors import ClientError, DecodeError, OvharError
from ovhar.lexicon import EmbeddingTable, Lexicon
from ovhar.nn.model import RegressorModel
from ovhar.windows import WindowConfig, segment

TIE_EPS = 1e-9


def cosine_sim(h: np.ndarray, e: np.ndarray) -> float:
    """h.e / (|h| |e|); undefined (error) for zero-norm inputs."""
    if h.shape != e.shape:
        raise DecodeError(f"cosine operands differ in shape: {h.shape} vs {e.shape}")
    norm_h = float(np.linalg.norm(h))
    norm_e = float(np.linalg.norm(e))
    if norm_h == 0.0 or norm_e == 0.0:
        raise DecodeError("undefined similarity: zero-norm vector")
    return float(h @ e) / (norm_h * norm_e)


@dataclass
class Prediction:
    source_id: str
    ranked: list[tuple[str, float]]  # (class_id, similarity), descending
    top: str
    tie_set: list[str]  # within TIE_EPS of the max, sorted


def decode(h: np.ndarray, table: EmbeddingTable, eps_tie: float = TIE_EPS, source_id: str = "") -> Prediction:
    """Rank every table entry by cosine similarity to h.

    The tie set collects entries within eps_tie of the maximum similarity (a
    mixture of equally plausible activities); the deterministic top pick is
    the lexicographically smallest member.
    """
    if not table.entries:
        raise DecodeError("empty embedding table")
    sims = [(cid, cosine_sim(h, table.embedding(cid))) for cid in table.entries]
    ranked = sorted(sims, key=lambda item: (-item[1], item[0]))
    best = ranked[0][1]
    tie_set = sorted(cid for cid, sim in sims if sim >= best - eps_tie)
    return Prediction(source_id=source_id, ranked=ranked, top=tie_set[0], tie_set=tie_set)


@dataclass
class ActivityPrediction:
    final: Prediction
    per_window: list[Prediction]
    window_count: int
    embedding: np.ndarray | None = None  # aggregate h (mean mode only)


def predict_activity(
    model: RegressorModel,
    seq: SensorSequence,
    cfg: WindowConfig,
    table: EmbeddingTable,
    aggregation: str = "mean",
) -> ActivityPrediction:
    """Predict one activity from all of its windows.

    "mean" averages the per-window embeddings before a single decode (one
    label per activity); "vote" decodes each window and takes the most common
    top class (ties broken lexicographically).
    """
    windows = segment(seq, cfg)
    if windows[0].samples.shape[1] != model.config.in_channels:
        raise OvharError(
            f"channel mismatch: model expects {model.config.in_channels}, "
            f"sequence has {windows[0].samples.shape[1]}"
        )
    preds = model.forward_batch(np.stack([w.samples for w in windows]))
    per_window = [decode(preds[i], table, source_id=seq.id) for i in range(len(windows))]
    h_agg = None
    if aggregation == "mean":
        h_agg = preds.mean(axis=0)
        final = decode(h_agg, table, source_id=seq.id)
    elif aggregation == "vote":
        counts: dict[str, int] = {}
        for p in per_window:
            counts[p.top] = counts.get(p.top, 0) + 1
        winner = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        final = next(p for p in per_window if p.top == winner)
    else:
        raise OvharError(f"unknown aggregation {aggregation!r}")
    return ActivityPrediction(
        final=final, per_window=per_window, window_count=len(windows), embedding=h_agg
    )


@dataclass
class EvalSplit:
    train_class_ids: list[str]
    test_class_ids: list[str]

    def __post_init__(self):
        overlap = set(self.train_class_ids) & set(self.test_class_ids)
        if overlap:
            raise OvharError(f"train/test class sets overlap: {sorted(overlap)}")

    def validate_coverage(self, lexicon: Lexicon) -> None:
        """Every test class must be entirely described by atomic motions
        appearing in the training classes."""
        train_motions = lexicon.motion_union(self.train_class_ids)
        for cid in self.test_class_ids:
            missing = set(lexicon.classes[cid].motions) - train_motions
            if missing:
                raise OvharError(
                    f"test class {cid!r} uses motions absent from training: {sorted(missing)}"
                )

    def to_json(self) -> dict:
        return {
            "train_class_ids": list(self.train_class_ids),
            "test_class_ids": list(self.test_class_ids),
        }


def load_split(path) -> EvalSplit:
    obj = json.loads(open(path).read())
    return EvalSplit(
        train_class_ids=list(obj["train_class_ids"]),
        test_class_ids=list(obj["test_class_ids"]),
    )


def save_split(split: EvalSplit, path) -> None:
    with open(path, "w") as fh:
        json.dump(split.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class EvalReport:
    macro_f1: float
    per_class: dict[str, dict[str, float]]  # precision/recall/f1/support
    confusion: dict[str, dict[str, int]]  # truth -> predicted -> count
    tie_count: int
    window_count: int
    activity_count: int
    undecodable: list[str]
    candidate_mode: str
    candidate_class_ids: list[str]

    def to_json(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "per_class": self.per_class,
            "confusion": self.confusion,
            "tie_count": self.tie_count,
            "window_count": self.window_count,
            "activity_count": self.activity_count,
            "undecodable": self.undecodable,
            "candidate_mode": self.candidate_mode,
            "candidate_class_ids": self.candidate_class_ids,
        }


def confusion_to_csv(confusion: dict[str, dict[str, int]]) -> str:
    """truth rows x predicted columns, labels sorted."""
    truths = sorted(confusion)
    predicted = sorted({p for row in confusion.values() for p in row})
    lines = ["truth\\predicted," + ",".join(predicted)]
    for t in truths:
        lines.append(t + "," + ",".join(str(confusion[t].get(p, 0)) for p in predicted))
    return "\n".join(lines) + "\n"


def score_predictions(pairs: list[tuple[str, str]]) -> tuple[float, dict, dict]:
    """Macro F1 plus per-class stats from (truth, predicted) pairs.

    Classes with zero support are excluded from the macro average (their
    recall is undefined); they still contribute false positives to the
    precision of classes that do have support.
    """
    confusion: dict[str, dict[str, int]] = {}
    for truth, pred in pairs:
        confusion.setdefault(truth, {})
        confusion[truth][pred] = confusion[truth].get(pred, 0) + 1
    truths = sorted(confusion)
    per_class: dict[str, dict[str, float]] = {}
    f1_values = []
    for cls in truths:
        support = sum(confusion[cls].values())
        tp = confusion[cls].get(cls, 0)
        fn = support - tp
        fp = sum(row.get(cls, 0) for t, row in confusion.items() if t != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": support,
        }
        f1_values.append(f1)
    macro = float(np.mean(f1_values)) if f1_values else 0.0
    return macro, per_class, confusion


def evaluate(
    model: RegressorModel,
    manifest: DatasetManifest,
    split: EvalSplit,
    table: EmbeddingTable,
    cfg: WindowConfig,
    candidates: str = "all",
    aggregation: str = "mean",
) -> EvalReport:
    """Top-1 lookup decoding of every test-class activity in the manifest.

    ``candidates`` selects the lookup table: "all" ranks against train+test
    classes (the open-vocabulary setting), "test" against test classes only.
    """
    test_classes = set(split.test_class_ids)
    eval_records = [r for r in manifest.records if r.class_id in test_classes]
    if not eval_records:
        raise OvharError("no test-class records in manifest")
    if candidates == "all":
        cand_table = table.subset(sorted(set(split.train_class_ids) | test_classes))
    elif candidates == "test":
        cand_table = table.subset(sorted(test_classes))
    else:
        raise OvharError(f"unknown candidate mode {candidates!r}")
    pairs: list[tuple[str, str]] = []
    tie_count = 0
    window_count = 0
    undecodable: list[str] = []
    for rec in eval_records:
        seq = read_sequence(manifest, rec.id)
        try:
            pred = predict_activity(model, seq, cfg, cand_table, aggregation=aggregation)
        except DecodeError:
            undecodable.append(rec.id)
            continue
        window_count += pred.window_count
        if len(pred.final.tie_set) > 1:
            tie_count += 1
        pairs.append((rec.class_id, pred.final.top))
    macro, per_class, confusion = score_predictions(pairs)
    return EvalReport(
        macro_f1=macro,
        per_class=per_class,
        confusion=confusion,
        tie_count=tie_count,
        window_count=window_count,
        activity_count=len(eval_records),
        undecodable=undecodable,
        candidate_mode=candidates,
        candidate_class_ids=cand_table.class_ids(),
    )


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.lower()))


class TextInversionClient:
    """Embedding -> natural-language description."""

    def invert(self, h: np.ndarray) -> str:
        raise NotImplementedError


class LookupInversionStub(TextInversionClient):
    """Inverts by lookup: returns the stored sentence of the nearest entry."""

    def __init__(self, table: EmbeddingTable):
        self.table = table

    def invert(self, h: np.ndarray) -> str:
        return self.table.sentence(decode(h, self.table).top)


class HttpTextClient(TextInversionClient):
    """POSTs {"embedding": [...]} to an endpoint; never falls back silently."""

    def __init__(self, url: str, timeout_seconds: float = 10.0):
        self.url = url
        self.timeout_seconds = timeout_seconds

    def invert(self, h: np.ndarray) -> str:
        body = json.dumps({"embedding": h.tolist()}).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_seconds) as resp:
                return json.loads(resp.read())["text"]
        except Exception as exc:
            raise ClientError(f"inversion endpoint {self.url} unreachable: {exc}") from exc


class ClassMappingClient:
    """Description text -> one of the candidate class labels."""

    def map_text(self, text: str, candidates: list[str]) -> str:
        raise NotImplementedError


class TokenOverlapMappingStub(ClassMappingClient):
    """Scores candidates by case-insensitive token overlap with the text.

    ``aliases`` adds extra descriptive tokens per candidate (e.g. the motion
    phrases that make up the activity)."""

    def __init__(self, aliases: dict[str, list[str]] | None = None):
        self.aliases = aliases or {}

    def map_text(self, text: str, candidates: list[str]) -> str:
        if not candidates:
            raise ClientError("class mapping requires a non-empty candidate list")
        text_tokens = _tokens(text)
        best = None
        for cand in sorted(candidates):
            cand_tokens = _tokens(cand)
            for alias in self.aliases.get(cand, []):
                cand_tokens |= _tokens(alias)
            score = len(text_tokens & cand_tokens)
            if best is None or score > best[0]:
                best = (score, cand)
        return best[1]


class HttpMappingClient(ClassMappingClient):
    def __init__(self, url: str, timeout_seconds: float = 10.0):
        self.url = url
        self.timeout_seconds = timeout_seconds

    def map_text(self, text: str, candidates: list[str]) -> str:
        body = json.dumps({"text": text, "candidates": candidates}).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_seconds) as resp:
                return json.loads(resp.read())["class_id"]
        except Exception as exc:
            raise ClientError(f"mapping endpoint {self.url} unreachable: {exc}") from exc
