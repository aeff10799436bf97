"""Class -> atomic motions -> sentence -> embedding chain.

A hand-authored lexicon decomposes each activity class into an ordered list
of atomic motions. A fixed template turns the motion phrases into one
descriptive sentence per class. Targets come either from the deterministic
compositional test embedder (no pretrained model needed) or from an imported
table file produced by an external encoder.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ovhar.errors import FormatError, LexiconError
from ovhar.rng import SplitMix64, fnv1a64

EMBEDDING_DIM = 768

TABLE_MAGIC = "OVHT"
TABLE_VERSION = 1


@dataclass
class AtomicMotion:
    id: str  # snake_case
    phrase: str  # e.g. "right arm swipe"


@dataclass
class ActivityClass:
    id: str
    label: str
    motions: list[str]  # ordered atomic-motion ids


@dataclass
class Lexicon:
    motions: dict[str, AtomicMotion] = field(default_factory=dict)
    classes: dict[str, ActivityClass] = field(default_factory=dict)

    def validate(self) -> None:
        for motion in self.motions.values():
            if not motion.phrase:
                raise LexiconError(f"motion {motion.id!r} has an empty phrase")
        for cls in self.classes.values():
            if not cls.motions:
                raise LexiconError(f"class {cls.id!r} has no motions")
            for mid in cls.motions:
                if mid not in self.motions:
                    raise LexiconError(f"class {cls.id!r} references unknown motion {mid!r}")

    def class_ids(self) -> list[str]:
        return sorted(self.classes)

    def motion_union(self, class_ids) -> set[str]:
        out: set[str] = set()
        for cid in class_ids:
            out.update(self.classes[cid].motions)
        return out


def load_lexicon(path: str | Path) -> Lexicon:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LexiconError(f"cannot read lexicon {path}: {exc}") from exc
    lex = Lexicon()
    for entry in obj.get("motions", []):
        motion = AtomicMotion(id=entry["id"], phrase=entry["phrase"])
        if motion.id in lex.motions:
            raise LexiconError(f"duplicate motion id {motion.id!r}")
        lex.motions[motion.id] = motion
    for entry in obj.get("classes", []):
        cls = ActivityClass(id=entry["id"], label=entry.get("label", entry["id"]), motions=list(entry["motions"]))
        if cls.id in lex.classes:
            raise LexiconError(f"duplicate class id {cls.id!r}")
        lex.classes[cls.id] = cls
    lex.validate()
    return lex


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    obj = {
        "motions": [{"id": m.id, "phrase": m.phrase} for m in lexicon.motions.values()],
        "classes": [
            {"id": c.id, "label": c.label, "motions": c.motions} for c in lexicon.classes.values()
        ],
    }
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def _article(phrase: str) -> str:
    return "an" if phrase[:1].lower() in "aeiou" else "a"


def build_sentence(cls: ActivityClass, lexicon: Lexicon) -> str:
    """Template over the class's motion phrases.

    One motion: "Perform a P1". Two: "Perform a P1 with a P2". Three or more:
    items from the third on are each introduced by "followed by", except that
    the final item of four or more is introduced by "and".
    Indefinite articles follow the leading vowel of the phrase.
    """
    phrases = []
    for mid in cls.motions:
        if mid not in lexicon.motions:
            raise LexiconError(f"class {cls.id!r} references unknown motion {mid!r}")
        phrases.append(lexicon.motions[mid].phrase)
    parts = [f"Perform {_article(phrases[0])} {phrases[0]}"]
    if len(phrases) > 1:
        parts.append(f"with {_article(phrases[1])} {phrases[1]}")
    for j, phrase in enumerate(phrases[2:], start=2):
        is_last = j == len(phrases) - 1
        joiner = "and" if (is_last and len(phrases) >= 4) else "followed by"
        parts.append(f"{joiner} {_article(phrase)} {phrase}")
    return " ".join(parts)


def motion_direction(motion_id: str, dim: int = EMBEDDING_DIM) -> np.ndarray:
    """Unit vector deterministically derived from the motion id: FNV-1a of the
    id seeds a splitmix64 stream emitting standard normals, L2-normalized."""
    rng = SplitMix64(fnv1a64(motion_id))
    v = rng.normals(dim)
    return v / np.linalg.norm(v)


def test_embed(motion_ids: list[str], dim: int = EMBEDDING_DIM) -> np.ndarray:
    """Deterministic compositional stand-in for a sentence encoder.

    Motion j (0-based) contributes its unit direction with positional weight
    1/(1+j); the weighted sum is L2-normalized. Unseen motion sequences land
    near their constituents by construction.
    """
    if not motion_ids:
        raise LexiconError("test_embed requires at least one motion")
    acc = np.zeros(dim)
    for j, mid in enumerate(motion_ids):
        acc += motion_direction(mid, dim) / (1.0 + j)
    return acc / np.linalg.norm(acc)


@dataclass
class EmbeddingTable:
    encoder_name: str
    entries: dict[str, tuple[str, np.ndarray]]  # class_id -> (sentence, embedding)
    dim: int = EMBEDDING_DIM

    def class_ids(self) -> list[str]:
        return sorted(self.entries)

    def embedding(self, class_id: str) -> np.ndarray:
        return self.entries[class_id][1]

    def sentence(self, class_id: str) -> str:
        return self.entries[class_id][0]

    def subset(self, class_ids) -> "EmbeddingTable":
        missing = [cid for cid in class_ids if cid not in self.entries]
        if missing:
            raise LexiconError(f"classes missing from table: {missing}")
        return EmbeddingTable(
            encoder_name=self.encoder_name,
            entries={cid: self.entries[cid] for cid in class_ids},
            dim=self.dim,
        )


def build_table(
    lexicon: Lexicon,
    class_ids: list[str],
    embedder: str = "test",
    imported: "EmbeddingTable | None" = None,
) -> EmbeddingTable:
    """One entry per class. ``embedder`` is "test" (deterministic) or "file"
    (entries copied from ``imported``, which must cover every class)."""
    if not class_ids:
        raise LexiconError("build_table requires at least one class")
    if embedder == "test":
        entries = {}
        for cid in class_ids:
            if cid not in lexicon.classes:
                raise LexiconError(f"class {cid!r} not in lexicon")
            cls = lexicon.classes[cid]
            entries[cid] = (build_sentence(cls, lexicon), test_embed(cls.motions))
        return EmbeddingTable(encoder_name="test-embedder-v1", entries=entries)
    if embedder == "file":
        if imported is None:
            raise LexiconError("embedder 'file' requires an imported table")
        if imported.dim != EMBEDDING_DIM:
            raise FormatError(f"dimension mismatch, expected {EMBEDDING_DIM}, got {imported.dim}")
        missing = [cid for cid in class_ids if cid not in imported.entries]
        if missing:
            raise LexiconError(f"imported table missing classes: {missing}")
        return imported.subset(class_ids)
    raise LexiconError(f"unknown embedder {embedder!r}")


def _float_to_hex(value: float) -> str:
    return struct.pack(">d", value).hex()


def _hex_to_float(text: str, offset: int) -> float:
    if len(text) != 16:
        raise FormatError(f"bad float hex {text!r}", offset=offset)
    try:
        return struct.unpack(">d", bytes.fromhex(text))[0]
    except ValueError as exc:
        raise FormatError(f"bad float hex {text!r}", offset=offset) from exc


def save_table(table: EmbeddingTable, path: str | Path) -> None:
    """Text format, entries sorted by class id, floats as lossless big-endian
    IEEE-754 hex. This layout is the interchange contract with external
    encoder exporters."""
    lines = [
        f"{TABLE_MAGIC} {TABLE_VERSION}",
        f"dim {table.dim}",
        f"encoder {table.encoder_name}",
        f"count {len(table.entries)}",
    ]
    for cid in sorted(table.entries):
        sentence, emb = table.entries[cid]
        if emb.shape != (table.dim,):
            raise FormatError(f"entry {cid!r} has shape {emb.shape}, expected ({table.dim},)")
        lines.append(f"class {cid}")
        lines.append(f"sentence {sentence}")
        lines.append(" ".join(_float_to_hex(v) for v in emb))
    Path(path).write_text("\n".join(lines) + "\n")


class _LineReader:
    def __init__(self, text: str):
        self.lines = text.split("\n")
        self.index = 0
        self.offset = 0  # byte offset of the current line start

    def next_line(self, what: str) -> str:
        if self.index >= len(self.lines) or (
            self.index == len(self.lines) - 1 and self.lines[self.index] == ""
        ):
            raise FormatError(f"truncated table while reading {what}", offset=self.offset)
        line = self.lines[self.index]
        self.index += 1
        self.offset += len(line.encode("utf-8")) + 1
        return line


def load_table(path: str | Path) -> EmbeddingTable:
    reader = _LineReader(Path(path).read_text())
    header = reader.next_line("magic").split()
    if len(header) != 2 or header[0] != TABLE_MAGIC:
        raise FormatError(f"bad table magic in {path}", offset=0)
    if int(header[1]) != TABLE_VERSION:
        raise FormatError(f"unsupported table version {header[1]}", offset=0)

    def keyed_line(key: str) -> str:
        line = reader.next_line(key)
        if not line.startswith(key + " "):
            raise FormatError(f"expected {key!r} line, got {line[:40]!r}", offset=reader.offset)
        return line[len(key) + 1 :]

    dim = int(keyed_line("dim"))
    encoder_name = keyed_line("encoder")
    count = int(keyed_line("count"))
    entries: dict[str, tuple[str, np.ndarray]] = {}
    for _ in range(count):
        cid = keyed_line("class")
        sentence = keyed_line("sentence")
        value_offset = reader.offset
        tokens = reader.next_line(f"embedding of {cid}").split()
        if len(tokens) != dim:
            raise FormatError(
                f"entry {cid!r} has {len(tokens)} values, expected {dim}", offset=value_offset
            )
        emb = np.array([_hex_to_float(tok, value_offset) for tok in tokens])
        if not np.all(np.isfinite(emb)) or np.linalg.norm(emb) == 0.0:
            raise FormatError(f"entry {cid!r} embedding must be finite and nonzero", offset=value_offset)
        if cid in entries:
            raise FormatError(f"duplicate class {cid!r} in table", offset=value_offset)
        entries[cid] = (sentence, emb)
    return EmbeddingTable(encoder_name=encoder_name, entries=entries, dim=dim)


class DecompositionClient:
    """Interface for a text-generation service that splits an activity label
    into atomic-motion ids. Only the lexicon-backed stub ships; a remote
    implementation would plug in here."""

    def decompose(self, label: str) -> list[str]:
        raise NotImplementedError


class LexiconDecompositionStub(DecompositionClient):
    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon

    def decompose(self, label: str) -> list[str]:
        for cls in self.lexicon.classes.values():
            if cls.label == label or cls.id == label:
                return list(cls.motions)
        raise LexiconError(f"no lexicon class for label {label!r}")
