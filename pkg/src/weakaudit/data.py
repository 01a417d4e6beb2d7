"""Dataset model: embedding store binary format, record manifests, bundles.

An embedding store is a dense ``count x dim`` matrix of 32-bit floats kept
on disk in a small self-describing binary format (see ``save_embedding_store``
for the layout). Records carry the per-image metadata (split, class label,
attributes, caption, scene, detected objects, provenance) and pair with store
rows by index. A bundle binds the two together and derives the class
vocabulary; all downstream modules consume bundles.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    BadMagic,
    BadVersion,
    DimMismatch,
    DuplicateId,
    InvalidRecord,
    IoFailure,
    LengthMismatch,
    NonFiniteValue,
    TruncatedPayload,
    ZeroBase,
)

MAGIC = b"WSEM"
FORMAT_VERSION = 1

# Header: magic, version, row count, dimension (all little-endian u32 after magic).
_HEADER = struct.Struct("<4sIII")

SPLITS = ("train", "test", "procured")
PROVENANCES = ("original", "web", "txt2img", "synthetic")
ENVIRONMENTS = ("indoor", "outdoor", "unknown")


@dataclass(frozen=True)
class Scene:
    """High-level scene metadata: indoor/outdoor flag plus an optional venue."""

    environment: str = "unknown"
    venue: str | None = None

    def validate(self) -> None:
        if self.environment not in ENVIRONMENTS:
            raise InvalidRecord(
                f"scene environment must be one of {ENVIRONMENTS}, got {self.environment!r}"
            )

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"environment": self.environment}
        if self.venue is not None:
            out["venue"] = self.venue
        return out

    @classmethod
    def from_json_dict(cls, data: Mapping[str, Any]) -> "Scene":
        return cls(environment=data.get("environment", "unknown"), venue=data.get("venue"))


@dataclass(frozen=True)
class ObjectTag:
    """A detected object with its attribution relevance in [0, 1]."""

    label: str
    relevance: float

    def validate(self) -> None:
        if not self.label:
            raise InvalidRecord("object label must be non-empty")
        if not (0.0 <= self.relevance <= 1.0) or not math.isfinite(self.relevance):
            raise InvalidRecord(
                f"object relevance must be in [0, 1], got {self.relevance!r} for {self.label!r}"
            )


@dataclass(frozen=True)
class Record:
    """Metadata for one datapoint, aligned by index with an embedding row."""

    id: str
    split: str
    true_class: str
    attributes: Mapping[str, str] = field(default_factory=dict)
    caption: str | None = None
    scene: Scene | None = None
    objects: tuple[ObjectTag, ...] | None = None
    provenance: str = "original"

    def validate(self) -> None:
        if not self.id:
            raise InvalidRecord("record id must be non-empty")
        if self.split not in SPLITS:
            raise InvalidRecord(f"split must be one of {SPLITS}, got {self.split!r}")
        if not self.true_class:
            raise InvalidRecord(f"record {self.id!r} has an empty true_class")
        if self.provenance not in PROVENANCES:
            raise InvalidRecord(
                f"provenance must be one of {PROVENANCES}, got {self.provenance!r}"
            )
        if self.scene is not None:
            self.scene.validate()
        if self.objects is not None:
            for obj in self.objects:
                obj.validate()

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "split": self.split,
            "true_class": self.true_class,
            "attributes": dict(self.attributes),
        }
        if self.caption is not None:
            out["caption"] = self.caption
        if self.scene is not None:
            out["scene"] = self.scene.to_json_dict()
        if self.objects is not None:
            out["objects"] = [
                {"label": o.label, "relevance": o.relevance} for o in self.objects
            ]
        out["provenance"] = self.provenance
        return out

    @classmethod
    def from_json_dict(cls, data: Mapping[str, Any]) -> "Record":
        try:
            scene = data.get("scene")
            objects = data.get("objects")
            record = cls(
                id=data["id"],
                split=data["split"],
                true_class=data["true_class"],
                attributes=dict(data.get("attributes", {})),
                caption=data.get("caption"),
                scene=Scene.from_json_dict(scene) if scene is not None else None,
                objects=tuple(
                    ObjectTag(label=o["label"], relevance=float(o["relevance"]))
                    for o in objects
                )
                if objects is not None
                else None,
                provenance=data.get("provenance", "original"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidRecord(f"malformed record entry: {exc}") from exc
        record.validate()
        return record


@dataclass(frozen=True)
class ClassVocabulary:
    """Ordered set of class labels with a label -> position map."""

    labels: tuple[str, ...]
    index: Mapping[str, int] = field(hash=False, compare=False, default_factory=dict)

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "ClassVocabulary":
        ordered: list[str] = []
        seen: set[str] = set()
        for label in labels:
            if label in seen:
                raise DuplicateId(f"duplicate class label {label!r}")
            seen.add(label)
            ordered.append(label)
        labels_t = tuple(ordered)
        return cls(labels=labels_t, index={label: i for i, label in enumerate(labels_t)})

    @classmethod
    def of_records(cls, records: Iterable[Record]) -> "ClassVocabulary":
        """Vocabulary in first-appearance order of ``true_class`` values."""
        ordered: list[str] = []
        seen: set[str] = set()
        for record in records:
            if record.true_class not in seen:
                seen.add(record.true_class)
                ordered.append(record.true_class)
        return cls.from_labels(ordered)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self.index

    def position(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise InvalidRecord(f"class label {label!r} not in vocabulary") from None


@dataclass
class EmbeddingStore:
    """In-memory ``count x dim`` matrix of 32-bit float embeddings.

    Construction does not validate; ``validate()`` runs wherever a store
    crosses an API boundary (bind, save, load) so that malformed payloads
    are always rejected before use.
    """

    rows: np.ndarray

    @classmethod
    def of(cls, rows: Any, dim: int | None = None) -> "EmbeddingStore":
        """Build a store from any array-like, casting to float32."""
        arr = np.asarray(rows, dtype=np.float32)
        if arr.size == 0 and dim is not None:
            arr = arr.reshape(0, dim)
        if arr.ndim != 2:
            raise DimMismatch(f"embedding rows must be 2-d, got shape {arr.shape}")
        return cls(rows=arr)

    @property
    def count(self) -> int:
        return int(self.rows.shape[0])

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    def validate(self) -> None:
        if self.rows.ndim != 2:
            raise DimMismatch(f"embedding rows must be 2-d, got shape {self.rows.shape}")
        if self.dim < 1:
            raise DimMismatch("embedding dimension must be positive")
        if self.rows.dtype != np.float32:
            raise DimMismatch(f"embedding payload must be float32, got {self.rows.dtype}")
        if self.count and not np.isfinite(self.rows).all():
            raise NonFiniteValue("embedding store contains NaN or infinite values")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingStore):
            return NotImplemented
        return self.rows.shape == other.rows.shape and bool(
            np.array_equal(self.rows, other.rows)
        )


def load_embedding_store(path: str | Path) -> EmbeddingStore:
    """Read an embedding store file.

    Layout: 4-byte ASCII magic ``WSEM``; u32 LE version (currently 1);
    u32 LE row count; u32 LE dimension; then ``count * dim`` IEEE-754
    32-bit little-endian floats, row-major.
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if len(blob) < 4:
        raise TruncatedPayload(f"{path}: file shorter than the 4-byte magic")
    if blob[:4] != MAGIC:
        raise BadMagic(f"{path}: expected magic {MAGIC!r}, found {bytes(blob[:4])!r}")
    if len(blob) < _HEADER.size:
        raise TruncatedPayload(f"{path}: header truncated at {len(blob)} bytes")

    _, version, count, dim = _HEADER.unpack_from(blob, 0)
    if version != FORMAT_VERSION:
        raise BadVersion(f"{path}: unsupported format version {version}")
    if dim < 1:
        raise TruncatedPayload(f"{path}: dimension field must be positive, got {dim}")

    expected = count * dim * 4
    payload = blob[_HEADER.size :]
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{path}: payload holds {len(payload)} bytes, expected {expected}"
        )

    rows = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(count, dim)
    store = EmbeddingStore(rows=rows)
    store.validate()
    return store


def save_embedding_store(store: EmbeddingStore, path: str | Path) -> None:
    """Write a store so that a subsequent load is bit-identical."""
    store.validate()
    path = Path(path)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, store.count, store.dim)
    payload = np.ascontiguousarray(store.rows, dtype="<f4").tobytes()
    try:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(header + payload)
        tmp.replace(path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_manifest(path: str | Path) -> list[Record]:
    """Read a JSONL manifest: one record object per line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    records = []
    # split on "\n" only: JSON strings may legally contain other Unicode
    # line separators (U+0085, U+2028, ...) that splitlines() would cut at
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidRecord(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        records.append(Record.from_json_dict(data))
    return records


def save_manifest(records: Sequence[Record], path: str | Path) -> None:
    """Write records as JSONL with a stable field order."""
    path = Path(path)
    lines = [
        json.dumps(r.to_json_dict(), ensure_ascii=False, separators=(",", ":"))
        for r in records
    ]
    try:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        tmp.replace(path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


@dataclass(frozen=True)
class DatasetBundle:
    """Embeddings bound to their records plus the derived class vocabulary."""

    store: EmbeddingStore
    records: tuple[Record, ...]
    vocabulary: ClassVocabulary
    _row_of: Mapping[str, int] = field(hash=False, compare=False, repr=False, default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.records)

    @property
    def dim(self) -> int:
        return self.store.dim

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    def record(self, record_id: str) -> Record:
        return self.records[self.row_of(record_id)]

    def row_of(self, record_id: str) -> int:
        try:
            return self._row_of[record_id]
        except KeyError:
            raise KeyError(f"record id {record_id!r} not in bundle") from None

    def vector(self, record_id: str) -> np.ndarray:
        return self.store.rows[self.row_of(record_id)]

    def has_record(self, record_id: str) -> bool:
        return record_id in self._row_of

    def restrict(self, keep: Callable[[Record], bool]) -> "DatasetBundle":
        """Sub-bundle of the records matching ``keep``; vocabulary is retained."""
        idx = [i for i, r in enumerate(self.records) if keep(r)]
        records = tuple(self.records[i] for i in idx)
        rows = self.store.rows[idx] if idx else self.store.rows[:0]
        return DatasetBundle(
            store=EmbeddingStore(rows=rows),
            records=records,
            vocabulary=self.vocabulary,
            _row_of={r.id: i for i, r in enumerate(records)},
        )


def bind(store: EmbeddingStore, records: Sequence[Record]) -> DatasetBundle:
    """Validate and bind a store to its records.

    The vocabulary is derived from distinct ``true_class`` values in
    first-appearance order.
    """
    store.validate()
    if store.count != len(records):
        raise LengthMismatch(
            f"store holds {store.count} rows but {len(records)} records were given"
        )
    seen: dict[str, int] = {}
    for i, record in enumerate(records):
        record.validate()
        if record.id in seen:
            raise DuplicateId(f"record id {record.id!r} appears more than once")
        seen[record.id] = i
    vocabulary = ClassVocabulary.of_records(records)
    return DatasetBundle(
        store=store,
        records=tuple(records),
        vocabulary=vocabulary,
        _row_of=seen,
    )


def merge(base: DatasetBundle, added: DatasetBundle) -> DatasetBundle:
    """Concatenate two bundles: base records first, vocabulary union base-first."""
    if base.dim != added.dim:
        raise DimMismatch(
            f"cannot merge stores of dimension {base.dim} and {added.dim}"
        )
    overlap = {r.id for r in base.records} & {r.id for r in added.records}
    if overlap:
        raise DuplicateId(
            f"bundles share {len(overlap)} record id(s), e.g. {sorted(overlap)[0]!r}"
        )
    rows = np.concatenate([base.store.rows, added.store.rows], axis=0)
    records = base.records + added.records
    labels = list(base.vocabulary.labels)
    for label in added.vocabulary.labels:
        if label not in base.vocabulary:
            labels.append(label)
    return DatasetBundle(
        store=EmbeddingStore(rows=rows),
        records=records,
        vocabulary=ClassVocabulary.from_labels(labels),
        _row_of={r.id: i for i, r in enumerate(records)},
    )


def augmentation_fraction(added_count: int, base_count: int) -> float:
    """Size of an augmentation relative to its base set, in percent."""
    if base_count <= 0:
        raise ZeroBase("base_count must be positive")
    return 100.0 * added_count / base_count


def load_bundle(store_path: str | Path, manifest_path: str | Path) -> DatasetBundle:
    """Load and bind a store file with its manifest."""
    return bind(load_embedding_store(store_path), load_manifest(manifest_path))


def save_bundle(
    bundle: DatasetBundle, store_path: str | Path, manifest_path: str | Path
) -> None:
    save_embedding_store(bundle.store, store_path)
    save_manifest(bundle.records, manifest_path)
