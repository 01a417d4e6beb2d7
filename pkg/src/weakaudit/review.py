"""Object-level attribution, association mining, and the human review queue.

Attribution heatmaps and segmentation masks arrive as plain rasters; per-object
relevance is the mean heatmap value over the object's pixels. Records whose
prediction is class c and which carry an object o at high relevance contribute
evidence to the association (o, c). Associations touching weakspot territory
are shortlisted for human review; spurious/benign verdicts are strictly
human-set and kept in an append-only history persisted as JSON.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .audit import Weakspot
from .data import Record
from .errors import DimMismatch, IoFailure, MissingObjects, UnknownKey, UnknownObjectId

VERDICTS = ("pending", "spurious", "benign")


@dataclass(frozen=True)
class Raster:
    """Row-major grid of values; heatmaps hold reals, masks hold object ids."""

    width: int
    height: int
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise DimMismatch(
                f"raster dimensions must be positive, got {self.width}x{self.height}"
            )
        if len(self.values) != self.width * self.height:
            raise DimMismatch(
                f"raster declares {self.width}x{self.height}="
                f"{self.width * self.height} values, holds {len(self.values)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "Raster":
        height = len(rows)
        width = len(rows[0]) if rows else 0
        flat: list[float] = []
        for row in rows:
            if len(row) != width:
                raise DimMismatch("raster rows must all have the same length")
            flat.extend(row)
        return cls(width=width, height=height, values=tuple(flat))

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Raster":
        return cls(
            width=int(data["width"]),
            height=int(data["height"]),
            values=tuple(data["values"]),
        )

    def to_json_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "values": list(self.values)}


@dataclass(frozen=True)
class ObjectRelevance:
    object_label: str
    mean_relevance: float
    pixel_count: int


@dataclass(frozen=True)
class Association:
    object_label: str
    predicted_class: str
    support: int
    mean_relevance: float
    evidence_ids: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "object_label": self.object_label,
            "predicted_class": self.predicted_class,
            "support": self.support,
            "mean_relevance": self.mean_relevance,
            "evidence_ids": list(self.evidence_ids),
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Association":
        return cls(
            object_label=data["object_label"],
            predicted_class=data["predicted_class"],
            support=int(data["support"]),
            mean_relevance=float(data["mean_relevance"]),
            evidence_ids=tuple(data["evidence_ids"]),
        )


@dataclass(frozen=True)
class HistoryEntry:
    verdict: str
    reviewer: str
    timestamp: str

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class ReviewItem:
    key: tuple[str, str]  # (object_label, predicted_class)
    association: Association
    verdict: str = "pending"
    history: tuple[HistoryEntry, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "key": list(self.key),
            "association": self.association.to_json_dict(),
            "verdict": self.verdict,
            "history": [h.to_json_dict() for h in self.history],
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "ReviewItem":
        return cls(
            key=(data["key"][0], data["key"][1]),
            association=Association.from_json_dict(data["association"]),
            verdict=data["verdict"],
            history=tuple(
                HistoryEntry(
                    verdict=h["verdict"],
                    reviewer=h["reviewer"],
                    timestamp=h["timestamp"],
                )
                for h in data["history"]
            ),
        )


def object_relevance(
    heatmap: Raster,
    mask: Raster,
    label_table: Mapping[int, str],
) -> list[ObjectRelevance]:
    """Mean heatmap value per segmented object, descending relevance.

    Mask value 0 is background and contributes nothing; every other mask id
    must appear in ``label_table``. Ties in mean relevance break by ascending
    label so the ordering is deterministic.
    """
    if (heatmap.width, heatmap.height) != (mask.width, mask.height):
        raise DimMismatch(
            f"heatmap is {heatmap.width}x{heatmap.height}, "
            f"mask is {mask.width}x{mask.height}"
        )
    totals: dict[int, float] = {}
    counts: dict[int, int] = {}
    for value, raw_id in zip(heatmap.values, mask.values):
        object_id = int(raw_id)
        if object_id == 0:
            continue
        if object_id not in label_table:
            raise UnknownObjectId(f"mask id {object_id} missing from label table")
        totals[object_id] = totals.get(object_id, 0.0) + float(value)
        counts[object_id] = counts.get(object_id, 0) + 1
    out = [
        ObjectRelevance(
            object_label=label_table[object_id],
            mean_relevance=totals[object_id] / counts[object_id],
            pixel_count=counts[object_id],
        )
        for object_id in totals
    ]
    out.sort(key=lambda o: (-o.mean_relevance, o.object_label))
    return out


def mine(
    records: Sequence[Record],
    predictions: Mapping[str, str],
    relevance_threshold: float = 0.5,
) -> list[Association]:
    """Object-to-predicted-class associations over the given records.

    Each record predicted as class c contributes one unit of support to
    (o, c) for every carried object o with relevance >= the threshold.
    Every record must carry objects metadata. Output is sorted by descending
    support, ties by (object_label, predicted_class).
    """
    groups: dict[tuple[str, str], dict] = {}
    for record in records:
        if record.objects is None:
            raise MissingObjects(f"record {record.id!r} carries no objects metadata")
        predicted = predictions.get(record.id)
        if predicted is None:
            continue
        for obj in record.objects:
            if obj.relevance < relevance_threshold:
                continue
            entry = groups.setdefault(
                (obj.label, predicted),
                {"relevance_sum": 0.0, "evidence": []},
            )
            entry["relevance_sum"] += obj.relevance
            entry["evidence"].append(record.id)
    out = [
        Association(
            object_label=label,
            predicted_class=predicted,
            support=len(entry["evidence"]),
            mean_relevance=entry["relevance_sum"] / len(entry["evidence"]),
            evidence_ids=tuple(entry["evidence"]),
        )
        for (label, predicted), entry in groups.items()
    ]
    out.sort(key=lambda a: (-a.support, a.object_label, a.predicted_class))
    return out


def shortlist(
    associations: Sequence[Association],
    weakspots: Sequence[Weakspot],
) -> list[ReviewItem]:
    """Pending review items for associations touching weakspot territory.

    An association qualifies when any of its evidence records is a pivotal
    point or sits inside some weakspot's neighborhood.
    """
    territory: set[str] = set()
    for spot in weakspots:
        territory.add(spot.pivotal_id)
        territory.update(spot.neighbor_ids)
    return [
        ReviewItem(
            key=(a.object_label, a.predicted_class),
            association=a,
            verdict="pending",
            history=(),
        )
        for a in associations
        if territory.intersection(a.evidence_ids)
    ]


def _utc_now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


class ReviewQueue:
    """Single-writer review state with atomic JSON persistence.

    ``path`` is optional: an in-memory queue never touches disk. When set,
    every mutation rewrites the whole state file via atomic rename, and
    ``ReviewQueue.load`` restores it. ``clock`` supplies history timestamps
    and exists so tests and deterministic runs can pin them.
    """

    def __init__(
        self,
        items: Iterable[ReviewItem] = (),
        path: str | Path | None = None,
        clock: Callable[[], str] = _utc_now,
    ) -> None:
        self._items: dict[tuple[str, str], ReviewItem] = {}
        for item in items:
            self._items[item.key] = item
        self._path = Path(path) if path is not None else None
        self._clock = clock
        self._lock = threading.Lock()

    @classmethod
    def load(
        cls,
        path: str | Path,
        clock: Callable[[], str] = _utc_now,
    ) -> "ReviewQueue":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        items = [ReviewItem.from_json_dict(entry) for entry in data]
        return cls(items=items, path=path, clock=clock)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return tuple(key) in self._items

    def items(self) -> list[ReviewItem]:
        """Current items in a stable order (by key)."""
        return [self._items[key] for key in sorted(self._items)]

    def get(self, key: tuple[str, str]) -> ReviewItem:
        try:
            return self._items[tuple(key)]
        except KeyError:
            raise UnknownKey(f"no review item for key {tuple(key)!r}") from None

    def refresh(self, items: Sequence[ReviewItem]) -> None:
        """Replace the queue contents, keeping verdicts for surviving keys.

        Items whose key already exists retain their verdict and history;
        genuinely new keys enter as given (normally pending). Keys absent
        from ``items`` are dropped.
        """
        with self._lock:
            merged: dict[tuple[str, str], ReviewItem] = {}
            for item in items:
                old = self._items.get(item.key)
                if old is not None:
                    merged[item.key] = replace(
                        item, verdict=old.verdict, history=old.history
                    )
                else:
                    merged[item.key] = item
            self._items = merged
            self._persist()

    def set_verdict(self, key: tuple[str, str], verdict: str, reviewer: str) -> ReviewItem:
        if verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {verdict!r}")
        key = tuple(key)
        with self._lock:
            item = self._items.get(key)
            if item is None:
                raise UnknownKey(f"no review item for key {key!r}")
            entry = HistoryEntry(
                verdict=verdict, reviewer=reviewer, timestamp=self._clock()
            )
            updated = replace(
                item, verdict=verdict, history=item.history + (entry,)
            )
            self._items[key] = updated
            self._persist()
            return updated

    def spurious(self) -> list[Association]:
        """Associations whose current verdict is spurious, in key order."""
        return [
            item.association for item in self.items() if item.verdict == "spurious"
        ]

    def save(self, path: str | Path | None = None) -> None:
        with self._lock:
            if path is not None:
                self._path = Path(path)
            self._persist(force=True)

    def _persist(self, force: bool = False) -> None:
        if self._path is None:
            if force:
                raise IoFailure("review queue has no backing path")
            return
        payload = json.dumps(
            [item.to_json_dict() for item in self.items()],
            ensure_ascii=False,
            indent=2,
            sort_keys=True,
        )
        try:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            tmp = self._path.with_name(self._path.name + ".tmp")
            tmp.write_text(payload + "\n", encoding="utf-8")
            tmp.replace(self._path)
        except OSError as exc:
            raise IoFailure(f"cannot write {self._path}: {exc}") from exc


def set_verdict(
    queue: ReviewQueue, key: tuple[str, str], verdict: str, reviewer: str
) -> ReviewQueue:
    """Record a human verdict on a queue item; returns the queue for chaining."""
    queue.set_verdict(key, verdict, reviewer)
    return queue


def spurious(queue: ReviewQueue) -> list[Association]:
    return queue.spurious()
