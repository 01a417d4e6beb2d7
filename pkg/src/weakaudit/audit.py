"""Weakspot detection: find misclassified points whose neighborhoods are
dominated by the class the classifier mistook them for.

A "pivotal" point is one the classifier got wrong while sitting inside a
region the classifier handles confidently for the wrong class: most of its
in-radius neighbors truly belong to the predicted (erroneous) class and are
classified as such. The dominating fraction is the neighborhood's perplexity;
a point becomes a weakspot when that fraction clears a threshold and the
neighborhood has enough members to be trustworthy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .data import DatasetBundle
from .errors import MissingPrediction, NoNeighbors
from .neighbors import Neighbor, NeighborIndex, within_radius


@dataclass(frozen=True)
class Prediction:
    id: str
    predicted_class: str
    scores: tuple[float, ...] | None = None


@dataclass(frozen=True)
class AuditConfig:
    k: int = 100
    radius: float = 1.0
    perplexity_threshold: float = 0.70
    min_neighbors: int = 5
    reference_split: str = "test"

    def __post_init__(self) -> None:
        if not (0.0 <= self.perplexity_threshold <= 1.0):
            raise ValueError(
                f"perplexity_threshold must lie in [0, 1], got {self.perplexity_threshold}"
            )
        if self.radius < 0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.min_neighbors < 1:
            raise ValueError(f"min_neighbors must be >= 1, got {self.min_neighbors}")


@dataclass(frozen=True)
class Weakspot:
    pivotal_id: str
    true_class: str
    predicted_class: str
    radius: float
    perplexity: float
    neighbor_ids: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "pivotal_id": self.pivotal_id,
            "true_class": self.true_class,
            "predicted_class": self.predicted_class,
            "radius": self.radius,
            "perplexity": self.perplexity,
            "neighbor_ids": list(self.neighbor_ids),
        }


@dataclass(frozen=True)
class GridRow:
    radius: float
    perplexity_threshold: float
    weakspot_count: int
    pivotal_ids: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "radius": self.radius,
            "perplexity_threshold": self.perplexity_threshold,
            "weakspot_count": self.weakspot_count,
            "pivotal_ids": list(self.pivotal_ids),
        }


@dataclass(frozen=True)
class GridReport:
    rows: tuple[GridRow, ...]

    def to_json_dict(self) -> dict:
        return {"rows": [row.to_json_dict() for row in self.rows]}


def perplexity(
    neighbors: Sequence[Neighbor],
    erroneous_class: str,
    truth: Mapping[str, str],
    predictions: Mapping[str, str],
) -> float:
    """Fraction of neighbors correctly classified as ``erroneous_class``."""
    if not neighbors:
        raise NoNeighbors("perplexity is undefined for an empty neighborhood")
    hits = sum(
        1
        for n in neighbors
        if truth.get(n.id) == erroneous_class and predictions.get(n.id) == erroneous_class
    )
    return hits / len(neighbors)


def _prediction_map(predictions: Iterable[Prediction]) -> dict[str, str]:
    return {p.id: p.predicted_class for p in predictions}


def detect(
    bundle: DatasetBundle,
    predictions: Sequence[Prediction],
    index: NeighborIndex,
    config: AuditConfig,
) -> list[Weakspot]:
    """Weakspots among the reference split, sorted by descending perplexity.

    Every record of the configured reference split must carry a prediction.
    For each misclassified one, the in-radius neighborhood (self excluded,
    capped at ``config.k`` nearest) is scored; the point is reported when the
    neighborhood has at least ``config.min_neighbors`` members and its
    perplexity reaches ``config.perplexity_threshold``.
    """
    predicted = _prediction_map(predictions)
    reference = [r for r in bundle.records if r.split == config.reference_split]
    for record in reference:
        if record.id not in predicted:
            raise MissingPrediction(f"no prediction for reference record {record.id!r}")

    truth = {r.id: r.true_class for r in bundle.records}
    found: list[Weakspot] = []
    for record in reference:
        erroneous = predicted[record.id]
        if erroneous == record.true_class:
            continue
        hood = within_radius(
            index,
            bundle.vector(record.id),
            radius=config.radius,
            k_cap=config.k,
            exclude_id=record.id,
        )
        if len(hood) < config.min_neighbors:
            continue
        perp = perplexity(hood, erroneous, truth, predicted)
        if perp >= config.perplexity_threshold:
            found.append(
                Weakspot(
                    pivotal_id=record.id,
                    true_class=record.true_class,
                    predicted_class=erroneous,
                    radius=config.radius,
                    perplexity=perp,
                    neighbor_ids=tuple(n.id for n in hood),
                )
            )
    found.sort(key=lambda w: (-w.perplexity, w.pivotal_id))
    return found


def grid(
    bundle: DatasetBundle,
    predictions: Sequence[Prediction],
    index: NeighborIndex,
    d_values: Sequence[float],
    t_perp: float,
    base: AuditConfig | None = None,
) -> GridReport:
    """Run detection at each radius in ``d_values`` at threshold ``t_perp``.

    ``base`` supplies the remaining knobs (k, min_neighbors, reference split);
    defaults apply when omitted.
    """
    if not d_values:
        raise ValueError("d_values must be non-empty")
    base = base if base is not None else AuditConfig()
    rows = []
    for radius in d_values:
        config = AuditConfig(
            k=base.k,
            radius=radius,
            perplexity_threshold=t_perp,
            min_neighbors=base.min_neighbors,
            reference_split=base.reference_split,
        )
        spots = detect(bundle, predictions, index, config)
        rows.append(
            GridRow(
                radius=radius,
                perplexity_threshold=t_perp,
                weakspot_count=len(spots),
                pivotal_ids=tuple(w.pivotal_id for w in spots),
            )
        )
    return GridReport(rows=tuple(rows))


def pair_summary(
    weakspots: Sequence[Weakspot],
) -> dict[tuple[str, str], dict]:
    """Group weakspots by (true_class, predicted_class) with counts and ids."""
    out: dict[tuple[str, str], dict] = {}
    for spot in weakspots:
        key = (spot.true_class, spot.predicted_class)
        entry = out.setdefault(key, {"count": 0, "pivotal_ids": []})
        entry["count"] += 1
        entry["pivotal_ids"].append(spot.pivotal_id)
    return out
