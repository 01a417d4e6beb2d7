"""Exact L2 nearest-neighbor search over a dataset bundle.

A deliberately simple flat index: the selected rows are snapshotted at build
time and every query performs an exhaustive blocked scan. Distances are
accumulated as squared L2 in 64-bit and converted to euclidean units only at
the API boundary; ties are broken by ascending record id, so query results
are fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .data import DatasetBundle, Record
from .errors import DimMismatch

# Rows per scan block; bounds the transient distance buffer without changing
# results (the scan is exact either way).
_BLOCK = 4096


@dataclass(frozen=True)
class Neighbor:
    id: str
    distance: float


@dataclass(frozen=True)
class NeighborIndex:
    """Immutable snapshot of selected record ids and their vectors."""

    ids: tuple[str, ...]
    vectors: np.ndarray  # float64, len(ids) x dim

    @property
    def size(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


def build(bundle: DatasetBundle, selector: Callable[[Record], bool]) -> NeighborIndex:
    """Snapshot the bundle rows whose records satisfy ``selector``."""
    keep = [i for i, record in enumerate(bundle.records) if selector(record)]
    ids = tuple(bundle.records[i].id for i in keep)
    vectors = bundle.store.rows[keep].astype(np.float64) if keep else np.empty(
        (0, bundle.dim), dtype=np.float64
    )
    return NeighborIndex(ids=ids, vectors=vectors)


def _squared_distances(index: NeighborIndex, query: np.ndarray) -> np.ndarray:
    """Exact squared L2 distance from ``query`` to every indexed vector."""
    out = np.empty(index.size, dtype=np.float64)
    for start in range(0, index.size, _BLOCK):
        block = index.vectors[start : start + _BLOCK]
        diff = block - query
        out[start : start + block.shape[0]] = np.einsum("ij,ij->i", diff, diff)
    # Exact arithmetic can still produce -0.0 or tiny negatives via einsum
    # reassociation; clamp so sqrt never sees a negative.
    np.maximum(out, 0.0, out=out)
    return out


def _as_query(index: NeighborIndex, query: Sequence[float] | np.ndarray) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if index.size and q.shape[0] != index.dim:
        raise DimMismatch(
            f"query has dimension {q.shape[0]}, index expects {index.dim}"
        )
    return q


def top_k(
    index: NeighborIndex,
    query: Sequence[float] | np.ndarray,
    k: int,
    exclude_id: str | None = None,
) -> list[Neighbor]:
    """The ``k`` nearest indexed points, ascending distance, ties by id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = _as_query(index, query)
    if index.size == 0:
        return []
    d2 = _squared_distances(index, q)
    ids = np.asarray(index.ids, dtype=object)
    if exclude_id is not None:
        keep = ids != exclude_id
        d2, ids = d2[keep], ids[keep]
    # lexsort's last key is primary: sort by distance, then id.
    order = np.lexsort((ids, d2))[:k]
    return [Neighbor(id=str(ids[i]), distance=float(np.sqrt(d2[i]))) for i in order]


def within_radius(
    index: NeighborIndex,
    query: Sequence[float] | np.ndarray,
    radius: float,
    k_cap: int,
    exclude_id: str | None = None,
) -> list[Neighbor]:
    """``top_k(..., k_cap, ...)`` filtered to distance <= radius (inclusive).

    The cap applies before the radius filter: a dense ball larger than
    ``k_cap`` yields exactly the ``k_cap`` nearest members.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    nearest = top_k(index, query, k_cap, exclude_id=exclude_id)
    return [n for n in nearest if n.distance <= radius]
