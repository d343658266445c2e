"""Two-stage retrieval: caption-driven filtering, fusion, and re-ranking.

Stage 1 ranks the whole gallery by cosine similarity to the modification
caption embedding and keeps the top k. Stage 2 re-scores those candidates
against the fused query (caption embeddings + reference image embedding).
Ablation modes toggle either stage or pin the query to a single caption.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyGallery,
    UnknownCandidate,
    UnknownReference,
    ZeroVector,
)
from .vectors import FusionWeights, Scored, as_vector, fuse, normalize, rank_ids


class RetrievalMode(str, enum.Enum):
    FULL = "full"
    NO_FILTERING = "no_filtering"
    NO_RERANK = "no_rerank"
    MODI_ONLY = "modi_only"
    INTEG_ONLY = "integ_only"


class GalleryIndex:
    """Immutable identifier-addressed store of gallery embeddings.

    Rows are validated (finite, nonzero, one shared dimension) and cached in
    unit-norm float64 form so every similarity is a plain dot product.
    """

    def __init__(self, entries: Mapping[str, np.ndarray] | Sequence[tuple[str, np.ndarray]]):
        items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        if len({i for i, _ in items}) != len(items):
            raise ValueError("gallery identifiers must be unique")
        ids = []
        rows = []
        for item_id, vec in items:
            if not item_id:
                raise ValueError("gallery identifiers must be non-empty")
            v = as_vector(vec)
            if not np.any(v):
                raise ZeroVector(f"gallery entry {item_id!r} is all-zero")
            ids.append(item_id)
            rows.append(v)
        dims = {r.shape[0] for r in rows}
        if len(dims) > 1:
            raise DimensionMismatch(f"gallery entries disagree on dimension: {sorted(dims)}")
        self._ids: tuple[str, ...] = tuple(ids)
        self._id_array = np.asarray(ids, dtype=np.str_)
        self._index = {item_id: i for i, item_id in enumerate(ids)}
        self.dim = dims.pop() if dims else 0
        matrix = np.vstack(rows) if rows else np.empty((0, 0))
        norms = np.linalg.norm(matrix, axis=1, keepdims=True) if rows else None
        self._unit = matrix / norms if rows else matrix

    @classmethod
    def from_store(cls, store) -> "GalleryIndex":
        return cls([(item_id, vec) for item_id, vec in store.entries])

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._index

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    def vector(self, item_id: str) -> np.ndarray:
        """Unit-norm embedding for one gallery item."""
        if item_id not in self._index:
            raise UnknownCandidate(item_id)
        return self._unit[self._index[item_id]]

    def scores_against(self, query: np.ndarray) -> np.ndarray:
        """Cosine similarity of every gallery row to query, in id order."""
        q = normalize(as_vector(query))
        if q.shape[0] != self.dim:
            raise DimensionMismatch(f"query dim {q.shape[0]} vs gallery dim {self.dim}")
        return np.clip(self._unit @ q, -1.0, 1.0)


@dataclass(frozen=True)
class RetrievalConfig:
    """Knobs for one retrieval run."""

    k: int
    weights: FusionWeights
    mode: RetrievalMode = RetrievalMode.FULL
    exclude_reference: bool = False
    pre_normalize: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        object.__setattr__(self, "mode", RetrievalMode(self.mode))


@dataclass(frozen=True)
class QueryEmbeddings:
    """Precomputed embeddings for one composed query."""

    modification: np.ndarray
    integration: np.ndarray
    reference: np.ndarray


@dataclass
class RankedResult:
    """Final ranking for one query plus stage-1 diagnostics."""

    query_id: str
    ranking: list[Scored]
    stage1_candidates: list[Scored]
    mode: RetrievalMode

    def ranked_ids(self) -> list[str]:
        return [s.id for s in self.ranking]

    def stage1_score(self, item_id: str) -> float | None:
        for s in self.stage1_candidates:
            if s.id == item_id:
                return s.score
        return None


def stage1_filter(
    query: np.ndarray,
    gallery: GalleryIndex,
    k: int,
    exclude: str | None = None,
) -> list[Scored]:
    """Top-k gallery items by cosine similarity to the caption embedding."""
    if len(gallery) == 0:
        raise EmptyGallery("cannot filter an empty gallery")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = gallery.scores_against(query)
    ids = gallery._id_array
    if exclude is not None:
        keep = ids != exclude
        ids, scores = ids[keep], scores[keep]
    order = rank_ids(ids, scores)[:k]
    return [Scored(str(ids[i]), float(scores[i])) for i in order]


def stage2_rerank(
    q: QueryEmbeddings,
    candidates: Sequence[Scored],
    gallery: GalleryIndex,
    weights: FusionWeights,
    pre_normalize: bool = True,
) -> list[Scored]:
    """Reorder candidates by similarity to the fused query embedding."""
    if not candidates:
        raise ValueError("candidate list is empty")
    combined = fuse(q.modification, q.integration, q.reference, weights, pre_normalize)
    unit = normalize(combined)
    rows = np.vstack([gallery.vector(c.id) for c in candidates])
    scores = np.clip(rows @ unit, -1.0, 1.0)
    ids = np.asarray([c.id for c in candidates], dtype=np.str_)
    order = rank_ids(ids, scores)
    return [Scored(str(ids[i]), float(scores[i])) for i in order]


def retrieve(
    query_id: str,
    q: QueryEmbeddings,
    gallery: GalleryIndex,
    cfg: RetrievalConfig,
    reference_id: str | None = None,
) -> RankedResult:
    """Run the configured two-stage pipeline for one query."""
    if cfg.exclude_reference and reference_id is None:
        raise UnknownReference(f"query {query_id!r}: exclusion requested without a reference id")
    if len(gallery) == 0:
        raise EmptyGallery("cannot retrieve from an empty gallery")
    exclude = reference_id if cfg.exclude_reference else None
    mode = cfg.mode

    if mode is RetrievalMode.INTEG_ONLY:
        stage1_query = q.integration
    else:
        stage1_query = q.modification

    if mode is RetrievalMode.MODI_ONLY:
        weights = FusionWeights(1.0, 0.0)
    elif mode is RetrievalMode.INTEG_ONLY:
        weights = FusionWeights(0.0, 1.0)
    else:
        weights = cfg.weights

    k = len(gallery) if mode is RetrievalMode.NO_FILTERING else cfg.k
    stage1 = stage1_filter(stage1_query, gallery, k, exclude)

    if mode is RetrievalMode.NO_RERANK:
        ranking = list(stage1)
    elif not stage1:
        ranking = []
    else:
        ranking = stage2_rerank(q, stage1, gallery, weights, cfg.pre_normalize)

    return RankedResult(query_id=query_id, ranking=ranking, stage1_candidates=stage1, mode=mode)
