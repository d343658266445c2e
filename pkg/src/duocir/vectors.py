"""Exact dense-vector math shared by both retrieval stages.

All scores are accumulated in float64 regardless of storage precision, and
every ordering uses one deterministic tie rule: descending score, then
ascending identifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidWeights, ZeroVector


class Scored(NamedTuple):
    """A gallery identifier with a similarity score."""

    id: str
    score: float


@dataclass(frozen=True)
class FusionWeights:
    """Weights for combining the two caption embeddings with the reference.

    The remaining mass 1 - alpha - beta goes to the reference image.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise InvalidWeights(f"alpha={self.alpha}, beta={self.beta} outside [0, 1]")
        if self.alpha + self.beta > 1.0:
            raise InvalidWeights(f"alpha + beta = {self.alpha + self.beta} exceeds 1")

    @property
    def reference(self) -> float:
        return 1.0 - self.alpha - self.beta


def as_vector(values: Iterable[float] | np.ndarray) -> np.ndarray:
    """Validate and convert to a 1-D float64 embedding vector."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise ZeroVector("vector contains NaN or Inf coordinates")
    return v


def normalize(v: np.ndarray | Sequence[float]) -> np.ndarray:
    """Scale v to unit Euclidean norm, preserving direction."""
    v = as_vector(v)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVector("cannot normalize an all-zero vector")
    return v / norm


def cosine_sim(a: np.ndarray | Sequence[float], b: np.ndarray | Sequence[float]) -> float:
    """Cosine similarity: l2-normalize both inputs, then dot product."""
    a = as_vector(a)
    b = as_vector(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"dims differ: {a.shape[0]} vs {b.shape[0]}")
    score = float(np.dot(normalize(a), normalize(b)))
    # unit dots can leak past +/-1 by an ulp
    return min(1.0, max(-1.0, score))


def fuse(
    modification: np.ndarray | Sequence[float],
    integration: np.ndarray | Sequence[float],
    reference: np.ndarray | Sequence[float],
    weights: FusionWeights,
    pre_normalize: bool = True,
) -> np.ndarray:
    """Weighted sum of the two caption embeddings and the reference embedding.

    With pre_normalize (the default) each component is l2-normalized before
    the sum, so the weights act on directions rather than raw encoder norms.
    """
    parts = [as_vector(modification), as_vector(integration), as_vector(reference)]
    dims = {p.shape[0] for p in parts}
    if len(dims) != 1:
        raise DimensionMismatch(f"fusion inputs disagree on dimension: {sorted(dims)}")
    if pre_normalize:
        parts = [normalize(p) for p in parts]
    else:
        for p in parts:
            if not np.any(p):
                raise ZeroVector("fusion input is all-zero")
    coeffs = (weights.alpha, weights.beta, weights.reference)
    return coeffs[0] * parts[0] + coeffs[1] * parts[1] + coeffs[2] * parts[2]


def top_k(scores: Sequence[Scored], k: int) -> list[Scored]:
    """Best-first prefix of scores: descending score, ties by ascending id.

    k past the end clamps to the full list; deterministic for fixed input.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ordered = sorted(scores, key=lambda s: (-s.score, s.id))
    return ordered[:k]


def rank_ids(ids: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Indices ordering (ids, scores) by descending score, ties ascending id.

    Vectorized counterpart of top_k used on whole-gallery score arrays.
    """
    return np.lexsort((ids, -scores))
