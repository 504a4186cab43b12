"""Exact brute-force cosine-similarity index.

Dot products and norms use ``math.fsum`` so every similarity is computed
with a single correctly-rounded summation. Identical vectors therefore get
bit-identical scores and ties resolve purely by insertion order.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from operator import mul
from typing import Iterable, Sequence

from .errors import DimensionMismatch, ValidationError, ZeroVector


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValidationError("embedding must have dim > 0")
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("embedding entries must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.values)

    @property
    def norm(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.values))


def as_vector(v: EmbeddingVector | Sequence[float]) -> EmbeddingVector:
    return v if isinstance(v, EmbeddingVector) else EmbeddingVector(tuple(v))


@dataclass(frozen=True)
class IndexEntry:
    key: str
    vector: EmbeddingVector
    insertion_seq: int


def _dot(a: Sequence[float], b: Sequence[float]) -> float:
    return math.fsum(map(mul, a, b))


def _cosine(a: Sequence[float], b: Sequence[float], norm_a: float, norm_b: float) -> float:
    sim = _dot(a, b) / (norm_a * norm_b)
    return max(-1.0, min(1.0, sim))


def cosine_similarity(a: EmbeddingVector | Sequence[float], b: EmbeddingVector | Sequence[float]) -> float:
    a, b = as_vector(a), as_vector(b)
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension {a.dim} != {b.dim}")
    na, nb = a.norm, b.norm
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    return _cosine(a.values, b.values, na, nb)


def top_k(
    entries: Iterable[IndexEntry], query: EmbeddingVector | Sequence[float], k: int
) -> list[tuple[str, float]]:
    """Return the ``k`` most similar entries as ``(key, similarity)`` pairs.

    Sorted by similarity descending, ties by smaller ``insertion_seq``.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    query = as_vector(query)
    qn = query.norm
    if qn == 0.0:
        raise ZeroVector("query vector is all zeros")
    scored = []
    for e in entries:
        if e.vector.dim != query.dim:
            raise DimensionMismatch(f"entry {e.key!r} has dim {e.vector.dim}, query has {query.dim}")
        en = e.vector.norm
        if en == 0.0:
            raise ZeroVector(f"entry {e.key!r} is a zero vector")
        scored.append((-_cosine(e.vector.values, query.values, en, qn), e.insertion_seq, e.key))
    scored.sort()
    return [(key, -neg) for neg, _, key in scored[:k]]


class EmbeddingIndex:
    """Mutable collection of IndexEntry with cached norms.

    Reads may run concurrently; callers serialize ``add``.
    """

    def __init__(self, dim: int | None = None):
        self.dim = dim
        self._entries: list[IndexEntry] = []
        self._norms: list[float] = []
        self._keys: set[str] = set()
        self._next_seq = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> list[IndexEntry]:
        return list(self._entries)

    def check(self, vector: EmbeddingVector | Sequence[float]) -> EmbeddingVector:
        vector = as_vector(vector)
        if self.dim is not None and vector.dim != self.dim:
            raise DimensionMismatch(f"index dim is {self.dim}, got vector of dim {vector.dim}")
        if vector.norm == 0.0:
            raise ZeroVector("cannot index a zero vector")
        return vector

    def add(self, key: str, vector: EmbeddingVector | Sequence[float]) -> IndexEntry:
        vector = self.check(vector)
        with self._lock:
            if key in self._keys:
                raise ValidationError(f"duplicate index key {key!r}")
            entry = IndexEntry(key=key, vector=vector, insertion_seq=self._next_seq)
            self._next_seq += 1
            if self.dim is None:
                self.dim = vector.dim
            self._entries.append(entry)
            self._norms.append(vector.norm)
            self._keys.add(key)
        return entry

    def search(self, query: EmbeddingVector | Sequence[float], k: int, keys: set[str] | None = None) -> list[tuple[str, float]]:
        """Top-k over all entries, or only those whose key is in ``keys``."""
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        query = as_vector(query)
        if self.dim is not None and query.dim != self.dim:
            raise DimensionMismatch(f"index dim is {self.dim}, query has dim {query.dim}")
        qn = query.norm
        if qn == 0.0:
            raise ZeroVector("query vector is all zeros")
        entries, norms = self._entries, self._norms
        scored = [
            (-_cosine(e.vector.values, query.values, n, qn), e.insertion_seq, e.key)
            for e, n in zip(entries, norms)
            if keys is None or e.key in keys
        ]
        scored.sort()
        return [(key, -neg) for neg, _, key in scored[:k]]
