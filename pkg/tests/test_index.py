import math
import random

import pytest
from hypothesis import assume, given, strategies as st

from raspref.errors import DimensionMismatch, ZeroVector
from raspref.index import EmbeddingIndex, IndexEntry, EmbeddingVector, cosine_similarity, top_k


def brute_force(entries, query, k):
    """Independent full scan: plain-Python cosine, stable sort on (-sim, seq)."""

    def cos(a, b):
        dot = sum(x * y for x, y in zip(a, b))
        return dot / (math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b)))

    scored = sorted(entries, key=lambda e: (-cos(e.vector.values, query), e.insertion_seq))
    return [e.key for e in scored[:k]]


def entries_from(vectors):
    return [IndexEntry(f"k{i}", EmbeddingVector(tuple(v)), i) for i, v in enumerate(vectors)]


def test_cosine_examples():
    assert cosine_similarity([1, 0], [0, 1]) == 0.0
    assert cosine_similarity([3, 4], [3, 4]) == 1.0
    expected = 32 / (math.sqrt(14) * math.sqrt(77))
    assert cosine_similarity([1, 2, 3], [4, 5, 6]) == pytest.approx(expected, abs=1e-15)
    assert cosine_similarity([1, 2, 3], [4, 5, 6]) == pytest.approx(0.974632, abs=1e-6)


def test_cosine_errors():
    with pytest.raises(DimensionMismatch):
        cosine_similarity([1, 0], [1, 0, 0])
    with pytest.raises(ZeroVector):
        cosine_similarity([0, 0], [1, 0])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(st.lists(finite, min_size=1, max_size=16), st.floats(1e-3, 1e3))
def test_cosine_scale_invariance(a, c):
    assume(math.sqrt(sum(x * x for x in a)) > 1e-6)
    assert cosine_similarity(a, [c * x for x in a]) == pytest.approx(1.0, abs=1e-9)
    assert cosine_similarity(a, [-x for x in a]) == pytest.approx(-1.0, abs=1e-9)


@given(st.lists(finite, min_size=3, max_size=3), st.lists(finite, min_size=3, max_size=3))
def test_cosine_symmetric_and_bounded(a, b):
    assume(any(abs(x) > 1e-3 for x in a) and any(abs(x) > 1e-3 for x in b))
    s = cosine_similarity(a, b)
    assert s == cosine_similarity(b, a)
    assert -1.0 <= s <= 1.0


def test_self_match_and_oversized_k():
    entries = entries_from([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert top_k(entries, [0, 1, 0], 1) == [("k1", 1.0)]
    assert len(top_k(entries, [1, 1, 1], 10)) == 3


def test_ties_break_by_insertion_order():
    entries = entries_from([[0, 1], [1, 0], [1, 0]])
    assert [k for k, _ in top_k(entries, [1, 0], 2)] == ["k1", "k2"]
    # Same values inserted in the opposite seq order flip the ranking.
    flipped = [IndexEntry("late", EmbeddingVector((1.0, 0.0)), 5), IndexEntry("early", EmbeddingVector((1.0, 0.0)), 2)]
    assert [k for k, _ in top_k(flipped, [1, 0], 2)] == ["early", "late"]


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        top_k(entries_from([[1, 0]]), [1, 0, 0], 1)
    idx = EmbeddingIndex()
    idx.add("a", [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        idx.add("b", [1.0, 2.0, 3.0])
    with pytest.raises(DimensionMismatch):
        idx.search([1.0], 1)


@given(st.integers(1, 200), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_top_k_matches_brute_force(n, k, seed):
    rng = random.Random(seed)
    vectors = [[rng.choice([-1.0, 0.5, 1.0, 2.0]) for _ in range(4)] for _ in range(n)]
    vectors = [v if any(v) else [1.0, 0, 0, 0] for v in vectors]
    entries = entries_from(vectors)
    query = [rng.gauss(0, 1) for _ in range(4)]
    assert [key for key, _ in top_k(entries, query, k)] == brute_force(entries, query, k)


def test_index_insertion_seq_monotone_and_search_agrees_with_top_k():
    rng = random.Random(3)
    idx = EmbeddingIndex(dim=8)
    for i in range(300):
        idx.add(f"e{i}", [rng.gauss(0, 1) for _ in range(8)])
    seqs = [e.insertion_seq for e in idx.entries]
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)
    q = [rng.gauss(0, 1) for _ in range(8)]
    assert idx.search(q, 25) == top_k(idx.entries, q, 25)
    subset = {"e3", "e10", "e99"}
    assert {k for k, _ in idx.search(q, 10, keys=subset)} == subset
