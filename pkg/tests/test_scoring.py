import itertools
import math
import random

import pytest
from hypothesis import given, strategies as st

from raspref.domain import Problem, QualityWeights, StructuredPrompt, TraceSample, Trajectory
from raspref.errors import InsufficientSamples, LengthMismatch, MissingScore, OutOfRange, ZeroWeightSum
from raspref.scoring import (
    canonicalize,
    consistency,
    content_words,
    critique_mean,
    majority_answer,
    quality,
    retrieval_alignment,
    verifier_mean,
)


def samples_with(answers):
    return [TraceSample(trace=f"#### {a}" if a else "none", canonical_answer=a) for a in answers]


def pairwise_oracle(answers):
    k = len(answers)
    hits = 0
    for i in range(k):
        for j in range(k):
            if i != j and answers[i] is not None and answers[i] == answers[j]:
                hits += 1
    return hits / (k * (k - 1))


def traj(trace):
    return Trajectory(Problem("r", "retrieved"), StructuredPrompt("i"), trace)


# -- canonicalize --


@pytest.mark.parametrize(
    "trace, expected",
    [
        ("...so she earns $18 total.\n#### 18", "18"),
        ("The answer is 1,234.50 dollars", "1234.5"),
        ("I cannot solve this.", None),
        ("#### 72.0", "72"),
        ("Total is $1,000,000.", "1000000"),
        ("She has -3 apples? #### -3", "-3"),
        ("10 - 4 = 6 so the answer is 6. Check: 2 + 4 = 6", "6"),
        ("The answer is 18. That is 3 more than 15.", "18"),
        ("Answer: 0.50", "0.5"),
        ("First 3 then 5 then 12 apples", "12"),
        ("#### 007", "7"),
        ("Earlier 4 and 9.\n#### unknown", "9"),
        ("", None),
    ],
)
def test_canonicalize(trace, expected):
    assert canonicalize(trace) == expected


@pytest.mark.parametrize("form", ["18", "18.0", "$18", "18.00", "#### 18", "The answer is $18."])
def test_formatting_variants_agree(form):
    assert canonicalize(form) == "18"


@given(st.decimals(-10**9, 10**9, places=4, allow_nan=False, allow_infinity=False))
def test_canonicalize_idempotent(value):
    first = canonicalize(f"The result is {value}")
    assert first is not None
    assert canonicalize(first) == first


# -- consistency --


def test_consistency_examples():
    assert consistency(samples_with(["7", "7", "7"])) == 1.0
    assert consistency(samples_with(["7", "8"])) == 0.0
    assert consistency(samples_with(["7", "7", "8"])) == pytest.approx(1 / 3, abs=1e-15)
    assert consistency(samples_with([None, None])) == 0.0


def test_consistency_needs_two_samples():
    with pytest.raises(InsufficientSamples):
        consistency(samples_with(["7"]))


def test_consistency_exhaustive_against_pair_oracle():
    alphabet = ["a", "b", None]
    for k in range(2, 6):
        for answers in itertools.product(alphabet, repeat=k):
            assert consistency(samples_with(answers)) == pairwise_oracle(answers)


@given(st.lists(st.sampled_from(["1", "2", "3", None]), min_size=2, max_size=8), st.randoms())
def test_consistency_permutation_invariant(answers, rnd):
    shuffled = list(answers)
    rnd.shuffle(shuffled)
    assert consistency(samples_with(answers)) == consistency(samples_with(shuffled))


# -- verifier / critique --


def test_verifier_mean():
    s = [TraceSample("t", verifier_score=v) for v in (0.5, 0.7, 0.9)]
    assert verifier_mean(s) == pytest.approx(0.7, abs=1e-15)
    assert verifier_mean([TraceSample("t", verifier_score=1.0)]) == 1.0
    with pytest.raises(MissingScore):
        verifier_mean([TraceSample("t")])


def test_verifier_mean_matches_resummation():
    rng = random.Random(11)
    scores = [rng.random() for _ in range(100)]
    oracle = 0.0
    for s in sorted(scores):
        oracle += s
    oracle /= len(scores)
    got = verifier_mean([TraceSample("t", verifier_score=v) for v in scores])
    assert abs(got - oracle) <= 1e-12


def test_critique_mean():
    two = [TraceSample("a"), TraceSample("b")]
    assert critique_mean(two, [1.0, 1.0]) == 1.0
    assert critique_mean(two, [0.0, 1.0]) == 0.5
    with pytest.raises(OutOfRange):
        critique_mean(two, [1.2, 0.5])
    with pytest.raises(LengthMismatch):
        critique_mean(two, [1.0])


# -- retrieval alignment --


def test_retrieval_alignment_examples():
    retrieved = [traj("apple banana cherry date")]
    assert retrieval_alignment([TraceSample("apple banana cherry date")], retrieved) == 1.0
    assert retrieval_alignment([TraceSample("zebra yak")], retrieved) == 0.0
    assert retrieval_alignment([TraceSample("the apple and the banana")], retrieved) == 0.5
    assert retrieval_alignment([TraceSample("anything")], []) == 0.0


def test_retrieval_alignment_is_mean_over_samples_and_union_over_retrieved():
    retrieved = [traj("apple banana"), traj("cherry, date!")]
    samples = [TraceSample("Apple."), TraceSample("banana cherry date")]
    assert retrieval_alignment(samples, retrieved) == pytest.approx((1 / 4 + 3 / 4) / 2)


def test_content_words_drop_stop_words_and_punctuation():
    assert content_words("The cat's hat, and THE dog!") == {"cats", "hat", "dog"}


# -- quality --


def test_quality_examples():
    w = QualityWeights(0.3, 0.1, 0.5, 0.1)
    assert quality(1, 1, 1, 1, w).q == 1.0
    assert quality(0.4, 0.9, 0.1, 0.7, QualityWeights(1, 0, 0, 0)).q == pytest.approx(0.4)
    assert quality(0.6, 0.8, 0.4, 0.2, QualityWeights(1, 1, 1, 1)).q == pytest.approx(0.5, abs=1e-15)


def test_quality_without_retrieval_renormalizes():
    r = quality(0.6, 0.8, 0.4, 0.0, QualityWeights(), include_retrieval=False)
    assert r.q == pytest.approx(0.6)
    assert r.weights.delta == 0.0
    with pytest.raises(ZeroWeightSum):
        quality(0.5, 0.5, 0.5, 0.5, QualityWeights(0, 0, 0, 1), include_retrieval=False)


def test_quality_rejects_out_of_range_component():
    with pytest.raises(OutOfRange):
        quality(1.1, 0, 0, 0, QualityWeights())


unit = st.floats(0, 1)
weight = st.floats(0, 10)


@given(st.tuples(unit, unit, unit, unit), st.tuples(weight, weight, weight, weight), st.integers(0, 3), unit)
def test_quality_monotone_in_each_component(comps, ws, which, bump):
    if sum(ws) == 0 or ws[which] == 0:
        ws = tuple(1.0 if i == which else w for i, w in enumerate(ws))
    w = QualityWeights(*ws)
    higher = list(comps)
    higher[which] = max(comps[which], bump)
    assert quality(*higher, w).q >= quality(*comps, w).q


@given(st.tuples(unit, unit, unit, unit), st.tuples(weight, weight, weight, weight))
def test_quality_within_component_hull(comps, ws):
    if sum(ws) == 0:
        ws = (1.0, 1.0, 1.0, 1.0)
    q = quality(*comps, QualityWeights(*ws)).q
    assert min(comps) <= q <= max(comps)


def test_majority_answer():
    assert majority_answer(["3", "4", "4", None]) == "4"
    assert majority_answer(["5", "3", "3", "5"]) == "5"
    assert majority_answer([None, None]) is None
