"""Label-free prompt quality signals and their weighted aggregate."""

from __future__ import annotations

import math
import re
from collections import Counter
from decimal import Decimal, InvalidOperation
from typing import Iterable, Sequence

from .domain import QualityReport, QualityWeights, TraceSample, Trajectory
from .errors import InsufficientSamples, LengthMismatch, MissingScore, OutOfRange, ZeroWeightSum

# A signed number with optional currency mark and thousands separators.
# The sign is only taken when it cannot be a binary minus ("3-2").
_NUMBER = re.compile(
    r"(?:(?<![\w)\]])-\s?)?[$€£]?\s?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?!\d)"
)
_DELIMITER = "####"
# "answer" cue followed closely by a number, e.g. "The answer is $18", "Answer: -3".
_ANSWER_CUE = re.compile(
    r"answer\b[^\d\n$€£-]{0,40}?(" + _NUMBER.pattern + r")",
    re.IGNORECASE,
)


def normalize_number(token: str) -> str | None:
    """Strip currency and separators, drop trailing fractional zeros."""
    cleaned = re.sub(r"[\s$€£,]", "", token)
    try:
        value = Decimal(cleaned)
    except InvalidOperation:
        return None
    if not value.is_finite():
        return None
    if value == 0:
        return "0"
    text = format(value, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def canonicalize(trace: str) -> str | None:
    """Extract and normalize the final numeric answer of a reasoning trace.

    Priority: the first number after the last ``####``, then the last number
    directly following an "answer" cue, then the last number anywhere.
    Returns None when the trace contains no number.
    """
    if not trace:
        return None
    pos = trace.rfind(_DELIMITER)
    if pos >= 0:
        m = _NUMBER.search(trace, pos + len(_DELIMITER))
        if m:
            return normalize_number(m.group(0))
    cued = _ANSWER_CUE.findall(trace)
    if cued:
        return normalize_number(cued[-1])
    numbers = _NUMBER.findall(trace)
    if numbers:
        return normalize_number(numbers[-1])
    return None


def consistency(samples: Sequence[TraceSample]) -> float:
    """Fraction of ordered sample pairs whose canonical answers agree.

    Absent answers agree with nothing, not even another absent answer.
    """
    k = len(samples)
    if k < 2:
        raise InsufficientSamples(f"consistency needs at least 2 samples, got {k}")
    counts = Counter(s.canonical_answer for s in samples if s.canonical_answer is not None)
    agreeing = sum(c * (c - 1) for c in counts.values())
    return agreeing / (k * (k - 1))


def verifier_mean(samples: Sequence[TraceSample]) -> float:
    if not samples:
        raise MissingScore("no samples to average")
    scores = []
    for i, s in enumerate(samples):
        if s.verifier_score is None:
            raise MissingScore(f"sample {i} has no verifier score")
        scores.append(s.verifier_score)
    return math.fsum(scores) / len(scores)


def critique_mean(samples: Sequence[TraceSample], scores: Sequence[float]) -> float:
    if len(samples) != len(scores):
        raise LengthMismatch(f"{len(samples)} samples but {len(scores)} critique scores")
    if not scores:
        raise LengthMismatch("no critique scores")
    for s in scores:
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not math.isfinite(s) or not 0.0 <= s <= 1.0:
            raise OutOfRange(f"critique score {s!r} outside [0, 1]")
    return math.fsum(scores) / len(scores)


STOP_WORDS = frozenset(
    """
    a about above after again against all also am an and any are as at be because been before being
    below between both but by can could did do does doing down during each few for from further had has
    have having he her here hers herself him himself his how i if in into is it its itself just let lets
    me more most my myself no nor not now of off on once only or other our ours ourselves out over own
    same she should so some such than that the their theirs them themselves then there these they this
    those through to too under until up very was we were what when where which while who whom why will
    with would you your yours yourself yourselves s t
    """.split()
)

_WORD = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens with punctuation stripped."""
    return _WORD.findall(text.lower().replace("'", ""))


def content_words(text: str) -> set[str]:
    return {w for w in tokenize(text) if w not in STOP_WORDS}


def alignment(trace: str, retrieved_vocab: set[str]) -> float:
    if not retrieved_vocab:
        return 0.0
    return len(content_words(trace) & retrieved_vocab) / len(retrieved_vocab)


def retrieval_alignment(samples: Sequence[TraceSample], retrieved: Sequence[Trajectory]) -> float:
    """Mean share of the retrieved traces' content vocabulary reused by each sample."""
    if not retrieved or not samples:
        return 0.0
    vocab: set[str] = set()
    for t in retrieved:
        vocab |= content_words(t.trace)
    return math.fsum(alignment(s.trace, vocab) for s in samples) / len(samples)


def quality(
    c_cons: float,
    c_ver: float,
    c_crit: float,
    c_ret: float,
    weights: QualityWeights,
    k_used: int = 2,
    include_retrieval: bool = True,
) -> QualityReport:
    """Weighted mean of the four components, normalized by the weight sum.

    With ``include_retrieval=False`` the retrieval weight is treated as zero
    for this evaluation and the remaining weights renormalize.
    """
    components = (c_cons, c_ver, c_crit, c_ret)
    for name, c in zip(("c_cons", "c_ver", "c_crit", "c_ret"), components):
        if isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(c) or not 0.0 <= c <= 1.0:
            raise OutOfRange(f"{name}={c!r} outside [0, 1]")
    w = (weights.alpha, weights.beta, weights.gamma, weights.delta if include_retrieval else 0.0)
    total = math.fsum(w)
    if total <= 0:
        raise ZeroWeightSum("quality weights sum to zero for this evaluation")
    q = math.fsum(wi * ci for wi, ci in zip(w, components)) / total
    # Rounding can push a convex combination a hair outside its hull.
    q = min(max(q, min(components)), max(components))
    used = weights if include_retrieval else QualityWeights(w[0], w[1], w[2], 0.0)
    return QualityReport(
        c_cons=float(c_cons), c_ver=float(c_ver), c_crit=float(c_crit), c_ret=float(c_ret),
        q=q, k_used=k_used, weights=used,
    )


def score_samples(
    samples: Sequence[TraceSample],
    critique_scores: Sequence[float],
    retrieved: Sequence[Trajectory],
    weights: QualityWeights,
) -> QualityReport:
    """Compute every component from scored samples and aggregate them."""
    return quality(
        consistency(samples),
        verifier_mean(samples),
        critique_mean(samples, critique_scores),
        retrieval_alignment(samples, retrieved),
        weights,
        k_used=len(samples),
        include_retrieval=bool(retrieved),
    )


def majority_answer(answers: Iterable[str | None]) -> str | None:
    """Most frequent non-absent answer; ties go to the earliest first occurrence."""
    answers = [a for a in answers if a is not None]
    if not answers:
        return None
    counts = Counter(answers)
    best = max(counts.values())
    return next(a for a in answers if counts[a] == best)
