"""Core data types shared across the refinement engine.

Every type is an immutable dataclass with a ``to_dict``/``from_dict`` pair
whose JSON form uses the field names below. Floats survive a JSON round trip
exactly because ``json`` emits ``repr`` for them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Mapping, Sequence, Union

from .errors import OutOfRange, ValidationError


def _check_unit(name: str, value: float | None) -> None:
    if value is None:
        return
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise OutOfRange(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise OutOfRange(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class Problem:
    id: str
    statement: str
    # Only present in evaluation data; the refinement loop never reads it.
    reference_answer: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.statement, str) or not self.statement.strip():
            raise ValidationError("problem statement must be non-empty")
        if not isinstance(self.id, str):
            raise ValidationError("problem id must be a string")

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "statement": self.statement, "reference_answer": self.reference_answer}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Problem:
        return cls(id=data["id"], statement=data["statement"], reference_answer=data.get("reference_answer"))


@dataclass(frozen=True)
class Example:
    """A worked (problem, solution) pair shown to the model."""

    problem: str
    solution: str

    def to_dict(self) -> dict[str, Any]:
        return {"problem": self.problem, "solution": self.solution}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Example:
        return cls(problem=data["problem"], solution=data["solution"])


@dataclass(frozen=True)
class StructuredPrompt:
    instructions: str
    guidelines: tuple[str, ...] = ()
    examples: tuple[Example, ...] = ()
    revision: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "guidelines", tuple(self.guidelines))
        object.__setattr__(self, "examples", tuple(self.examples))
        if isinstance(self.revision, bool) or not isinstance(self.revision, int) or self.revision < 0:
            raise ValidationError(f"revision must be a non-negative integer, got {self.revision!r}")
        for ex in self.examples:
            if not isinstance(ex, Example):
                raise ValidationError(f"examples must be Example instances, got {type(ex).__name__}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "instructions": self.instructions,
            "guidelines": list(self.guidelines),
            "examples": [ex.to_dict() for ex in self.examples],
            "revision": self.revision,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> StructuredPrompt:
        return cls(
            instructions=data["instructions"],
            guidelines=tuple(data.get("guidelines", ())),
            examples=tuple(Example.from_dict(e) for e in data.get("examples", ())),
            revision=data.get("revision", 0),
        )


@dataclass(frozen=True)
class TraceSample:
    trace: str
    canonical_answer: str | None = None
    verifier_score: float | None = None
    critique: str | None = None

    def __post_init__(self) -> None:
        _check_unit("verifier_score", self.verifier_score)

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace": self.trace,
            "canonical_answer": self.canonical_answer,
            "verifier_score": self.verifier_score,
            "critique": self.critique,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TraceSample:
        return cls(
            trace=data["trace"],
            canonical_answer=data.get("canonical_answer"),
            verifier_score=data.get("verifier_score"),
            critique=data.get("critique"),
        )


@dataclass(frozen=True)
class Trajectory:
    problem: Problem
    prompt: StructuredPrompt
    trace: str
    reward: float | None = None
    consistency: float | None = None
    verifier: float | None = None
    embedding: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        _check_unit("reward", self.reward)
        _check_unit("consistency", self.consistency)
        _check_unit("verifier", self.verifier)
        if self.embedding is not None:
            vec = tuple(float(v) for v in self.embedding)
            if not vec or not all(math.isfinite(v) for v in vec):
                raise ValidationError("embedding must be a non-empty vector of finite reals")
            object.__setattr__(self, "embedding", vec)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "problem": self.problem.to_dict(),
            "prompt": self.prompt.to_dict(),
            "trace": self.trace,
            "reward": self.reward,
            "consistency": self.consistency,
            "verifier": self.verifier,
        }
        if self.embedding is not None:
            out["embedding"] = list(self.embedding)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Trajectory:
        emb = data.get("embedding")
        return cls(
            problem=Problem.from_dict(data["problem"]),
            prompt=StructuredPrompt.from_dict(data["prompt"]),
            trace=data["trace"],
            reward=data.get("reward"),
            consistency=data.get("consistency"),
            verifier=data.get("verifier"),
            embedding=tuple(emb) if emb is not None else None,
        )


@dataclass(frozen=True)
class QualityWeights:
    alpha: float = 0.25
    beta: float = 0.25
    gamma: float = 0.25
    delta: float = 0.25

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "delta"):
            w = getattr(self, name)
            if isinstance(w, bool) or not isinstance(w, (int, float)) or not math.isfinite(w) or w < 0:
                raise ValidationError(f"weight {name} must be a finite non-negative real, got {w!r}")
        if self.total() <= 0:
            raise ValidationError("at least one quality weight must be positive")

    def total(self) -> float:
        return math.fsum((self.alpha, self.beta, self.gamma, self.delta))

    def to_dict(self) -> dict[str, Any]:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "delta": self.delta}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> QualityWeights:
        return cls(**{k: data[k] for k in ("alpha", "beta", "gamma", "delta") if k in data})


@dataclass(frozen=True)
class QualityReport:
    c_cons: float
    c_ver: float
    c_crit: float
    c_ret: float
    q: float
    k_used: int
    # Effective weights after any per-evaluation adjustment (e.g. empty retrieval).
    weights: QualityWeights = field(default_factory=QualityWeights)

    def __post_init__(self) -> None:
        for name in ("c_cons", "c_ver", "c_crit", "c_ret", "q"):
            _check_unit(name, getattr(self, name))
        if isinstance(self.k_used, bool) or not isinstance(self.k_used, int) or self.k_used < 2:
            raise ValidationError(f"k_used must be an integer >= 2, got {self.k_used!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "c_cons": self.c_cons,
            "c_ver": self.c_ver,
            "c_crit": self.c_crit,
            "c_ret": self.c_ret,
            "q": self.q,
            "k_used": self.k_used,
            "weights": self.weights.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> QualityReport:
        return cls(
            c_cons=data["c_cons"],
            c_ver=data["c_ver"],
            c_crit=data["c_crit"],
            c_ret=data["c_ret"],
            q=data["q"],
            k_used=data["k_used"],
            weights=QualityWeights.from_dict(data["weights"]) if "weights" in data else QualityWeights(),
        )


# Edit operations. Indices are interpreted against the prompt as it stands
# after every preceding edit in the same EditSet has been applied.


@dataclass(frozen=True)
class ReplaceInstructions:
    op: ClassVar[str] = "replace_instructions"
    text: str

    def to_dict(self) -> dict[str, Any]:
        return {"op": self.op, "text": self.text}


@dataclass(frozen=True)
class AppendGuideline:
    op: ClassVar[str] = "append_guideline"
    text: str

    def to_dict(self) -> dict[str, Any]:
        return {"op": self.op, "text": self.text}


@dataclass(frozen=True)
class RemoveGuideline:
    op: ClassVar[str] = "remove_guideline"
    index: int

    def to_dict(self) -> dict[str, Any]:
        return {"op": self.op, "index": self.index}


@dataclass(frozen=True)
class ReplaceExample:
    op: ClassVar[str] = "replace_example"
    index: int
    example: Example

    def to_dict(self) -> dict[str, Any]:
        return {"op": self.op, "index": self.index, "example": self.example.to_dict()}


@dataclass(frozen=True)
class RemoveExample:
    op: ClassVar[str] = "remove_example"
    index: int

    def to_dict(self) -> dict[str, Any]:
        return {"op": self.op, "index": self.index}


@dataclass(frozen=True)
class AppendExample:
    op: ClassVar[str] = "append_example"
    example: Example

    def to_dict(self) -> dict[str, Any]:
        return {"op": self.op, "example": self.example.to_dict()}


Edit = Union[ReplaceInstructions, AppendGuideline, RemoveGuideline, ReplaceExample, RemoveExample, AppendExample]

EDIT_TYPES: dict[str, type] = {
    cls.op: cls
    for cls in (ReplaceInstructions, AppendGuideline, RemoveGuideline, ReplaceExample, RemoveExample, AppendExample)
}


def edit_from_dict(data: Mapping[str, Any]) -> Edit:
    """Decode one edit; raises ValidationError on unknown ops or bad fields."""
    try:
        kind = data["op"]
        if kind in ("replace_instructions", "append_guideline"):
            text = data["text"]
            if not isinstance(text, str) or not text.strip():
                raise ValidationError(f"{kind} needs non-empty text")
            return EDIT_TYPES[kind](text=text)
        if kind in ("remove_guideline", "remove_example", "replace_example"):
            index = data["index"]
            if isinstance(index, bool) or not isinstance(index, int):
                raise ValidationError(f"{kind} index must be an integer, got {index!r}")
            if kind == "replace_example":
                return ReplaceExample(index=index, example=Example.from_dict(data["example"]))
            return EDIT_TYPES[kind](index=index)
        if kind == "append_example":
            return AppendExample(example=Example.from_dict(data["example"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed edit {dict(data)!r}: {exc}") from exc
    raise ValidationError(f"unknown edit op {kind!r}")


@dataclass(frozen=True)
class EditSet:
    edits: tuple[Edit, ...]
    rationale: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "edits", tuple(self.edits))
        if not self.edits:
            raise ValidationError("an EditSet must contain at least one edit")
        for e in self.edits:
            if type(e) not in EDIT_TYPES.values():
                raise ValidationError(f"not an edit operation: {e!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"edits": [e.to_dict() for e in self.edits], "rationale": self.rationale}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> EditSet:
        edits: Sequence[Mapping[str, Any]] = data.get("edits") or ()
        if not isinstance(edits, (list, tuple)):
            raise ValidationError("edits must be a list")
        return cls(edits=tuple(edit_from_dict(e) for e in edits), rationale=str(data.get("rationale", "")))
