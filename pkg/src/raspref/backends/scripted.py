"""Deterministic offline backend.

Every behavior is a pluggable callable, and every default is a pure function
of its inputs plus the generation seed, so two runs with the same seed are
bit-identical. The solver sees the *rendered* prompt, exactly as a real model
would.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Callable, Sequence, Union

from ..domain import AppendGuideline, EditSet, Problem, StructuredPrompt, TraceSample, Trajectory
from ..errors import ValidationError
from ..index import EmbeddingVector
from ..prompts import fit_to_budget, render
from ..scoring import canonicalize, tokenize
from .base import GenerationConfig, edits_with_reask, score_with_reask

Solver = Callable[[str, Problem, int, "int | None"], str]
Judge = Callable[[Problem, str], Union[float, str]]
Critic = Callable[[Problem, str], str]
CritiqueJudge = Callable[[Problem, str, str], Union[float, str]]
Editor = Callable[
    [StructuredPrompt, Problem, Sequence[TraceSample], Sequence[str], Sequence[Trajectory]],
    Union[EditSet, str, dict, None],
]

DEFAULT_DIM = 256
DEFAULT_CRITIQUE = "The steps follow from one another and the final answer matches the last calculation."
DEFAULT_GUIDELINE = "verify each arithmetic step"


def _digest(*parts: object) -> bytes:
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return h.digest()


def default_solver(rendered: str, problem: Problem, index: int, seed: int | None) -> str:
    n = int.from_bytes(_digest(rendered, problem.statement, index, seed)[:4], "big") % 3
    return (
        "Step 1: Identify the quantities given in the problem.\n"
        "Step 2: Combine them in the order the problem describes.\n"
        f"#### {n}"
    )


def default_judge(problem: Problem, trace: str) -> float:
    lowered = trace.lower()
    if "[good]" in lowered:
        return 0.9
    if "[bad]" in lowered:
        return 0.1
    return _digest("verify", problem.statement, trace)[0] / 255


def default_critic(problem: Problem, trace: str) -> str:
    return DEFAULT_CRITIQUE


def default_critique_judge(problem: Problem, trace: str, critique: str) -> float:
    return 0.0 if "fatal" in critique.lower() else 1.0


def default_editor(prompt, problem, traces, critiques, retrieved) -> EditSet:
    return EditSet((AppendGuideline(DEFAULT_GUIDELINE),), rationale="scripted default edit")


def hash_embedding(text: str, dim: int = DEFAULT_DIM) -> EmbeddingVector:
    """Signed feature hashing of lowercase word tokens into ``dim`` buckets."""
    if not text or not text.strip():
        raise ValidationError("cannot embed empty text")
    values = [0.0] * dim
    for tok in tokenize(text):
        d = hashlib.blake2b(tok.encode("utf-8"), digest_size=8).digest()
        bucket = struct.unpack(">I", d[:4])[0] % dim
        values[bucket] += 1.0 if d[4] & 1 else -1.0
    if not any(values):
        d = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
        values[struct.unpack(">I", d[:4])[0] % dim] = 1.0
    return EmbeddingVector(tuple(values))


class ScriptedBackend:
    def __init__(
        self,
        solver: Solver = default_solver,
        judge: Judge = default_judge,
        critic: Critic = default_critic,
        critique_judge: CritiqueJudge = default_critique_judge,
        editor: Editor = default_editor,
        dim: int = DEFAULT_DIM,
    ):
        self.solver = solver
        self.judge = judge
        self.critic = critic
        self.critique_judge = critique_judge
        self.editor = editor
        self.dim = dim

    def generate_traces(
        self, prompt: StructuredPrompt, problem: Problem, k: int, cfg: GenerationConfig
    ) -> list[TraceSample]:
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        fitted, _ = fit_to_budget(prompt, problem, cfg.prompt_token_budget)
        text = render(fitted, problem)
        samples = []
        for i in range(k):
            trace = self.solver(text, problem, i, cfg.seed)
            if not trace:
                raise ValidationError("scripted solver returned an empty trace")
            samples.append(TraceSample(trace=trace, canonical_answer=canonicalize(trace)))
        return samples

    def verify(self, problem: Problem, trace: str) -> float:
        if not trace:
            raise ValidationError("cannot verify an empty trace")
        return score_with_reask(lambda attempt: self.judge(problem, trace), "verify")

    def critique(self, problem: Problem, trace: str) -> str:
        if not trace:
            raise ValidationError("cannot critique an empty trace")
        return self.critic(problem, trace)

    def score_critique(self, problem: Problem, trace: str, critique: str) -> float:
        return score_with_reask(lambda attempt: self.critique_judge(problem, trace, critique), "critique score")

    def propose_edits(self, prompt, problem, traces, critiques, retrieved) -> EditSet | None:
        if not traces or len(traces) != len(critiques):
            raise ValidationError("traces and critiques must be non-empty and aligned")
        return edits_with_reask(
            lambda attempt: self.editor(prompt, problem, traces, critiques, retrieved), prompt
        )

    def embed(self, text: str) -> EmbeddingVector:
        return hash_embedding(text, self.dim)
