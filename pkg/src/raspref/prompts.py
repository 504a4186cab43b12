"""Prompt construction, guideline distillation, edit application and rendering."""

from __future__ import annotations

import math
import re
from dataclasses import replace
from typing import Sequence

from .domain import (
    AppendExample,
    AppendGuideline,
    EditSet,
    Example,
    Problem,
    RemoveExample,
    RemoveGuideline,
    ReplaceExample,
    ReplaceInstructions,
    StructuredPrompt,
    Trajectory,
)
from .errors import InvalidEditIndex
from .scoring import STOP_WORDS, tokenize

DEFAULT_INSTRUCTIONS = (
    "Solve the following math word problem. Reason step by step, showing each "
    "intermediate calculation, and state the final numeric answer."
)
ANSWER_CUE = 'Think step by step, then give the final numeric answer on its own line as "#### <answer>".'
GUIDELINE_PREFIX = "Common step pattern: "
DEFAULT_MAX_EXAMPLES = 5
TOKEN_SAFETY_FACTOR = 1.3


def base_prompt(instructions: str = DEFAULT_INSTRUCTIONS) -> StructuredPrompt:
    return StructuredPrompt(instructions=instructions)


# -- distillation -----------------------------------------------------------

_CALC_ANNOTATION = re.compile(r"<<[^>]*>>")
_STEP_SPLIT = re.compile(r"\n+|(?<=[.!?])\s+")


def split_steps(trace: str) -> list[str]:
    text = _CALC_ANNOTATION.sub("", trace)
    return [s.strip() for s in _STEP_SPLIT.split(text) if s.strip()]


def step_signature(step: str) -> frozenset[tuple[str, str]]:
    """Content-word bigrams of a step, ignoring numbers and stop words."""
    words = [w for w in tokenize(step) if w not in STOP_WORDS and not w.isdigit()]
    return frozenset(zip(words, words[1:]))


def distill_guidelines(
    retrieved: Sequence[Trajectory], min_support: int = 2, max_guidelines: int | None = None
) -> list[str]:
    """Mine step patterns shared by at least ``min_support`` retrieved traces.

    A step's pattern is its set of content-word bigrams; support counts the
    distinct traces containing a step with that pattern. The representative
    step is the first occurrence in retrieval rank order.
    """
    if min_support < 1:
        min_support = 1
    if not retrieved or min_support > len(retrieved):
        return []
    support: dict[frozenset, set[int]] = {}
    representative: dict[frozenset, str] = {}
    for rank, traj in enumerate(retrieved):
        for step in split_steps(traj.trace):
            sig = step_signature(step)
            if not sig:
                continue
            support.setdefault(sig, set()).add(rank)
            representative.setdefault(sig, step)
    found = [
        (len(ranks), GUIDELINE_PREFIX + representative[sig])
        for sig, ranks in support.items()
        if len(ranks) >= min_support
    ]
    found.sort(key=lambda item: (-item[0], item[1]))
    guidelines = []
    for _, text in found:
        if text not in guidelines:
            guidelines.append(text)
    return guidelines[:max_guidelines] if max_guidelines is not None else guidelines


def build_prompt(
    base: StructuredPrompt,
    retrieved: Sequence[Trajectory],
    max_examples: int = DEFAULT_MAX_EXAMPLES,
    min_support: int = 2,
    max_guidelines: int | None = 5,
) -> StructuredPrompt:
    """Initial prompt: base instructions, distilled guidelines, top retrieved examples."""
    distilled = [g for g in distill_guidelines(retrieved, min_support, max_guidelines) if g not in base.guidelines]
    examples = tuple(Example(t.problem.statement, t.trace) for t in retrieved[: max(max_examples, 0)])
    return StructuredPrompt(
        instructions=base.instructions,
        guidelines=base.guidelines + tuple(distilled),
        examples=examples,
        revision=0,
    )


# -- edits --------------------------------------------------------------------


def apply_edits(prompt: StructuredPrompt, edits: EditSet, max_examples: int | None = None) -> StructuredPrompt:
    """Apply edits in order; the whole set is rejected if any index is invalid."""
    instructions = prompt.instructions
    guidelines = list(prompt.guidelines)
    examples = list(prompt.examples)
    for pos, e in enumerate(edits.edits):
        if isinstance(e, ReplaceInstructions):
            instructions = e.text
        elif isinstance(e, AppendGuideline):
            guidelines.append(e.text)
        elif isinstance(e, RemoveGuideline):
            _check_index(e.index, guidelines, pos, "guideline")
            del guidelines[e.index]
        elif isinstance(e, ReplaceExample):
            _check_index(e.index, examples, pos, "example")
            examples[e.index] = e.example
        elif isinstance(e, RemoveExample):
            _check_index(e.index, examples, pos, "example")
            del examples[e.index]
        elif isinstance(e, AppendExample):
            if max_examples is not None and len(examples) >= max_examples:
                raise InvalidEditIndex(f"edit {pos}: example cap of {max_examples} reached")
            examples.append(e.example)
    return StructuredPrompt(
        instructions=instructions,
        guidelines=tuple(guidelines),
        examples=tuple(examples),
        revision=prompt.revision + 1,
    )


def _check_index(index: int, items: list, pos: int, what: str) -> None:
    # Negative indices are rejected rather than counted from the end.
    if not 0 <= index < len(items):
        raise InvalidEditIndex(f"edit {pos}: {what} index {index} out of range for {len(items)} {what}s")


# -- rendering ----------------------------------------------------------------


def render(prompt: StructuredPrompt, problem: Problem) -> str:
    parts = [prompt.instructions.strip()]
    if prompt.guidelines:
        lines = ["Guidelines:"]
        lines += [f"{i}. {g}" for i, g in enumerate(prompt.guidelines, 1)]
        parts.append("\n".join(lines))
    if prompt.examples:
        blocks = ["Examples:"]
        blocks += [f"Problem: {ex.problem.strip()}\nSolution: {ex.solution.strip()}" for ex in prompt.examples]
        parts.append("\n\n".join(blocks))
    parts.append(f"Problem: {problem.statement.strip()}\n{ANSWER_CUE}\nSolution:")
    return "\n\n".join(parts)


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text.split()) * TOKEN_SAFETY_FACTOR)


def fit_to_budget(prompt: StructuredPrompt, problem: Problem, budget: int | None) -> tuple[StructuredPrompt, int]:
    """Drop whole examples from the tail until the rendered prompt fits.

    Returns the (possibly shortened) prompt and the number of dropped examples.
    Instructions and guidelines are never cut.
    """
    if budget is None:
        return prompt, 0
    examples = list(prompt.examples)
    dropped = 0
    while examples and estimate_tokens(render(replace(prompt, examples=tuple(examples)), problem)) > budget:
        examples.pop()
        dropped += 1
    if not dropped:
        return prompt, 0
    return replace(prompt, examples=tuple(examples)), dropped
