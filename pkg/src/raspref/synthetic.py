"""Synthetic word-problem corpus with a scripted solver that needs a matching example.

Each problem belongs to a family keyed by an invented noun. The simulated
model solves a problem only when the prompt's worked examples mention that
noun, except for every ``easy_every``-th problem which it solves unaided.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from pathlib import Path

from .backends.scripted import ScriptedBackend
from .domain import Problem
from .harness import DatasetRecord

_ONSETS = "b d f g k l m n p r s t v z".split()
_VOWELS = "a e i o u".split()

TEMPLATES = [
    (
        "A workshop has {a} {noun} crates. Each {noun} crate holds {b} parts. How many parts are in all the {noun} crates?",
        lambda a, b: a * b,
        "Each {noun} crate holds {b} parts and there are {a} {noun} crates.\nMultiply crates by parts per crate: {a} * {b} = {ans}.",
    ),
    (
        "A farmer keeps {a} {noun} goats and buys {b} more {noun} goats. How many {noun} goats does the farmer keep now?",
        lambda a, b: a + b,
        "The farmer starts with {a} {noun} goats.\nAdd the {b} new {noun} goats: {a} + {b} = {ans}.",
    ),
    (
        "A shop had {a} {noun} lamps and sold {b} {noun} lamps. How many {noun} lamps are left?",
        lambda a, b: a - b,
        "The shop had {a} {noun} lamps.\nSubtract the {b} sold {noun} lamps: {a} - {b} = {ans}.",
    ),
]


def _nouns(n: int, rng: random.Random) -> list[str]:
    out: list[str] = []
    while len(out) < n:
        word = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(3))
        if word not in out:
            out.append(word)
    return out


@dataclass
class SyntheticCorpus:
    train: list[DatasetRecord]
    test: list[Problem]
    # statement -> (family noun, correct answer)
    world: dict[str, tuple[str, int]] = field(default_factory=dict)
    easy: set[str] = field(default_factory=set)

    def solver(self, rendered: str, problem: Problem, index: int, seed: int | None) -> str:
        noun, answer = self.world[problem.statement]
        cut = rendered.rfind("Problem: " + problem.statement.strip())
        context = rendered[:cut] if cut >= 0 else ""
        if problem.statement in self.easy or f" {noun} " in context:
            return f"[good] Following the worked example for {noun} items, combine the quantities.\n#### {answer}"
        # Without a matching example the simulated model guesses inconsistently.
        return f"[bad] Guessing the relationship between the quantities.\n#### {answer + 1 + index % 3}"

    def backend(self) -> ScriptedBackend:
        return ScriptedBackend(solver=self.solver)

    def write(self, out_dir: str | os.PathLike) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        train_path, test_path = out / "train.jsonl", out / "test.jsonl"
        with open(train_path, "w", encoding="utf-8") as fh:
            for r in self.train:
                fh.write(json.dumps({"id": r.problem.id, "question": r.problem.statement, "answer": r.solution}) + "\n")
        with open(test_path, "w", encoding="utf-8") as fh:
            for p in self.test:
                noun, answer = self.world[p.statement]
                fh.write(json.dumps({"id": p.id, "question": p.statement, "answer": f"#### {answer}"}) + "\n")
        return train_path, test_path


def make_corpus(n: int = 50, seed: int = 0, easy_every: int = 10) -> SyntheticCorpus:
    """Build ``n`` families, each with one training item and one test item."""
    rng = random.Random(seed)
    corpus = SyntheticCorpus(train=[], test=[])
    for i, noun in enumerate(_nouns(n, rng)):
        question, op, steps = TEMPLATES[i % len(TEMPLATES)]
        for split in ("train", "test"):
            a, b = rng.randint(20, 90), rng.randint(2, 19)
            ans = op(a, b)
            statement = question.format(a=a, b=b, noun=noun)
            corpus.world[statement] = (noun, ans)
            if split == "train":
                solution = steps.format(a=a, b=b, noun=noun, ans=ans) + f"\n#### {ans}"
                corpus.train.append(DatasetRecord(Problem(f"train-{i}", statement, str(ans)), solution))
            else:
                corpus.test.append(Problem(f"test-{i}", statement, str(ans)))
                if easy_every and i % easy_every == 0:
                    corpus.easy.add(statement)
    return corpus
