"""Dataset loading, store seeding, and static vs retrieval-augmented evaluation."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import random
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from .backends.base import Backend
from .domain import Problem, StructuredPrompt, Trajectory
from .errors import ParseError, MissingField, RasprefError, ValidationError
from .prompts import base_prompt, build_prompt, render
from .refine import RefineConfig, RunLog, refine
from .scoring import canonicalize, majority_answer
from .store import TrajectoryStore

log = logging.getLogger(__name__)

SETTINGS = ("static", "retrieval", "refined")


@dataclass(frozen=True)
class ItemResult:
    problem_id: str
    predicted: str | None
    reference: str | None
    match: bool
    q: float | None = None
    prompt_sha256: str = ""
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "problem_id": self.problem_id,
            "predicted": self.predicted,
            "reference": self.reference,
            "match": self.match,
            "q": self.q,
            "prompt_sha256": self.prompt_sha256,
            "error": self.error,
        }


@dataclass
class EvalResult:
    setting: str
    n: int
    correct: int
    accuracy: float
    per_item: list[ItemResult] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "setting": self.setting,
            "n": self.n,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "per_item": [r.to_dict() for r in self.per_item],
        }


# -- datasets -------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetRecord:
    problem: Problem
    # Full reference solution text when the file carries one (GSM8K ``answer``).
    solution: str | None = None


def load_records(path: str | os.PathLike) -> list[DatasetRecord]:
    """Read GSM8K-style ``{"question", "answer"}`` or ``{"id", "statement", ...}`` JSONL."""
    path = Path(path)
    out: list[DatasetRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except ValueError as exc:
                raise ParseError(f"invalid JSON: {exc}", lineno) from exc
            if not isinstance(row, dict):
                raise ParseError("expected a JSON object", lineno)
            if "question" in row:
                if "answer" not in row:
                    raise MissingField("answer", lineno)
                solution = str(row["answer"])
                pid = str(row.get("id", f"{path.stem}-{lineno}"))
                statement, reference = row["question"], canonicalize(solution)
            elif "statement" in row:
                if "id" not in row:
                    raise MissingField("id", lineno)
                raw = row.get("reference_answer", row.get("answer"))
                solution = row.get("solution")
                pid, statement = str(row["id"]), row["statement"]
                reference = canonicalize(str(raw)) if raw is not None else None
            else:
                raise MissingField("question", lineno)
            if pid in seen:
                raise ParseError(f"duplicate problem id {pid!r}", lineno)
            seen.add(pid)
            try:
                problem = Problem(id=pid, statement=statement, reference_answer=reference)
            except ValidationError as exc:
                raise ParseError(str(exc), lineno) from exc
            out.append(DatasetRecord(problem, solution))
    if not out:
        raise ParseError(f"{path} contains no problems")
    return out


def load_dataset(path: str | os.PathLike) -> list[Problem]:
    return [r.problem for r in load_records(path)]


def select(items: Sequence, n: int | None, shuffle_seed: int | None = None) -> list:
    """First ``n`` items in file order, or a seeded shuffle of them."""
    items = list(items)
    if shuffle_seed is not None:
        random.Random(shuffle_seed).shuffle(items)
    return items if n is None else items[:n]


def seed_store(
    train_path: str | os.PathLike,
    store: TrajectoryStore,
    backend: Backend,
    n: int,
    base: StructuredPrompt | None = None,
    cfg: RefineConfig | None = None,
    shuffle_seed: int | None = None,
) -> TrajectoryStore:
    """Add the first ``n`` training items to ``store`` with embeddings.

    Items with a reference solution are ingested as-is; others are solved
    once with the base prompt and verified.
    """
    records = load_records(train_path)
    if n < 0:
        raise ValidationError("n must be non-negative")
    if n > len(records):
        raise ValidationError(f"requested {n} training items but {train_path} has only {len(records)}")
    base = base or base_prompt()
    cfg = cfg or RefineConfig()
    for rec in select(records, n, shuffle_seed):
        problem = replace(rec.problem, reference_answer=None)
        vector = backend.embed(problem.statement)
        if rec.solution:
            traj = Trajectory(
                problem=problem,
                prompt=base,
                trace=rec.solution,
                reward=1.0,
                embedding=vector.values,
            )
        else:
            sample = backend.generate_traces(base, problem, 1, cfg.generation_config())[0]
            traj = Trajectory(
                problem=problem,
                prompt=base,
                trace=sample.trace,
                verifier=backend.verify(problem, sample.trace),
                embedding=vector.values,
            )
        store.append(traj)
    return store


# -- evaluation -------------------------------------------------------------------


def item_seed(seed: int, problem_id: str) -> int:
    return zlib.crc32(f"{seed}:{problem_id}".encode("utf-8"))


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _solve(
    problem: Problem,
    store: TrajectoryStore | None,
    backend: Backend,
    cfg: RefineConfig,
    setting: str,
    base: StructuredPrompt,
    run_log: RunLog | None,
) -> ItemResult:
    cfg = replace(cfg, seed=item_seed(cfg.seed, problem.id))
    # The model never sees the reference answer.
    blind = replace(problem, reference_answer=None)
    try:
        if setting == "static":
            prompt = build_prompt(base, [], cfg.max_examples, cfg.min_support)
            samples = backend.generate_traces(prompt, blind, cfg.samples, cfg.generation_config())
            q = None
        else:
            rounds = 0 if setting == "retrieval" else cfg.rounds
            result = refine(blind, store, backend, replace(cfg, rounds=rounds), base, write_back=False, run_log=run_log)
            prompt, samples, q = result.prompt, result.samples, result.report.q
    except RasprefError as exc:
        log.warning("%s: item failed: %s", problem.id, exc)
        return ItemResult(problem.id, None, problem.reference_answer, False, error=str(exc))
    predicted = majority_answer(s.canonical_answer for s in samples)
    match = predicted is not None and predicted == problem.reference_answer
    return ItemResult(problem.id, predicted, problem.reference_answer, match, q, _digest(render(prompt, blind)))


def evaluate(
    problems: Sequence[Problem],
    store: TrajectoryStore | None,
    backend: Backend,
    cfg: RefineConfig | None = None,
    setting: str = "static",
    base: StructuredPrompt | None = None,
    workers: int = 1,
    run_dir: str | os.PathLike | None = None,
) -> EvalResult:
    """Grade one prompting arm. The store is only read, never written.

    ``static`` uses the base prompt; ``retrieval`` adds retrieved examples and
    guidelines without editing; ``refined`` also runs the edit loop.
    """
    if setting not in SETTINGS:
        raise ValidationError(f"setting must be one of {SETTINGS}, got {setting!r}")
    if not problems:
        raise ValidationError("nothing to evaluate")
    cfg = cfg or RefineConfig()
    base = base or base_prompt()
    run_log = RunLog(run_dir) if run_dir is not None and setting != "static" else None
    if setting == "static":
        store = None

    def solve(p: Problem) -> ItemResult:
        return _solve(p, store, backend, cfg, setting, base, run_log)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            items = list(pool.map(solve, problems))
    else:
        items = [solve(p) for p in problems]
    correct = sum(r.match for r in items)
    return EvalResult(setting=setting, n=len(items), correct=correct, accuracy=correct / len(items), per_item=items)


def write_json(result: EvalResult, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")


def write_csv(result: EvalResult, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(ItemResult.__dataclass_fields__))
        writer.writeheader()
        for item in result.per_item:
            writer.writerow(item.to_dict())
