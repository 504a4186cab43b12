"""Per-problem refinement loop: retrieve, build, then score/critique/edit rounds."""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from .backends.base import Backend, GenerationConfig
from .domain import Problem, QualityReport, QualityWeights, StructuredPrompt, TraceSample, Trajectory
from .errors import BackendError, ConfigError, InvalidEditIndex
from .prompts import DEFAULT_MAX_EXAMPLES, apply_edits, base_prompt, build_prompt
from .scoring import score_samples
from .store import TrajectoryStore

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RefineConfig:
    rounds: int = 3
    samples: int = 5
    retrieval_k: int = 5
    weights: QualityWeights = field(default_factory=QualityWeights)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    seed: int = 0
    max_examples: int = DEFAULT_MAX_EXAMPLES
    min_support: int = 2
    # Off by default: verifier-based retrieval filtering is an optional extra.
    min_verifier_score: float | None = None

    def __post_init__(self) -> None:
        if self.rounds < 0:
            raise ConfigError(f"rounds must be >= 0, got {self.rounds}")
        if self.samples < 2:
            raise ConfigError(f"samples per round must be >= 2, got {self.samples}")
        if self.retrieval_k < 1:
            raise ConfigError(f"retrieval_k must be >= 1, got {self.retrieval_k}")

    def generation_config(self) -> GenerationConfig:
        return replace(self.generation, seed=self.seed)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    prompt_revision: int
    report: QualityReport
    edit_rationale: str | None = None
    accepted: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "round": self.round,
            "prompt_revision": self.prompt_revision,
            "report": self.report.to_dict(),
            "edit_rationale": self.edit_rationale,
            "accepted": self.accepted,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RoundRecord:
        return cls(
            round=data["round"],
            prompt_revision=data["prompt_revision"],
            report=QualityReport.from_dict(data["report"]),
            edit_rationale=data.get("edit_rationale"),
            accepted=data["accepted"],
        )


@dataclass
class RefineResult:
    prompt: StructuredPrompt
    # history[0] scores the initial prompt; later entries score one edit each.
    history: list[RoundRecord]
    samples: list[TraceSample]
    retrieved: list[Trajectory]
    partial: bool = False
    error: str | None = None
    stored: Trajectory | None = None

    @property
    def rounds(self) -> list[RoundRecord]:
        """Records of the edit rounds only."""
        return self.history[1:]

    @property
    def report(self) -> QualityReport:
        return max((r for r in self.history if r.accepted), key=lambda r: r.report.q).report

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt": self.prompt.to_dict(),
            "history": [r.to_dict() for r in self.history],
            "samples": [s.to_dict() for s in self.samples],
            "retrieved": [t.to_dict() for t in self.retrieved],
            "partial": self.partial,
            "error": self.error,
            "stored": self.stored.to_dict() if self.stored else None,
        }


class RunLog:
    """Appends one JSON object per round record to ``<run_dir>/rounds.jsonl``."""

    def __init__(self, run_dir: str | os.PathLike):
        self.path = Path(run_dir) / "rounds.jsonl"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def write(self, problem_id: str, record: RoundRecord) -> None:
        line = json.dumps({"problem_id": problem_id, **record.to_dict()}, ensure_ascii=False)
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")


@dataclass
class _Evaluated:
    prompt: StructuredPrompt
    report: QualityReport
    samples: list[TraceSample]
    critiques: list[str]


def evaluate_prompt(
    prompt: StructuredPrompt,
    problem: Problem,
    backend: Backend,
    cfg: RefineConfig,
    retrieved: Sequence[Trajectory],
) -> tuple[QualityReport, list[TraceSample], list[str]]:
    """Sample K traces under ``prompt`` and score them with every signal."""
    raw = backend.generate_traces(prompt, problem, cfg.samples, cfg.generation_config())
    samples, critiques, critique_scores = [], [], []
    for s in raw:
        verdict = backend.verify(problem, s.trace)
        critique = backend.critique(problem, s.trace)
        critique_scores.append(backend.score_critique(problem, s.trace, critique))
        critiques.append(critique)
        samples.append(replace(s, verifier_score=verdict, critique=critique))
    return score_samples(samples, critique_scores, retrieved, cfg.weights), samples, critiques


def best_trace(samples: Sequence[TraceSample]) -> TraceSample:
    """Highest verifier score; the earliest sample wins ties."""
    return max(samples, key=lambda s: -1.0 if s.verifier_score is None else s.verifier_score)


def refine(
    problem: Problem,
    store: TrajectoryStore | None,
    backend: Backend,
    cfg: RefineConfig | None = None,
    base: StructuredPrompt | None = None,
    write_back: bool = True,
    run_log: RunLog | None = None,
) -> RefineResult:
    """Refine a prompt for one problem and optionally record the outcome in ``store``.

    An edit is kept only if it strictly raises Q; the first edit that does not
    ends the loop and the best prompt so far is returned. Backend failures
    before the first evaluation propagate. Later failures return the best
    prompt with ``partial=True`` and nothing is written to the store.
    """
    cfg = cfg or RefineConfig()
    base = base or base_prompt()

    query = backend.embed(problem.statement)
    retrieved = store.retrieve(query, cfg.retrieval_k, cfg.min_verifier_score) if store is not None else []
    prompt0 = build_prompt(base, retrieved, cfg.max_examples, cfg.min_support)

    report, samples, critiques = evaluate_prompt(prompt0, problem, backend, cfg, retrieved)
    history = [RoundRecord(round=0, prompt_revision=prompt0.revision, report=report)]
    if run_log:
        run_log.write(problem.id, history[0])
    best = _Evaluated(prompt0, report, samples, critiques)

    partial, error = False, None
    try:
        for r in range(cfg.rounds):
            edits = backend.propose_edits(best.prompt, problem, best.samples, best.critiques, retrieved)
            if edits is None:
                log.info("%s: no usable edits in round %d; stopping", problem.id, r)
                break
            try:
                candidate = apply_edits(best.prompt, edits, cfg.max_examples)
            except InvalidEditIndex as exc:
                log.info("%s: edit rejected in round %d (%s); stopping", problem.id, r, exc)
                break
            report, samples, critiques = evaluate_prompt(candidate, problem, backend, cfg, retrieved)
            accepted = report.q > best.report.q
            record = RoundRecord(
                round=r + 1,
                prompt_revision=candidate.revision,
                report=report,
                edit_rationale=edits.rationale,
                accepted=accepted,
            )
            history.append(record)
            if run_log:
                run_log.write(problem.id, record)
            if not accepted:
                break
            best = _Evaluated(candidate, report, samples, critiques)
    except BackendError as exc:
        log.warning("%s: backend failure mid-refinement: %s", problem.id, exc)
        partial, error = True, str(exc)

    result = RefineResult(
        prompt=best.prompt,
        history=history,
        samples=best.samples,
        retrieved=list(retrieved),
        partial=partial,
        error=error,
    )
    if write_back and store is not None and not partial:
        top = best_trace(best.samples)
        traj = Trajectory(
            problem=replace(problem, reference_answer=None),
            prompt=best.prompt,
            trace=top.trace,
            consistency=best.report.c_cons,
            verifier=top.verifier_score,
            embedding=query.values,
        )
        store.append(traj)
        result.stored = traj
    return result
