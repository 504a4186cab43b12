"""Backend protocol, configuration types and model-reply parsers."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Protocol, Sequence

from ..domain import EditSet, Problem, StructuredPrompt, TraceSample, Trajectory
from ..errors import ConfigError, InvalidEditIndex, UnparsableEdits, UnparsableScore, ValidationError
from ..index import EmbeddingVector
from ..prompts import apply_edits

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenerationConfig:
    temperature: float = 0.7
    top_p: float = 0.95
    max_output_tokens: int = 1024
    seed: int | None = None
    # Rendered-prompt token estimate cap; examples are dropped from the tail past it.
    prompt_token_budget: int | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if not 0 < self.top_p <= 1:
            raise ConfigError(f"top_p must lie in (0, 1], got {self.top_p}")
        if self.max_output_tokens <= 0:
            raise ConfigError("max_output_tokens must be positive")

    def to_dict(self) -> dict[str, Any]:
        return {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_output_tokens": self.max_output_tokens,
            "seed": self.seed,
            "prompt_token_budget": self.prompt_token_budget,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> GenerationConfig:
        known = {"temperature", "top_p", "max_output_tokens", "seed", "prompt_token_budget"}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "scripted"
    model_name: str = "gpt-4o-mini"
    embed_model_name: str = "text-embedding-3-small"
    endpoint: str = "https://api.openai.com/v1"
    credential_env_var: str = "OPENAI_API_KEY"
    # Optional separate judge model for verification and critique scoring.
    verifier_model_name: str | None = None
    max_in_flight: int = 4
    max_retries: int = 5
    backoff_base: float = 1.0
    backoff_cap: float = 30.0
    timeout: float = 60.0

    def __post_init__(self) -> None:
        if self.kind not in ("live", "scripted"):
            raise ConfigError(f"backend kind must be 'live' or 'scripted', got {self.kind!r}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BackendSpec:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown backend settings: {sorted(unknown)}")
        return cls(**data)


class Backend(Protocol):
    """The frozen reasoning model plus its judge, critic, editor and embedder."""

    def generate_traces(
        self, prompt: StructuredPrompt, problem: Problem, k: int, cfg: GenerationConfig
    ) -> list[TraceSample]: ...

    def verify(self, problem: Problem, trace: str) -> float: ...

    def critique(self, problem: Problem, trace: str) -> str: ...

    def score_critique(self, problem: Problem, trace: str, critique: str) -> float: ...

    def propose_edits(
        self,
        prompt: StructuredPrompt,
        problem: Problem,
        traces: Sequence[TraceSample],
        critiques: Sequence[str],
        retrieved: Sequence[Trajectory],
    ) -> EditSet | None: ...

    def embed(self, text: str) -> EmbeddingVector: ...


# -- judge replies --------------------------------------------------------------

_SCORE_CUE = re.compile(r"score\s*(?:is|of|=|:)?\s*\**\s*(-?\d+(?:\.\d+)?|-?\.\d+)", re.IGNORECASE)
_BARE_NUMBER = re.compile(r"(?<![\w.])(-?(?:\d+(?:\.\d+)?|\.\d+))(?!\w|\.\d)")


def parse_score(reply: str | float | None) -> float:
    """Read a [0, 1] score from a judge reply such as ``"Score: 0.75"``.

    A number after a "score" cue wins, else the last bare number. Raises
    UnparsableScore when there is no number or it lies outside [0, 1].
    """
    if isinstance(reply, (int, float)) and not isinstance(reply, bool):
        value = float(reply)
    else:
        text = reply or ""
        m = _SCORE_CUE.findall(text)
        candidates = m or _BARE_NUMBER.findall(text)
        if not candidates:
            raise UnparsableScore(f"no score in judge reply {text[:80]!r}")
        value = float(candidates[-1])
    if not 0.0 <= value <= 1.0:
        raise UnparsableScore(f"judge score {value} outside [0, 1]")
    return value


def _extract_json_object(text: str) -> Any:
    text = text.strip()
    try:
        return json.loads(text)
    except ValueError:
        pass
    start, end = text.find("{"), text.rfind("}")
    if start != -1 and end > start:
        try:
            return json.loads(text[start : end + 1])
        except ValueError:
            pass
    raise UnparsableEdits("reply contains no JSON object")


def parse_edits(reply: str | Mapping[str, Any] | EditSet, prompt: StructuredPrompt) -> EditSet:
    """Decode an edit reply and validate it against ``prompt``.

    Accepts raw model text, an already-decoded mapping or an EditSet. Any
    malformed op or out-of-range index raises UnparsableEdits.
    """
    if isinstance(reply, EditSet):
        edits = reply
    else:
        data = _extract_json_object(reply) if isinstance(reply, str) else reply
        if not isinstance(data, Mapping):
            raise UnparsableEdits("edit reply must be a JSON object")
        try:
            edits = EditSet.from_dict(data)
        except ValidationError as exc:
            raise UnparsableEdits(str(exc)) from exc
    try:
        apply_edits(prompt, edits)
    except InvalidEditIndex as exc:
        raise UnparsableEdits(f"invalid edit: {exc}") from exc
    return edits


def score_with_reask(ask: Callable[[int], object], what: str) -> float:
    """Parse a judge score, asking once more on failure, then falling back to 0.0."""
    for attempt in range(2):
        try:
            return parse_score(ask(attempt))
        except UnparsableScore as exc:
            last = exc
    log.warning("%s: unparsable judge score after re-ask (%s); using 0.0", what, last)
    return 0.0


def edits_with_reask(ask: Callable[[int], object], prompt: StructuredPrompt) -> EditSet | None:
    """Parse proposed edits, asking once more on failure; None stops the loop."""
    for attempt in range(2):
        reply = ask(attempt)
        if reply is None:
            return None
        try:
            return parse_edits(reply, prompt)
        except UnparsableEdits as exc:
            last = exc
    log.warning("unparsable edits after re-ask (%s); stopping refinement", last)
    return None
