"""Chat-completions HTTP backend (OpenAI-compatible wire format)."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from typing import Any, Callable, Sequence

import httpx

from ..domain import EditSet, Problem, StructuredPrompt, TraceSample, Trajectory
from ..errors import BackendUnavailable, EmptyCompletion, ValidationError
from ..index import EmbeddingVector
from ..prompts import fit_to_budget, render
from ..scoring import canonicalize
from .base import BackendSpec, GenerationConfig, edits_with_reask, score_with_reask

log = logging.getLogger(__name__)

RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}

VERIFIER_RUBRIC = """You are a strict verifier of step-by-step math solutions.
Judge whether the solution is plausible and well structured: every step follows
from the previous ones, calculations are correct, and the final answer answers
the question. Do not solve the problem again from scratch.
Reply with a single line of the form "Score: <number between 0 and 1>"."""

CRITIC_PROMPT = """Critique the following solution to a math word problem.
Go through it step by step, name any step that is wrong or unjustified, and say
whether the final answer can be trusted."""

CRITIQUE_RUBRIC = """You are given a math problem, a proposed solution, and a critique of that solution.
Rate the solution in light of the critique:
1 means the critique confirms the solution is sound,
0 means the critique identifies a fatal error,
values in between reflect minor or uncertain issues.
Reply with a single line of the form "Score: <number between 0 and 1>"."""

EDITOR_PROMPT = """You improve prompts for a frozen reasoning model. You receive the current prompt
(instructions, guidelines, examples), a problem, several sampled solutions with critiques,
and retrieved solved problems. Propose a small number of targeted edits that make the
reasoning clearer, discourage premature final answers, or emphasize checking against
the examples.

Reply with ONLY a JSON object of this shape:
{"rationale": "<one sentence>",
 "edits": [
   {"op": "replace_instructions", "text": "..."},
   {"op": "append_guideline", "text": "..."},
   {"op": "remove_guideline", "index": 0},
   {"op": "replace_example", "index": 0, "example": {"problem": "...", "solution": "..."}},
   {"op": "remove_example", "index": 0},
   {"op": "append_example", "example": {"problem": "...", "solution": "..."}}
 ]}
Indices are 0-based and refer to the prompt as modified by the preceding edits.
Include at least one edit."""

STRICT_REASK = "Your previous reply could not be used. Follow the required output format exactly."


class LiveBackend:
    """Talks to a chat-completions and embeddings endpoint with bearer auth.

    Requests are retried with capped exponential backoff on transport errors
    and retryable status codes; at most ``spec.max_in_flight`` requests run at
    once across threads.
    """

    def __init__(
        self,
        spec: BackendSpec,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        empty_retries: int = 2,
    ):
        self.spec = spec
        self._client = client or httpx.Client(timeout=spec.timeout)
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max(1, spec.max_in_flight))
        self.empty_retries = empty_retries

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.spec.credential_env_var)
        if not key:
            raise BackendUnavailable(f"credential variable {self.spec.credential_env_var} is not set")
        if not self.spec.endpoint:
            raise BackendUnavailable("no endpoint configured")
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def _post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        headers = self._headers()
        url = self.spec.endpoint.rstrip("/") + path
        last: Exception | None = None
        for attempt in range(self.spec.max_retries + 1):
            if attempt:
                self._sleep(min(self.spec.backoff_cap, self.spec.backoff_base * 2 ** (attempt - 1)))
            try:
                with self._slots:
                    resp = self._client.post(url, headers=headers, json=payload)
            except httpx.TransportError as exc:
                last = exc
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last = BackendUnavailable(f"HTTP {resp.status_code} from {url}")
                continue
            if resp.status_code >= 400:
                raise BackendUnavailable(f"HTTP {resp.status_code} from {url}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendUnavailable(f"non-JSON response from {url}") from exc
        raise BackendUnavailable(f"giving up on {url} after {self.spec.max_retries + 1} attempts: {last}")

    def _chat(
        self,
        messages: list[dict[str, str]],
        cfg: GenerationConfig | None = None,
        model: str | None = None,
        seed: int | None = None,
    ) -> str:
        cfg = cfg or GenerationConfig(temperature=0.0, top_p=1.0)
        payload: dict[str, Any] = {
            "model": model or self.spec.model_name,
            "messages": messages,
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
            "max_tokens": cfg.max_output_tokens,
        }
        if seed is not None:
            payload["seed"] = seed
        for _ in range(self.empty_retries + 1):
            data = self._post("/chat/completions", payload)
            try:
                content = data["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                content = None
            if content and content.strip():
                return content
        raise EmptyCompletion(f"model returned no content after {self.empty_retries + 1} attempts")

    def _judge(self, system: str, user: str, attempt: int, model: str | None = None) -> str:
        messages = [{"role": "system", "content": system}, {"role": "user", "content": user}]
        if attempt:
            messages.append({"role": "user", "content": STRICT_REASK})
        return self._chat(messages, model=model or self.spec.verifier_model_name or self.spec.model_name)

    # -- backend protocol --

    def generate_traces(
        self, prompt: StructuredPrompt, problem: Problem, k: int, cfg: GenerationConfig
    ) -> list[TraceSample]:
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        self._headers()
        fitted, dropped = fit_to_budget(prompt, problem, cfg.prompt_token_budget)
        if dropped:
            log.info("dropped %d examples to fit the prompt budget", dropped)
        text = render(fitted, problem)
        samples = []
        for i in range(k):
            seed = None if cfg.seed is None else cfg.seed + i
            trace = self._chat([{"role": "user", "content": text}], cfg, seed=seed)
            samples.append(TraceSample(trace=trace, canonical_answer=canonicalize(trace)))
        return samples

    def verify(self, problem: Problem, trace: str) -> float:
        if not trace:
            raise ValidationError("cannot verify an empty trace")
        user = f"Problem:\n{problem.statement}\n\nSolution:\n{trace}"
        return score_with_reask(lambda attempt: self._judge(VERIFIER_RUBRIC, user, attempt), "verify")

    def critique(self, problem: Problem, trace: str) -> str:
        if not trace:
            raise ValidationError("cannot critique an empty trace")
        user = f"Problem:\n{problem.statement}\n\nSolution:\n{trace}"
        return self._chat([{"role": "system", "content": CRITIC_PROMPT}, {"role": "user", "content": user}])

    def score_critique(self, problem: Problem, trace: str, critique: str) -> float:
        user = f"Problem:\n{problem.statement}\n\nSolution:\n{trace}\n\nCritique:\n{critique}"
        return score_with_reask(lambda attempt: self._judge(CRITIQUE_RUBRIC, user, attempt), "critique score")

    def propose_edits(
        self,
        prompt: StructuredPrompt,
        problem: Problem,
        traces: Sequence[TraceSample],
        critiques: Sequence[str],
        retrieved: Sequence[Trajectory],
    ) -> EditSet | None:
        if not traces or len(traces) != len(critiques):
            raise ValidationError("traces and critiques must be non-empty and aligned")
        context = {
            "prompt": prompt.to_dict(),
            "problem": problem.statement,
            "samples": [{"solution": s.trace, "critique": c} for s, c in zip(traces, critiques)],
            "retrieved_problems": [t.problem.statement for t in retrieved],
        }
        user = json.dumps(context, ensure_ascii=False)

        def ask(attempt: int) -> str:
            return self._judge(EDITOR_PROMPT, user, attempt, model=self.spec.model_name)

        return edits_with_reask(ask, prompt)

    def embed(self, text: str) -> EmbeddingVector:
        if not text or not text.strip():
            raise ValidationError("cannot embed empty text")
        data = self._post("/embeddings", {"model": self.spec.embed_model_name, "input": text})
        try:
            return EmbeddingVector(tuple(data["data"][0]["embedding"]))
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable("malformed embeddings response") from exc
