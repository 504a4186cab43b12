"""JSON run configuration: backend settings plus refinement parameters."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from .backends.base import BackendSpec, GenerationConfig
from .domain import QualityWeights
from .errors import ConfigError, ValidationError
from .refine import RefineConfig

_REFINE_KEYS = {"rounds", "samples", "retrieval_k", "seed", "max_examples", "min_support", "min_verifier_score"}


@dataclass
class RunConfig:
    backend: BackendSpec = field(default_factory=BackendSpec)
    refine: RefineConfig = field(default_factory=RefineConfig)
    instructions: str | None = None


def parse_config(data: Mapping[str, Any]) -> RunConfig:
    unknown = set(data) - _REFINE_KEYS - {"backend", "weights", "generation", "instructions"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        refine_kwargs: dict[str, Any] = {k: data[k] for k in _REFINE_KEYS if k in data}
        if "weights" in data:
            refine_kwargs["weights"] = QualityWeights.from_dict(data["weights"])
        if "generation" in data:
            refine_kwargs["generation"] = GenerationConfig.from_dict(data["generation"])
        return RunConfig(
            backend=BackendSpec.from_dict(data.get("backend", {})),
            refine=RefineConfig(**refine_kwargs),
            instructions=data.get("instructions"),
        )
    except (TypeError, ValidationError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | os.PathLike | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return parse_config(data)
