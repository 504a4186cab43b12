from .base import Backend, BackendSpec, GenerationConfig, parse_edits, parse_score
from .live import LiveBackend
from .scripted import ScriptedBackend, hash_embedding


def make_backend(spec: BackendSpec) -> Backend:
    if spec.kind == "live":
        return LiveBackend(spec)
    return ScriptedBackend()


__all__ = [
    "Backend",
    "BackendSpec",
    "GenerationConfig",
    "LiveBackend",
    "ScriptedBackend",
    "hash_embedding",
    "make_backend",
    "parse_edits",
    "parse_score",
]
