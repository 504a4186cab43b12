"""Retrieval-augmented, label-free prompt refinement for frozen reasoning models."""

from .domain import (
    AppendExample,
    AppendGuideline,
    EditSet,
    Example,
    Problem,
    QualityReport,
    QualityWeights,
    RemoveExample,
    RemoveGuideline,
    ReplaceExample,
    ReplaceInstructions,
    StructuredPrompt,
    TraceSample,
    Trajectory,
)
from .refine import RefineConfig, RefineResult, RoundRecord, refine
from .store import TrajectoryStore

__version__ = "0.1.0"
