"""Domain types for layered agent pipelines.

Everything here is immutable after validation and safe to share across
concurrently executing runs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Mapping


class Role(str, enum.Enum):
    PLANNER = "planner"
    WORKER = "worker"
    AGGREGATOR = "aggregator"
    SUBPROCESS = "subprocess"


DEFAULT_PARALLELISM_LIMIT = 8
DEFAULT_TIMEOUT_SECONDS = 30.0
DEFAULT_RETRIES = 1
DEFAULT_TOP_K = 30

DEFAULT_MIN_RETRIEVAL_SCORE = 0.2
DEFAULT_GROUNDING_THRESHOLD = 0.3
DEFAULT_ABSTENTION_PHRASES = (
    "i don't know",
    "i do not know",
    "insufficient context",
)


class ConfigError(ValueError):
    """Raised for malformed pipeline configuration documents.

    ``line``/``column`` are set when the underlying document failed to parse
    at a known position.
    """

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class PipelineValidationError(ValueError):
    """A structural or resolution failure; ``code`` identifies the violation."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.0
    max_output_tokens: int = 512

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ModelRef:
    """Reference to a generation backend plus per-agent sampling parameters."""

    backend_id: str
    model_name: str
    params: GenerationParams = field(default_factory=GenerationParams)


@dataclass(frozen=True)
class GuardPolicy:
    """Abstention and grounding thresholds applied to one agent's output."""

    abstention_enabled: bool = True
    min_retrieval_score: float = DEFAULT_MIN_RETRIEVAL_SCORE
    grounding_threshold: float = DEFAULT_GROUNDING_THRESHOLD
    abstention_phrases: tuple[str, ...] = DEFAULT_ABSTENTION_PHRASES

    def __post_init__(self):
        if not 0.0 <= self.min_retrieval_score <= 1.0:
            raise ValueError("min_retrieval_score must be in [0, 1]")
        if not 0.0 <= self.grounding_threshold <= 1.0:
            raise ValueError("grounding_threshold must be in [0, 1]")


@dataclass(frozen=True)
class AgentSpec:
    """One node's full customization: role, model, prompt, retrieval, guards.

    ``model`` is absent exactly when the node is a registered subprocess
    (``handler_id`` names the handler). ``upstream`` optionally restricts
    which previous-layer nodes feed this one; empty means "all of them".
    """

    agent_id: str
    role: Role
    model: ModelRef | None = None
    system_prompt: str = ""
    kb_binding: str | None = None
    top_k: int = 0
    guard_policy: GuardPolicy = field(default_factory=GuardPolicy)
    handler_id: str | None = None
    upstream: tuple[str, ...] = ()


@dataclass(frozen=True)
class PipelineSpec:
    """Validated-shape description of a layered agent graph.

    ``layers`` is an ordered tuple of layers, each a non-empty tuple of agent
    ids; ``agents`` maps every referenced id to its spec. Durations are
    seconds.
    """

    pipeline_id: str
    layers: tuple[tuple[str, ...], ...]
    agents: Mapping[str, AgentSpec]
    parallelism_limit: int = DEFAULT_PARALLELISM_LIMIT
    timeout_per_call: float = DEFAULT_TIMEOUT_SECONDS
    retries: int = DEFAULT_RETRIES


@dataclass(frozen=True)
class ExecutionPlan:
    """A PipelineSpec bound to concrete backends, knowledge bases and handlers.

    ``edge_map`` lists, for every node outside layer 0, the upstream node ids
    whose outputs it receives. Edges only ever cross consecutive layers in the
    forward direction, so the graph is acyclic by construction.
    """

    pipeline: PipelineSpec
    edge_map: Mapping[str, tuple[str, ...]]
    resolved_backends: Mapping[str, Any]
    resolved_kbs: Mapping[str, Any]
    resolved_handlers: Mapping[str, Any]

    @property
    def aggregator_id(self) -> str:
        return self.pipeline.layers[-1][0]

    def layer_of(self, agent_id: str) -> int:
        for i, layer in enumerate(self.pipeline.layers):
            if agent_id in layer:
                return i
        raise KeyError(agent_id)
