from .config import parse_pipeline, serialize_pipeline
from .types import (
    AgentSpec,
    ConfigError,
    ExecutionPlan,
    GenerationParams,
    GuardPolicy,
    ModelRef,
    PipelineSpec,
    PipelineValidationError,
    Role,
)
from .validate import validate_pipeline

__all__ = [
    "AgentSpec",
    "ConfigError",
    "ExecutionPlan",
    "GenerationParams",
    "GuardPolicy",
    "ModelRef",
    "PipelineSpec",
    "PipelineValidationError",
    "Role",
    "parse_pipeline",
    "serialize_pipeline",
    "validate_pipeline",
]
