from .planner import PlannerAssignment, plan_assignments
from .prompts import (
    ABSTENTION_INSTRUCTION,
    LOW_GROUNDING_MARKER,
    NO_ANSWER_MARKER,
    NO_CONTEXT_MARKER,
    PromptError,
    format_context_block,
    format_upstream_block,
    render_aggregator_prompt,
    render_worker_prompt,
)
from .runner import MODES, PipelineRunner, QueryRequest, run_pipeline
from .trace import (
    NodeOutput,
    RunFailureError,
    RunTrace,
    TraceStore,
    node_from_dict,
    node_to_dict,
    trace_from_dict,
    trace_to_dict,
)

__all__ = [
    "ABSTENTION_INSTRUCTION",
    "LOW_GROUNDING_MARKER",
    "MODES",
    "NO_ANSWER_MARKER",
    "NO_CONTEXT_MARKER",
    "NodeOutput",
    "PipelineRunner",
    "PlannerAssignment",
    "PromptError",
    "QueryRequest",
    "RunFailureError",
    "RunTrace",
    "TraceStore",
    "format_context_block",
    "format_upstream_block",
    "node_from_dict",
    "node_to_dict",
    "plan_assignments",
    "render_aggregator_prompt",
    "render_worker_prompt",
    "run_pipeline",
    "trace_from_dict",
    "trace_to_dict",
]
