"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel


class QueryBody(BaseModel):
    pipeline_id: str
    question: str
    mode: str | None = None


class AgentAnswer(BaseModel):
    agent_id: str
    answer: str
    abstained: bool
    grounding_score: float


class QueryResponse(BaseModel):
    run_id: str
    final_answer: str
    agent_answers: list[AgentAnswer]


class IngestResponse(BaseModel):
    kb_id: str
    chunks_per_doc: dict[str, int]


class PipelineSummary(BaseModel):
    pipeline_id: str
    layers: list[list[str]]
    agent_count: int
    roles: dict[str, str]
    parallelism_limit: int


class PipelinesResponse(BaseModel):
    pipelines: list[PipelineSummary]


class ErrorBody(BaseModel):
    error: str
    detail: str | None = None
    node_id: str | None = None
