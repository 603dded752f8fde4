"""HTTP service exposing query, trace, ingestion, and pipeline listing.

Endpoints:
    POST /v1/query                  run a pipeline, return per-agent answers
    GET  /v1/runs/{run_id}/trace    full persisted run trace
    POST /v1/kb/{kb_id}/ingest      multipart text files into a KB
    GET  /v1/pipelines              validated pipeline summaries
    GET  /healthz                   liveness

Every query maps to one isolated engine run; a global in-flight limit applies
backpressure with 429. Per-agent answers are returned inline because the
constituent outputs are often as useful to the caller as the fused one.
"""

from __future__ import annotations

from fastapi import FastAPI, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..core.types import Role
from ..engine import Engine, UnknownPipelineError
from ..orchestrator.trace import RunFailureError
from .schemas import (
    AgentAnswer,
    IngestResponse,
    PipelinesResponse,
    PipelineSummary,
    QueryBody,
    QueryResponse,
)


def _error(status: int, error: str, detail: str | None = None, node_id: str | None = None):
    body = {"error": error, "detail": detail}
    if node_id is not None:
        body["node_id"] = node_id
    return JSONResponse(status_code=status, content=body)


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="agentmesh", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error(400, "invalid_request", str(exc.errors()[:3]))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/v1/pipelines", response_model=PipelinesResponse)
    def pipelines():
        return PipelinesResponse(
            pipelines=[PipelineSummary(**summary) for summary in engine.pipeline_summaries()]
        )

    @app.post("/v1/query", response_model=QueryResponse)
    def query(body: QueryBody):
        if not body.question.strip():
            return _error(400, "invalid_request", "question must be non-empty")
        if body.mode is not None and body.mode not in ("serial", "parallel"):
            return _error(400, "invalid_request", "mode must be serial or parallel")
        if not engine.try_acquire_slot():
            return _error(429, "too_many_runs", "in-flight run limit reached")
        try:
            trace = engine.query(body.pipeline_id, body.question, mode=body.mode)
        except UnknownPipelineError as exc:
            return _error(404, "unknown_pipeline", str(exc))
        except RunFailureError as exc:
            return _error(500, "node_failed", str(exc), node_id=exc.node_id)
        finally:
            engine.release_slot()

        agent_answers = [
            AgentAnswer(
                agent_id=node.agent_id,
                answer=node.answer,
                abstained=node.guard.abstained,
                grounding_score=node.guard.grounding_score,
            )
            for node in trace.node_outputs
            if node.role is not Role.AGGREGATOR
        ]
        return QueryResponse(
            run_id=trace.run_id,
            final_answer=trace.final_answer,
            agent_answers=agent_answers,
        )

    @app.get("/v1/runs/{run_id}/trace")
    def get_trace(run_id: str):
        try:
            return engine.get_trace(run_id)
        except KeyError:
            return _error(404, "unknown_run", f"no trace for run_id '{run_id}'")

    @app.post("/v1/kb/{kb_id}/ingest", response_model=IngestResponse)
    def ingest(kb_id: str, files: list[UploadFile]):
        documents = []
        for upload in files:
            text = upload.file.read().decode("utf-8")
            documents.append((upload.filename or "upload.txt", text))
        if not documents:
            return _error(400, "invalid_request", "no files supplied")
        try:
            report = engine.ingest(kb_id, documents)
        except ValueError as exc:
            return _error(400, "invalid_request", str(exc))
        return IngestResponse(kb_id=kb_id, chunks_per_doc=report)

    return app


def serve(engine: Engine) -> None:
    """Run the service on the engine config's listen address (blocking)."""
    import uvicorn

    host, _, port = engine.config.listen.partition(":")
    uvicorn.run(create_app(engine), host=host or "127.0.0.1", port=int(port or 8080))
