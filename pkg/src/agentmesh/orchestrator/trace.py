"""Run traces: the per-run transparency record, and its disk store.

A trace captures, for every executed node, the assigned question, retrieved
passages, rendered prompt, raw model output, guard verdict, and timings:
enough to re-render each prompt from recorded inputs and audit every step.
Traces persist as ``<run_id>.trace.json``.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..backends.base import CompletionResult
from ..core.types import Role
from ..guards import GuardVerdict
from ..retrieval.kb import DocumentChunk, ScoredChunk


@dataclass(frozen=True)
class NodeOutput:
    agent_id: str
    role: Role
    layer: int
    question: str
    answer: str
    retrieved: tuple[ScoredChunk, ...]
    rendered_prompt: str
    completion: CompletionResult
    guard: GuardVerdict
    retrieval_seconds: float
    started_at: float
    ended_at: float


@dataclass(frozen=True)
class RunTrace:
    run_id: str
    question: str
    pipeline_id: str
    mode: str
    node_outputs: tuple[NodeOutput, ...]
    final_answer: str
    total_wall_seconds: float
    started_at: float
    failed_node: str | None = None
    error: str | None = None


class RunFailureError(Exception):
    """A node failed after retries; the partial trace is preserved."""

    def __init__(self, run_id: str, node_id: str, message: str, partial_trace: RunTrace):
        super().__init__(f"run {run_id}: node '{node_id}' failed: {message}")
        self.run_id = run_id
        self.node_id = node_id
        self.partial_trace = partial_trace


def _scored_chunk_to_dict(sc: ScoredChunk) -> dict:
    return {
        "chunk_id": sc.chunk.chunk_id,
        "doc_id": sc.chunk.doc_id,
        "position": sc.chunk.position,
        "text": sc.chunk.text,
        "embedding": list(sc.chunk.embedding),
        "metadata": dict(sc.chunk.metadata),
        "score": sc.score,
    }


def _scored_chunk_from_dict(d: dict) -> ScoredChunk:
    return ScoredChunk(
        chunk=DocumentChunk(
            chunk_id=d["chunk_id"],
            doc_id=d["doc_id"],
            text=d["text"],
            embedding=tuple(d["embedding"]),
            position=d["position"],
            metadata=d.get("metadata", {}),
        ),
        score=d["score"],
    )


def node_to_dict(node: NodeOutput) -> dict:
    return {
        "agent_id": node.agent_id,
        "role": node.role.value,
        "layer": node.layer,
        "question": node.question,
        "answer": node.answer,
        "retrieved": [_scored_chunk_to_dict(sc) for sc in node.retrieved],
        "rendered_prompt": node.rendered_prompt,
        "completion": {
            "text": node.completion.text,
            "prompt_tokens": node.completion.prompt_tokens,
            "output_tokens": node.completion.output_tokens,
            "latency_seconds": node.completion.latency,
            "backend_id": node.completion.backend_id,
        },
        "guard": {
            "abstained": node.guard.abstained,
            "grounding_score": node.guard.grounding_score,
            "flagged_sentences": [list(pair) for pair in node.guard.flagged_sentences],
            "passed": node.guard.passed,
        },
        "retrieval_seconds": node.retrieval_seconds,
        "started_at": node.started_at,
        "ended_at": node.ended_at,
    }


def node_from_dict(d: dict) -> NodeOutput:
    completion = d["completion"]
    guard = d["guard"]
    return NodeOutput(
        agent_id=d["agent_id"],
        role=Role(d["role"]),
        layer=d["layer"],
        question=d["question"],
        answer=d["answer"],
        retrieved=tuple(_scored_chunk_from_dict(sc) for sc in d["retrieved"]),
        rendered_prompt=d["rendered_prompt"],
        completion=CompletionResult(
            text=completion["text"],
            prompt_tokens=completion["prompt_tokens"],
            output_tokens=completion["output_tokens"],
            latency=completion["latency_seconds"],
            backend_id=completion["backend_id"],
        ),
        guard=GuardVerdict(
            abstained=guard["abstained"],
            grounding_score=guard["grounding_score"],
            flagged_sentences=tuple((s, v) for s, v in guard["flagged_sentences"]),
            passed=guard["passed"],
        ),
        retrieval_seconds=d["retrieval_seconds"],
        started_at=d["started_at"],
        ended_at=d["ended_at"],
    )


def trace_to_dict(trace: RunTrace) -> dict:
    doc: dict[str, Any] = {
        "run_id": trace.run_id,
        "question": trace.question,
        "pipeline_id": trace.pipeline_id,
        "mode": trace.mode,
        "node_outputs": [node_to_dict(n) for n in trace.node_outputs],
        "final_answer": trace.final_answer,
        "total_wall_seconds": trace.total_wall_seconds,
        "started_at": trace.started_at,
    }
    if trace.failed_node is not None:
        doc["failed_node"] = trace.failed_node
        doc["error"] = trace.error
    return doc


def trace_from_dict(doc: dict) -> RunTrace:
    return RunTrace(
        run_id=doc["run_id"],
        question=doc["question"],
        pipeline_id=doc["pipeline_id"],
        mode=doc["mode"],
        node_outputs=tuple(node_from_dict(n) for n in doc["node_outputs"]),
        final_answer=doc["final_answer"],
        total_wall_seconds=doc["total_wall_seconds"],
        started_at=doc["started_at"],
        failed_node=doc.get("failed_node"),
        error=doc.get("error"),
    )


class TraceStore:
    """Append-only directory of trace files keyed by run_id."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def path_for(self, run_id: str) -> Path:
        return self.root / f"{run_id}.trace.json"

    def save(self, trace: RunTrace) -> Path:
        path = self.path_for(trace.run_id)
        payload = json.dumps(trace_to_dict(trace), ensure_ascii=False, indent=2)
        with self._lock:
            path.write_text(payload, encoding="utf-8")
        return path

    def exists(self, run_id: str) -> bool:
        return self.path_for(run_id).exists()

    def load_dict(self, run_id: str) -> dict:
        path = self.path_for(run_id)
        if not path.exists():
            raise KeyError(f"unknown run_id '{run_id}'")
        return json.loads(path.read_text(encoding="utf-8"))

    def load(self, run_id: str) -> RunTrace:
        return trace_from_dict(self.load_dict(run_id))
