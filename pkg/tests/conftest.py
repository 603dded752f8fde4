"""Shared builders: synthetic corpora, pipeline configs, wired engines."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from agentmesh.engine import Engine, EngineConfig
from agentmesh.retrieval.chunking import chunk_document
from agentmesh.retrieval.embedding import get_embedder
from agentmesh.retrieval.kb import DocumentChunk, KnowledgeBase

WORD_BANK = (
    "revenue margin subscription growth quarter segment cloud platform "
    "enterprise retention billings pipeline guidance outlook demand hardware "
    "services expansion cash buyback dividend forecast capital operating "
    "costs pricing seats renewal churn adoption deployment region currency "
    "headwind tailwind analyst consensus estimate report filing transcript"
).split()


def make_text(n_chars: int, rng: random.Random, words: list[str] | None = None) -> str:
    """Sentence-structured synthetic prose of roughly n_chars characters."""
    words = words or list(WORD_BANK)
    sentences = []
    total = 0
    while total < n_chars:
        length = rng.randint(6, 12)
        sentence = " ".join(rng.choice(words) for _ in range(length)).capitalize() + "."
        sentences.append(sentence)
        total += len(sentence) + 1
    return " ".join(sentences)[:n_chars]


def build_kb(kb_id: str, docs: list[tuple[str, str]], window: int = 1000, overlap: int = 200) -> KnowledgeBase:
    """In-memory KB: chunk and embed documents without touching disk."""
    embedder = get_embedder("hashed-bow-256")
    chunks = []
    for doc_id, text in docs:
        for raw in chunk_document(doc_id, text, window, overlap):
            chunks.append(
                DocumentChunk(
                    chunk_id=raw.chunk_id,
                    doc_id=raw.doc_id,
                    text=raw.text,
                    embedding=embedder.embed(raw.text),
                    position=raw.position,
                )
            )
    return KnowledgeBase(kb_id=kb_id, chunks=chunks)


def worker_agent(agent_id: str, backend: str, kb: str | None, top_k: int = 5, **extra) -> dict:
    record = {
        "role": "worker",
        "model": {"backend_id": backend, "model_name": "mock"},
        "top_k": top_k,
    }
    if kb is not None:
        record["kb_binding"] = kb
    record.update(extra)
    return record


def aggregator_agent(backend: str, **extra) -> dict:
    record = {"role": "aggregator", "model": {"backend_id": backend, "model_name": "mock"}}
    record.update(extra)
    return record


def fanout_pipeline_config(
    pipeline_id: str,
    n_workers: int,
    worker_backend: str,
    aggregator_backend: str,
    kb_ids: list[str],
    top_k: int = 5,
) -> dict:
    workers = [f"w{i + 1}" for i in range(n_workers)]
    agents = {
        worker: worker_agent(worker, worker_backend, kb_ids[i % len(kb_ids)], top_k)
        for i, worker in enumerate(workers)
    }
    agents["agg"] = aggregator_agent(aggregator_backend)
    return {"pipeline_id": pipeline_id, "layers": [workers, ["agg"]], "agents": agents}


def write_engine_config(
    root: Path,
    backends: dict,
    pipelines: list[dict],
    default_mode: str = "serial",
    max_in_flight: int = 16,
) -> Path:
    pipeline_paths = []
    for pipeline in pipelines:
        path = root / f"{pipeline['pipeline_id']}.pipeline.json"
        path.write_text(json.dumps(pipeline, indent=2), encoding="utf-8")
        pipeline_paths.append(path.name)
    config = {
        "kb_dir": "kbs",
        "trace_dir": "traces",
        "pipelines": pipeline_paths,
        "backends": backends,
        "default_mode": default_mode,
        "max_in_flight": max_in_flight,
    }
    path = root / "engine.json"
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return path


def build_engine(
    root: Path,
    backends: dict,
    pipelines: list[dict],
    kbs: dict[str, list[tuple[str, str]]] | None = None,
    default_mode: str = "serial",
    max_in_flight: int = 16,
) -> Engine:
    """Write configs under root, ingest KBs, return a ready engine."""
    config_path = write_engine_config(root, backends, pipelines, default_mode, max_in_flight)
    bootstrap = Engine(EngineConfig.from_file(config_path), require_pipelines=False)
    for kb_id, docs in (kbs or {}).items():
        bootstrap.ingest(kb_id, docs)
    return Engine(EngineConfig.from_file(config_path))


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240817)
