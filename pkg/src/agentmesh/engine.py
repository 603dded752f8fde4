"""Engine facade: one object wiring KB store, backends, plans, and traces.

Both the CLI and the HTTP service drive this facade, so the two surfaces
cannot drift apart. The engine is stateless beyond the KB store and the trace
directory; restarting it loses nothing.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .backends.mock import MockBackend, MockScript, load_mock_script
from .backends.openai_http import OpenAIChatBackend
from .core.config import parse_pipeline
from .core.types import ExecutionPlan, PipelineSpec
from .core.validate import validate_pipeline
from .orchestrator.runner import QueryRequest, run_pipeline
from .orchestrator.trace import RunTrace, TraceStore
from .registry import HandlerFn, Registry
from .retrieval.embedding import HASHED_BOW_ID
from .retrieval.store import KnowledgeBaseStore


class UnknownPipelineError(KeyError):
    def __init__(self, pipeline_id: str):
        super().__init__(f"unknown pipeline '{pipeline_id}'")
        self.pipeline_id = pipeline_id


class EngineConfigError(ValueError):
    pass


_CONFIG_KEYS = {
    "listen",
    "pipelines",
    "kb_dir",
    "trace_dir",
    "backends",
    "default_mode",
    "max_in_flight",
    "embedder_id",
    "chunk_window",
    "chunk_overlap",
}


@dataclass
class EngineConfig:
    kb_dir: Path
    trace_dir: Path
    pipelines: list[Path] = field(default_factory=list)
    backends: dict[str, dict] = field(default_factory=dict)
    listen: str = "127.0.0.1:8080"
    default_mode: str = "serial"
    max_in_flight: int = 16
    embedder_id: str = HASHED_BOW_ID
    chunk_window: int = 1000
    chunk_overlap: int = 200

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise EngineConfigError(f"{path}: invalid JSON: {exc.msg}")
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise EngineConfigError(f"{path}: unknown field '{sorted(unknown)[0]}'")
        for key in ("kb_dir", "trace_dir"):
            if key not in doc:
                raise EngineConfigError(f"{path}: missing '{key}'")
        base = path.parent

        def resolve(p: str) -> Path:
            candidate = Path(p)
            return candidate if candidate.is_absolute() else base / candidate

        pipelines = [resolve(p) for p in doc.get("pipelines", [])]
        for pipeline_path in pipelines:
            if not pipeline_path.exists():
                raise EngineConfigError(f"pipeline config not found: {pipeline_path}")
        mode = doc.get("default_mode", "serial")
        if mode not in ("serial", "parallel"):
            raise EngineConfigError(f"{path}: default_mode must be serial or parallel")
        backends = doc.get("backends", {})
        for backend_id, spec in backends.items():
            if "script_path" in spec:
                spec = dict(spec)
                spec["script_path"] = str(resolve(spec["script_path"]))
                backends[backend_id] = spec
        return cls(
            kb_dir=resolve(doc["kb_dir"]),
            trace_dir=resolve(doc["trace_dir"]),
            pipelines=pipelines,
            backends=backends,
            listen=doc.get("listen", "127.0.0.1:8080"),
            default_mode=mode,
            max_in_flight=doc.get("max_in_flight", 16),
            embedder_id=doc.get("embedder_id", HASHED_BOW_ID),
            chunk_window=doc.get("chunk_window", 1000),
            chunk_overlap=doc.get("chunk_overlap", 200),
        )


def build_backend(backend_id: str, spec: Mapping) -> object:
    kind = spec.get("type")
    latency = spec.get("fixed_latency_ms", 0) / 1000.0
    if kind == "mock_echo":
        return MockBackend(backend_id, MockScript(mode="echo_context", fixed_latency=latency))
    if kind == "mock_canned":
        script_path = spec.get("script_path")
        if script_path:
            script = load_mock_script(script_path, fixed_latency=latency)
        else:
            script = MockScript(
                mode="canned",
                canned_responses=dict(spec.get("responses", {})),
                fixed_latency=latency,
            )
        return MockBackend(backend_id, script)
    if kind == "openai_chat":
        if "base_url" not in spec:
            raise EngineConfigError(f"backend '{backend_id}': openai_chat needs base_url")
        return OpenAIChatBackend(
            backend_id,
            base_url=spec["base_url"],
            api_key_env=spec.get("api_key_env"),
            default_model=spec.get("model_name", ""),
        )
    raise EngineConfigError(f"backend '{backend_id}': unknown type '{kind}'")


class Engine:
    """Loads KBs and pipelines once, then serves queries and ingestion."""

    def __init__(
        self,
        config: EngineConfig,
        handlers: Mapping[str, HandlerFn] | None = None,
        require_pipelines: bool = True,
    ):
        self.config = config
        self.store = KnowledgeBaseStore(
            config.kb_dir,
            embedder_id=config.embedder_id,
            window=config.chunk_window,
            overlap=config.chunk_overlap,
        )
        self.trace_store = TraceStore(config.trace_dir)
        self.registry = Registry()
        for backend_id, spec in config.backends.items():
            self.registry.register_backend(backend_id, build_backend(backend_id, spec))
        for handler_id, fn in (handlers or {}).items():
            self.registry.register_handler(handler_id, fn)
        for kb_id in self.store.kb_ids():
            self.registry.register_kb(self.store.get(kb_id))

        self.specs: dict[str, PipelineSpec] = {}
        self.plans: dict[str, ExecutionPlan] = {}
        if require_pipelines:
            for path in config.pipelines:
                spec = parse_pipeline(path.read_text(encoding="utf-8"))
                self.specs[spec.pipeline_id] = spec
                self.plans[spec.pipeline_id] = validate_pipeline(spec, self.registry)

        self._run_ids: set[str] = set()
        self._run_lock = threading.Lock()
        self._in_flight = threading.Semaphore(config.max_in_flight)

    def plan(self, pipeline_id: str) -> ExecutionPlan:
        if pipeline_id not in self.plans:
            raise UnknownPipelineError(pipeline_id)
        return self.plans[pipeline_id]

    def _claim_run_id(self, run_id: str | None) -> str:
        with self._run_lock:
            run_id = run_id or uuid.uuid4().hex
            if run_id in self._run_ids:
                raise ValueError(f"run_id '{run_id}' already used")
            self._run_ids.add(run_id)
            return run_id

    def query(
        self,
        pipeline_id: str,
        question: str,
        mode: str | None = None,
        backend_overrides: Mapping[str, str] | None = None,
        run_id: str | None = None,
    ) -> RunTrace:
        plan = self.plan(pipeline_id)
        if backend_overrides:
            plan = self._override_backends(plan.pipeline, backend_overrides)
        req = QueryRequest(
            question=question,
            pipeline_id=pipeline_id,
            mode=mode or self.config.default_mode,
            run_id=self._claim_run_id(run_id),
        )
        return run_pipeline(req, plan, self.trace_store)

    def _override_backends(
        self, spec: PipelineSpec, overrides: Mapping[str, str]
    ) -> ExecutionPlan:
        """Re-validate the pipeline with some agents remapped to other backends."""
        agents = dict(spec.agents)
        for agent_id, backend_id in overrides.items():
            agent = agents.get(agent_id)
            if agent is None or agent.model is None:
                raise UnknownPipelineError(f"{spec.pipeline_id}:{agent_id}")
            agents[agent_id] = replace(agent, model=replace(agent.model, backend_id=backend_id))
        return validate_pipeline(replace(spec, agents=agents), self.registry)

    def ingest(self, kb_id: str, documents: list[tuple[str, str]]) -> dict[str, int]:
        report = self.store.ingest(kb_id, documents)
        self.registry.register_kb(self.store.get(kb_id))
        return report

    def ingest_directory(self, kb_id: str, directory: str | Path) -> dict[str, int]:
        """Ingest every ``*.txt`` file in a directory; doc_id is the filename."""
        directory = Path(directory)
        docs = [
            (path.name, path.read_text(encoding="utf-8"))
            for path in sorted(directory.glob("*.txt"))
        ]
        return self.ingest(kb_id, docs)

    def get_trace(self, run_id: str) -> dict:
        return self.trace_store.load_dict(run_id)

    def pipeline_summaries(self) -> list[dict]:
        return [
            {
                "pipeline_id": spec.pipeline_id,
                "layers": [list(layer) for layer in spec.layers],
                "agent_count": len(spec.agents),
                "roles": {aid: agent.role.value for aid, agent in spec.agents.items()},
                "parallelism_limit": spec.parallelism_limit,
            }
            for spec in self.specs.values()
        ]

    def try_acquire_slot(self) -> bool:
        return self._in_flight.acquire(blocking=False)

    def release_slot(self) -> None:
        self._in_flight.release()
