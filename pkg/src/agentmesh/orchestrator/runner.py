"""Layered pipeline execution.

A run walks the plan layer by layer: layer k+1 starts only after every node
of layer k completed. Within a layer, serial mode executes nodes one by one
in config order; parallel mode fans them out on a per-run thread pool capped
at the pipeline's parallelism limit. Node outputs are assembled in canonical
(config) order after each layer, so both modes produce identical traces apart
from timings.

A node failure after retries fails the whole run, since silently dropping an
agent would corrupt the evidentiary record; the partial trace is preserved
and the failing node identified. Abstention is not a failure.
"""

from __future__ import annotations

import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..backends.base import CompletionRequest, CompletionResult, estimate_tokens
from ..core.types import AgentSpec, ExecutionPlan, Role
from ..guards import GuardVerdict, detect_abstention, grounding_check
from ..retrieval.kb import ScoredChunk, search
from .planner import plan_assignments
from .prompts import render_aggregator_prompt, render_worker_prompt
from .trace import NodeOutput, RunFailureError, RunTrace, TraceStore

MODES = ("serial", "parallel")


@dataclass(frozen=True)
class QueryRequest:
    question: str
    pipeline_id: str
    mode: str = "serial"
    run_id: str = field(default_factory=lambda: uuid.uuid4().hex)

    def __post_init__(self):
        if not self.question:
            raise ValueError("question must be non-empty")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def _node_guard(agent: AgentSpec, answer: str, retrieved, plan: ExecutionPlan) -> GuardVerdict:
    # Grounding is only meaningful against the node's own retrieval; nodes
    # without a KB (aggregators included) get an abstention-only verdict.
    if agent.kb_binding is not None:
        kb = plan.resolved_kbs[agent.agent_id]
        return grounding_check(answer, retrieved, agent.guard_policy, kb.embedder_id)
    return GuardVerdict(
        abstained=detect_abstention(answer, agent.guard_policy),
        grounding_score=1.0,
        flagged_sentences=(),
        passed=True,
    )


class PipelineRunner:
    def __init__(self, plan: ExecutionPlan, trace_store: TraceStore | None = None):
        self.plan = plan
        self.trace_store = trace_store

    def _execute_node(
        self,
        agent: AgentSpec,
        layer: int,
        question: str,
        original_question: str,
        upstream: tuple[NodeOutput, ...],
        workers: tuple[str, ...],
    ) -> NodeOutput:
        plan = self.plan
        started_wall = time.time()
        started_mono = time.monotonic()

        retrieved: list[ScoredChunk] = []
        retrieval_seconds = 0.0
        if agent.kb_binding is not None:
            kb = plan.resolved_kbs[agent.agent_id]
            r0 = time.monotonic()
            retrieved = search(kb, question, agent.top_k)
            retrieval_seconds = time.monotonic() - r0

        if agent.role is Role.SUBPROCESS:
            handler = plan.resolved_handlers[agent.agent_id]
            answer = handler(question, tuple(retrieved), upstream)
            completion = CompletionResult(
                text=answer,
                prompt_tokens=0,
                output_tokens=estimate_tokens(answer),
                latency=time.monotonic() - started_mono,
                backend_id=f"handler:{agent.handler_id}",
            )
            rendered = ""
        else:
            if agent.role is Role.AGGREGATOR:
                rendered = render_aggregator_prompt(agent, original_question, upstream)
            else:
                rendered = render_worker_prompt(
                    agent, question, retrieved, upstream=upstream, workers=workers
                )
            backend = plan.resolved_backends[agent.agent_id]
            request = CompletionRequest(
                system_prompt=rendered,
                user_message=question,
                params=agent.model.params,
            )
            completion = backend.invoke(
                request,
                timeout=plan.pipeline.timeout_per_call,
                retries=plan.pipeline.retries,
                agent_id=agent.agent_id,
                model=agent.model.model_name,
            )
            answer = completion.text

        guard = _node_guard(agent, answer, retrieved, plan)
        ended_wall = started_wall + (time.monotonic() - started_mono)
        return NodeOutput(
            agent_id=agent.agent_id,
            role=agent.role,
            layer=layer,
            question=question,
            answer=answer,
            retrieved=tuple(retrieved),
            rendered_prompt=rendered,
            completion=completion,
            guard=guard,
            retrieval_seconds=retrieval_seconds,
            started_at=started_wall,
            ended_at=ended_wall,
        )

    def run(self, req: QueryRequest) -> RunTrace:
        plan = self.plan
        pipeline = plan.pipeline
        started_wall = time.time()
        started_mono = time.monotonic()

        outputs: dict[str, NodeOutput] = {}
        completed: list[NodeOutput] = []
        assignments: dict[str, str] = {}
        executor: ThreadPoolExecutor | None = None
        if req.mode == "parallel":
            executor = ThreadPoolExecutor(max_workers=pipeline.parallelism_limit)

        try:
            for layer_index, layer in enumerate(pipeline.layers):
                next_layer = (
                    pipeline.layers[layer_index + 1]
                    if layer_index + 1 < len(pipeline.layers)
                    else ()
                )
                next_workers = tuple(
                    a for a in next_layer if pipeline.agents[a].role is Role.WORKER
                )

                jobs = []
                for agent_id in layer:
                    agent = pipeline.agents[agent_id]
                    if layer_index == 0:
                        question = req.question
                    elif agent.role is Role.WORKER and agent_id in assignments:
                        question = assignments[agent_id]
                    else:
                        question = req.question
                    upstream = tuple(
                        outputs[u] for u in plan.edge_map.get(agent_id, ()) if u in outputs
                    )
                    jobs.append((agent, question, upstream))

                layer_results: list[NodeOutput | Exception] = []
                if executor is None:
                    for agent, question, upstream in jobs:
                        try:
                            layer_results.append(
                                self._execute_node(
                                    agent, layer_index, question, req.question, upstream,
                                    next_workers,
                                )
                            )
                        except Exception as exc:
                            layer_results.append(exc)
                            break
                else:
                    futures = [
                        executor.submit(
                            self._execute_node,
                            agent, layer_index, question, req.question, upstream, next_workers,
                        )
                        for agent, question, upstream in jobs
                    ]
                    for future in futures:
                        try:
                            layer_results.append(future.result())
                        except Exception as exc:
                            layer_results.append(exc)

                for (agent, _, _), result in zip(jobs, layer_results):
                    if isinstance(result, Exception):
                        partial = self._finish_trace(
                            req, tuple(completed), "", started_wall, started_mono,
                            failed_node=agent.agent_id, error=str(result),
                        )
                        raise RunFailureError(req.run_id, agent.agent_id, str(result), partial)
                    outputs[agent.agent_id] = result
                    completed.append(result)

                if layer_index == 0:
                    planner_nodes = [
                        outputs[a] for a in layer if pipeline.agents[a].role is Role.PLANNER
                    ]
                    if planner_nodes and next_workers:
                        assignments = dict(
                            plan_assignments(
                                planner_nodes[0].answer, next_workers, req.question
                            ).assignments
                        )
        finally:
            if executor is not None:
                executor.shutdown(wait=False)

        final_answer = outputs[plan.aggregator_id].answer
        return self._finish_trace(
            req, tuple(completed), final_answer, started_wall, started_mono
        )

    def _finish_trace(
        self,
        req: QueryRequest,
        nodes: tuple[NodeOutput, ...],
        final_answer: str,
        started_wall: float,
        started_mono: float,
        failed_node: str | None = None,
        error: str | None = None,
    ) -> RunTrace:
        trace = RunTrace(
            run_id=req.run_id,
            question=req.question,
            pipeline_id=req.pipeline_id,
            mode=req.mode,
            node_outputs=nodes,
            final_answer=final_answer,
            total_wall_seconds=time.monotonic() - started_mono,
            started_at=started_wall,
            failed_node=failed_node,
            error=error,
        )
        if self.trace_store is not None:
            self.trace_store.save(trace)
        return trace


def run_pipeline(
    req: QueryRequest, plan: ExecutionPlan, trace_store: TraceStore | None = None
) -> RunTrace:
    """Execute one query against a validated plan and return its trace."""
    return PipelineRunner(plan, trace_store).run(req)
