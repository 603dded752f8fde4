"""Structural validation of a parsed pipeline against a registry.

Each distinct invariant violation maps to its own error code so callers can
assert on failure causes rather than message text.
"""

from __future__ import annotations

from ..registry import Registry
from .types import ExecutionPlan, PipelineSpec, PipelineValidationError, Role


def _fail(code: str, message: str):
    raise PipelineValidationError(code, message)


def validate_pipeline(spec: PipelineSpec, registry: Registry) -> ExecutionPlan:
    """Check every structural invariant and resolve references into a plan.

    The resulting edge map is the full bipartite wiring between consecutive
    layers unless an agent lists explicit ``upstream`` ids, which must all
    name nodes of the immediately preceding layer.
    """
    if len(spec.layers) < 2:
        _fail("min_layers", "≥ 2 layers required")
    for i, layer in enumerate(spec.layers):
        if not layer:
            _fail("empty_layer", f"layer {i} is empty")

    seen: set[str] = set()
    for layer in spec.layers:
        for agent_id in layer:
            if agent_id in seen:
                _fail("duplicate_agent_id", f"duplicate agent_id {agent_id}")
            seen.add(agent_id)
            if agent_id not in spec.agents:
                _fail("unknown_agent_id", f"layer references undefined agent '{agent_id}'")
    for agent_id in spec.agents:
        if agent_id not in seen:
            _fail("unreferenced_agent", f"agent '{agent_id}' is not referenced by any layer")

    final = spec.layers[-1]
    if len(final) != 1 or spec.agents[final[0]].role is not Role.AGGREGATOR:
        _fail(
            "final_layer_not_single_aggregator",
            "final layer must contain exactly one aggregator",
        )

    planners = [a for a in spec.agents.values() if a.role is Role.PLANNER]
    if len(planners) > 1:
        _fail("multiple_planners", "at most one planner is allowed")
    for planner in planners:
        if planner.agent_id not in spec.layers[0]:
            _fail("planner_outside_layer0", f"planner '{planner.agent_id}' must be in layer 0")

    for agent in spec.agents.values():
        if agent.role is Role.AGGREGATOR and agent.kb_binding is not None:
            _fail("aggregator_has_kb", f"aggregator '{agent.agent_id}' must not bind a KB")
        if agent.role is Role.SUBPROCESS:
            if agent.model is not None:
                _fail("subprocess_has_model", f"subprocess '{agent.agent_id}' must not set model")
            if not agent.handler_id:
                _fail(
                    "subprocess_missing_handler",
                    f"subprocess '{agent.agent_id}' needs a handler_id",
                )
        else:
            if agent.model is None:
                _fail("missing_model", f"agent '{agent.agent_id}' has no model")
        if agent.kb_binding is not None and agent.top_k < 1:
            _fail(
                "worker_kb_without_top_k",
                f"agent '{agent.agent_id}' binds a KB but top_k is {agent.top_k}",
            )

    edge_map: dict[str, tuple[str, ...]] = {}
    for i in range(1, len(spec.layers)):
        previous = spec.layers[i - 1]
        for agent_id in spec.layers[i]:
            upstream = spec.agents[agent_id].upstream or previous
            for ref in upstream:
                if ref not in previous:
                    _fail(
                        "bad_upstream_reference",
                        f"'{agent_id}' lists upstream '{ref}' outside the preceding layer",
                    )
            edge_map[agent_id] = tuple(upstream)

    resolved_backends: dict[str, object] = {}
    resolved_kbs: dict[str, object] = {}
    resolved_handlers: dict[str, object] = {}
    for agent in spec.agents.values():
        if agent.model is not None:
            backend = registry.backends.get(agent.model.backend_id)
            if backend is None:
                _fail(
                    "unresolved_backend",
                    f"agent '{agent.agent_id}': backend '{agent.model.backend_id}' not registered",
                )
            resolved_backends[agent.agent_id] = backend
        if agent.kb_binding is not None:
            kb = registry.kbs.get(agent.kb_binding)
            if kb is None:
                _fail(
                    "unresolved_kb",
                    f"agent '{agent.agent_id}': knowledge base '{agent.kb_binding}' not registered",
                )
            resolved_kbs[agent.agent_id] = kb
        if agent.role is Role.SUBPROCESS:
            handler = registry.handlers.get(agent.handler_id or "")
            if handler is None:
                _fail(
                    "unresolved_handler",
                    f"agent '{agent.agent_id}': handler '{agent.handler_id}' not registered",
                )
            resolved_handlers[agent.agent_id] = handler

    return ExecutionPlan(
        pipeline=spec,
        edge_map=edge_map,
        resolved_backends=resolved_backends,
        resolved_kbs=resolved_kbs,
        resolved_handlers=resolved_handlers,
    )
