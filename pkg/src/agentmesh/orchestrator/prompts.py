"""Prompt rendering for worker, planner, and aggregator nodes.

Rendering is pure: identical inputs produce identical strings, which the
trace integrity checks rely on. Placeholder substitution uses replacement
rather than str.format so braces inside retrieved passages are inert.
"""

from __future__ import annotations

from typing import Sequence

from ..core.types import AgentSpec
from ..retrieval.kb import ScoredChunk

NO_CONTEXT_MARKER = "NO CONTEXT AVAILABLE"
NO_ANSWER_MARKER = "[NO ANSWER — INSUFFICIENT CONTEXT]"
LOW_GROUNDING_MARKER = "[LOW GROUNDING]"

ABSTENTION_INSTRUCTION = (
    "IMPORTANT: The retrieved context may not support an answer. If the "
    "context above does not contain the information needed, reply exactly: "
    "I don't know based on the provided context."
)


class PromptError(ValueError):
    pass


def _require_placeholders(template: str, names: Sequence[str], agent_id: str) -> None:
    for name in names:
        token = "{" + name + "}"
        if token not in template:
            raise PromptError(f"agent '{agent_id}' template is missing placeholder {token}")


def format_context_block(retrieved: Sequence[ScoredChunk]) -> str:
    if not retrieved:
        return NO_CONTEXT_MARKER
    return "\n".join(f"[{sc.chunk.doc_id}#{sc.chunk.position}] {sc.chunk.text}" for sc in retrieved)


def upstream_line(agent_id: str, answer: str, abstained: bool, passed: bool) -> str:
    if abstained:
        return f"Agent {agent_id}: {NO_ANSWER_MARKER}"
    if not passed:
        return f"Agent {agent_id}: {LOW_GROUNDING_MARKER} {answer}"
    return f"Agent {agent_id}: {answer}"


def format_upstream_block(upstream: Sequence) -> str:
    """Label upstream outputs in canonical order: layer, then agent id."""
    ordered = sorted(upstream, key=lambda node: (node.layer, node.agent_id))
    return "\n".join(
        upstream_line(node.agent_id, node.answer, node.guard.abstained, node.guard.passed)
        for node in ordered
    )


def render_worker_prompt(
    agent: AgentSpec,
    question: str,
    retrieved: Sequence[ScoredChunk],
    upstream: Sequence = (),
    workers: Sequence[str] = (),
) -> str:
    """Fill a worker (or planner) template with question and ranked context.

    When abstention is enabled and the top retrieval score falls below the
    policy's minimum (or nothing was retrieved), the abstention instruction
    block is appended.
    """
    _require_placeholders(agent.system_prompt, ("question", "context"), agent.agent_id)
    rendered = agent.system_prompt
    rendered = rendered.replace("{question}", question)
    rendered = rendered.replace("{context}", format_context_block(retrieved))
    if "{upstream}" in rendered:
        rendered = rendered.replace("{upstream}", format_upstream_block(upstream))
    if "{workers}" in rendered:
        rendered = rendered.replace("{workers}", ", ".join(workers))

    policy = agent.guard_policy
    if policy.abstention_enabled:
        top_score = retrieved[0].score if retrieved else None
        if top_score is None or top_score < policy.min_retrieval_score:
            rendered = rendered + "\n\n" + ABSTENTION_INSTRUCTION
    return rendered


def render_aggregator_prompt(agent: AgentSpec, question: str, upstream: Sequence) -> str:
    """Fill the aggregator template with labeled upstream answers."""
    if not upstream:
        raise PromptError("aggregator requires at least one upstream output")
    _require_placeholders(agent.system_prompt, ("question", "upstream"), agent.agent_id)
    rendered = agent.system_prompt
    rendered = rendered.replace("{question}", question)
    rendered = rendered.replace("{upstream}", format_upstream_block(upstream))
    return rendered
