"""Planner-output parsing with total fallback.

The planner is asked for a JSON array of {"agent_id", "question"} records.
Model output is noisy, so parsing never fails: unknown agents are dropped,
workers without an assignment get the original question, and completely
unparseable output broadcasts the original question to everyone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence


@dataclass(frozen=True)
class PlannerAssignment:
    assignments: Mapping[str, str]


def plan_assignments(
    planner_output: str,
    workers: Sequence[str],
    question: str,
) -> PlannerAssignment:
    assigned: dict[str, str] = {}
    try:
        parsed = json.loads(planner_output)
    except (json.JSONDecodeError, TypeError):
        parsed = None

    if isinstance(parsed, list):
        known = set(workers)
        for entry in parsed:
            if not isinstance(entry, dict):
                continue
            agent_id = entry.get("agent_id")
            sub_question = entry.get("question")
            if isinstance(agent_id, str) and isinstance(sub_question, str) and agent_id in known:
                assigned[agent_id] = sub_question

    return PlannerAssignment(
        assignments={worker: assigned.get(worker, question) for worker in workers}
    )
