"""Checklist coverage grading.

A checklist is a question plus the vital facts a good answer must capture.
Each fact carries one or more keyword groups; the fact counts as captured iff
any group has all of its keywords present in the response (case-insensitive,
whitespace-normalized substring match). Substring semantics keep scoring
monotone under appended text.

Keyword matching is deliberately simple so graded fixtures stay frozen and
byte-reproducible; the bundled matcher lists were hand-annotated from the
fact descriptions and tuned against the bundled graded responses.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources


@dataclass(frozen=True)
class Fact:
    fact_id: str
    description: str
    matchers: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.matchers or any(not group for group in self.matchers):
            raise ValueError(f"fact '{self.fact_id}' needs non-empty matcher groups")


@dataclass(frozen=True)
class Checklist:
    question: str
    facts: tuple[Fact, ...]

    def __post_init__(self):
        if not self.facts:
            raise ValueError("checklist needs at least one fact")


@dataclass(frozen=True)
class FactMatch:
    fact_id: str
    matched: bool
    matched_keywords: tuple[str, ...]


@dataclass(frozen=True)
class ChecklistScore:
    matched: int
    total: int
    details: tuple[FactMatch, ...]


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip().lower()


def score_checklist(response: str, checklist: Checklist) -> ChecklistScore:
    """Count facts captured by the response, with per-fact match detail."""
    haystack = _normalize(response)
    details = []
    matched_count = 0
    for fact in checklist.facts:
        matched_group: tuple[str, ...] = ()
        for group in fact.matchers:
            if all(_normalize(keyword) in haystack for keyword in group):
                matched_group = group
                break
        if matched_group:
            matched_count += 1
        details.append(
            FactMatch(fact_id=fact.fact_id, matched=bool(matched_group), matched_keywords=matched_group)
        )
    return ChecklistScore(matched=matched_count, total=len(checklist.facts), details=tuple(details))


def checklist_from_dict(doc: dict) -> Checklist:
    facts = tuple(
        Fact(
            fact_id=f["fact_id"],
            description=f["description"],
            matchers=tuple(tuple(group) for group in f["matchers"]),
        )
        for f in doc["facts"]
    )
    return Checklist(question=doc["question"], facts=facts)


def load_checklist(path: str) -> Checklist:
    with open(path, encoding="utf-8") as fh:
        return checklist_from_dict(json.load(fh))


def _fixture_text(name: str) -> str:
    return resources.files("agentmesh.evalbench").joinpath(f"fixtures/{name}").read_text("utf-8")


def bundled_checklist() -> Checklist:
    """The frozen 7-fact revenue-outlook checklist."""
    return checklist_from_dict(json.loads(_fixture_text("aapl_q1_2023_checklist.json")))


def bundled_graded_responses() -> list[dict]:
    """Six canned responses with their frozen grades, for golden tests."""
    return json.loads(_fixture_text("aapl_q1_2023_responses.json"))["responses"]
