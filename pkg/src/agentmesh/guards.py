"""Abstention detection and embedding-based grounding verification.

The grounding score is sentence-granular so a failing span can be pointed at
in the trace: split the answer on sentence terminators, embed each sentence
of at least five tokens, take its maximum similarity against the retrieved
chunk embeddings, and average those maxima. Sentences under the threshold are
flagged. A deliberate abstention passes outright; a substantive answer with
nothing retrieved fails outright.

Guards annotate, never rewrite: callers record the verdict and downstream
prompts mark failing answers, but no answer text is changed here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .core.types import GuardPolicy
from .retrieval import embedding
from .retrieval.kb import ScoredChunk

ABSTENTION_SCAN_CHARS = 200
MIN_SENTENCE_TOKENS = 5

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class GuardVerdict:
    abstained: bool
    grounding_score: float
    flagged_sentences: tuple[tuple[str, float], ...]
    passed: bool


def detect_abstention(answer: str, policy: GuardPolicy) -> bool:
    """True iff the answer opens with a recognized refusal (or is empty)."""
    head = answer.strip().lower()[:ABSTENTION_SCAN_CHARS]
    if not head:
        return True
    return any(phrase in head for phrase in policy.abstention_phrases)


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_SPLIT.split(text.strip()) if s]


def grounding_check(
    answer: str,
    retrieved: Sequence[ScoredChunk],
    policy: GuardPolicy,
    embedder_id: str,
) -> GuardVerdict:
    """Score how well each answer sentence is supported by retrieved passages.

    Sentences shorter than five tokens are skipped; an answer with no
    checkable sentence passes vacuously with score 1.0. A substantive answer
    with nothing retrieved fails unconditionally, even under a degenerate
    zero threshold.
    """
    if detect_abstention(answer, policy):
        return GuardVerdict(abstained=True, grounding_score=1.0, flagged_sentences=(), passed=True)
    if not retrieved:
        return GuardVerdict(abstained=False, grounding_score=0.0, flagged_sentences=(), passed=False)

    sentences = [
        s for s in split_sentences(answer) if len(embedding.tokenize(s)) >= MIN_SENTENCE_TOKENS
    ]
    if not sentences:
        return GuardVerdict(abstained=False, grounding_score=1.0, flagged_sentences=(), passed=True)

    embedder = embedding.get_embedder(embedder_id)
    maxima = []
    flagged = []
    for sentence in sentences:
        vector = embedder.embed(sentence)
        best = max(embedding.cosine(vector, sc.chunk.embedding) for sc in retrieved)
        maxima.append(best)
        if best < policy.grounding_threshold:
            flagged.append((sentence, best))

    score = sum(maxima) / len(maxima)
    return GuardVerdict(
        abstained=False,
        grounding_score=score,
        flagged_sentences=tuple(flagged),
        passed=score >= policy.grounding_threshold,
    )
