"""Knowledge-base types and top-k similarity search."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from . import embedding


@dataclass(frozen=True)
class DocumentChunk:
    chunk_id: str
    doc_id: str
    text: str
    embedding: tuple[float, ...]
    position: int
    metadata: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ScoredChunk:
    chunk: DocumentChunk
    score: float


@dataclass
class KnowledgeBase:
    """One agent's retrieval collection: embedded chunks of one embedder."""

    kb_id: str
    embedder_id: str = embedding.HASHED_BOW_ID
    dimension: int = embedding.DIMENSION
    chunks: list[DocumentChunk] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.chunks)


def search(kb: KnowledgeBase, query: str, k: int) -> list[ScoredChunk]:
    """Rank all chunks by cosine similarity to the query.

    Returns min(k, |kb|) results sorted by score descending, ties broken by
    ascending chunk_id so the order is total and reproducible.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if not kb.chunks:
        return []
    query_embedding = embedding.embed(kb.embedder_id, query)
    for chunk in kb.chunks:
        if len(chunk.embedding) != len(query_embedding):
            raise ValueError(
                f"embedder mismatch in kb '{kb.kb_id}': chunk '{chunk.chunk_id}' has "
                f"dimension {len(chunk.embedding)}, embedder '{kb.embedder_id}' "
                f"produces {len(query_embedding)}"
            )
    scored = [
        ScoredChunk(chunk=chunk, score=embedding.cosine(query_embedding, chunk.embedding))
        for chunk in kb.chunks
    ]
    scored.sort(key=lambda s: (-s.score, s.chunk.chunk_id))
    return scored[:k]
