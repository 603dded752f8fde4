"""Character-window document chunking.

Windows are character-based (tokenizer-independent): chunks start at every
multiple of ``window - overlap`` below the text length, each spanning up to
``window`` characters. Dropping the first ``overlap`` characters of every
chunk after the first and concatenating reconstructs the original text
exactly.
"""

from __future__ import annotations

import math

from .kb import DocumentChunk

DEFAULT_WINDOW = 1000
DEFAULT_OVERLAP = 200


def chunk_id_for(doc_id: str, position: int) -> str:
    # Zero-padded so lexicographic chunk_id order matches document order.
    return f"{doc_id}#{position:08d}"


def expected_chunk_count(length: int, window: int, overlap: int) -> int:
    """Number of chunks produced for a text of ``length`` characters."""
    if length <= 0:
        return 0
    return math.ceil(length / (window - overlap))


def chunk_document(
    doc_id: str,
    text: str,
    window: int = DEFAULT_WINDOW,
    overlap: int = DEFAULT_OVERLAP,
) -> list[DocumentChunk]:
    """Split ``text`` into overlapping windows; chunks come back unembedded."""
    if not text:
        raise ValueError("empty text")
    if window <= 0:
        raise ValueError("window must be positive")
    if overlap < 0:
        raise ValueError("overlap must be >= 0")
    if overlap >= window:
        raise ValueError("overlap must be smaller than window")

    stride = window - overlap
    chunks = []
    for start in range(0, len(text), stride):
        piece = text[start : start + window]
        chunks.append(
            DocumentChunk(
                chunk_id=chunk_id_for(doc_id, start),
                doc_id=doc_id,
                text=piece,
                embedding=(),
                position=start,
            )
        )
    return chunks
