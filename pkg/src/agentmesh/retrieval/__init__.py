from .chunking import chunk_document, chunk_id_for, expected_chunk_count
from .embedding import DIMENSION, HASHED_BOW_ID, cosine, embed, get_embedder, tokenize
from .kb import DocumentChunk, KnowledgeBase, ScoredChunk, search
from .store import KnowledgeBaseStore, UnknownKnowledgeBaseError

__all__ = [
    "DIMENSION",
    "HASHED_BOW_ID",
    "DocumentChunk",
    "KnowledgeBase",
    "KnowledgeBaseStore",
    "ScoredChunk",
    "UnknownKnowledgeBaseError",
    "chunk_document",
    "chunk_id_for",
    "cosine",
    "embed",
    "expected_chunk_count",
    "get_embedder",
    "search",
    "tokenize",
]
