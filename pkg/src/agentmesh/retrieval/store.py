"""Disk-backed knowledge-base store.

Each KB lives in one ``<kb_id>.jsonl`` file with a JSON record per chunk
(``chunk_id``, ``doc_id``, ``position``, ``text``, ``embedding``,
``metadata``). Everything is loaded into memory at startup; ingestion holds
an exclusive per-KB lock and rewrites the file atomically so re-ingesting a
document replaces its chunks exactly, even when the document shrank.
"""

from __future__ import annotations

import json
import os
import re
import threading
from pathlib import Path

from . import embedding
from .chunking import DEFAULT_OVERLAP, DEFAULT_WINDOW, chunk_document
from .kb import DocumentChunk, KnowledgeBase

_KB_ID = re.compile(r"^[A-Za-z0-9_.-]+$")


class UnknownKnowledgeBaseError(KeyError):
    def __init__(self, kb_id: str):
        super().__init__(f"unknown kb_id '{kb_id}'")
        self.kb_id = kb_id


def _chunk_to_record(chunk: DocumentChunk) -> dict:
    return {
        "chunk_id": chunk.chunk_id,
        "doc_id": chunk.doc_id,
        "position": chunk.position,
        "text": chunk.text,
        "embedding": list(chunk.embedding),
        "metadata": dict(chunk.metadata),
    }


def _record_to_chunk(record: dict) -> DocumentChunk:
    return DocumentChunk(
        chunk_id=record["chunk_id"],
        doc_id=record["doc_id"],
        text=record["text"],
        embedding=tuple(record["embedding"]),
        position=record["position"],
        metadata=record.get("metadata", {}),
    )


class KnowledgeBaseStore:
    def __init__(
        self,
        root: str | Path,
        embedder_id: str = embedding.HASHED_BOW_ID,
        window: int = DEFAULT_WINDOW,
        overlap: int = DEFAULT_OVERLAP,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.embedder_id = embedder_id
        self.window = window
        self.overlap = overlap
        self._kbs: dict[str, KnowledgeBase] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self.load_all()

    def _path(self, kb_id: str) -> Path:
        return self.root / f"{kb_id}.jsonl"

    def _lock_for(self, kb_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(kb_id, threading.Lock())

    def load_all(self) -> None:
        for path in sorted(self.root.glob("*.jsonl")):
            self._load_kb(path.stem)

    def _load_kb(self, kb_id: str) -> KnowledgeBase:
        chunks = []
        with self._path(kb_id).open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    chunks.append(_record_to_chunk(json.loads(line)))
        kb = KnowledgeBase(kb_id=kb_id, embedder_id=self.embedder_id, chunks=chunks)
        self._kbs[kb_id] = kb
        return kb

    def kb_ids(self) -> list[str]:
        return sorted(self._kbs)

    def get(self, kb_id: str) -> KnowledgeBase:
        if kb_id not in self._kbs:
            raise UnknownKnowledgeBaseError(kb_id)
        return self._kbs[kb_id]

    def ensure(self, kb_id: str) -> KnowledgeBase:
        """Return the KB, creating an empty one on first use."""
        if not _KB_ID.match(kb_id):
            raise ValueError(f"invalid kb_id '{kb_id}'")
        if kb_id not in self._kbs:
            self._kbs[kb_id] = KnowledgeBase(kb_id=kb_id, embedder_id=self.embedder_id)
        return self._kbs[kb_id]

    def ingest(self, kb_id: str, documents: list[tuple[str, str]]) -> dict[str, int]:
        """Chunk, embed and persist documents; returns chunk counts per doc.

        Idempotent per doc_id: re-ingesting a document replaces its chunks.
        """
        if not documents:
            raise ValueError("empty document list")
        kb = self.ensure(kb_id)
        embedder = embedding.get_embedder(self.embedder_id)

        with self._lock_for(kb_id):
            report: dict[str, int] = {}
            fresh: dict[str, list[DocumentChunk]] = {}
            for doc_id, text in documents:
                raw_chunks = chunk_document(doc_id, text, self.window, self.overlap)
                fresh[doc_id] = [
                    DocumentChunk(
                        chunk_id=c.chunk_id,
                        doc_id=c.doc_id,
                        text=c.text,
                        embedding=embedder.embed(c.text),
                        position=c.position,
                        metadata=c.metadata,
                    )
                    for c in raw_chunks
                ]
                report[doc_id] = len(fresh[doc_id])

            kept = [c for c in kb.chunks if c.doc_id not in fresh]
            for doc_id in sorted(fresh):
                kept.extend(fresh[doc_id])
            # Swap the list atomically so concurrent readers see old or new.
            kb.chunks = kept
            self._persist(kb)
        return report

    def _persist(self, kb: KnowledgeBase) -> None:
        path = self._path(kb.kb_id)
        tmp = path.with_suffix(".jsonl.tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            for chunk in kb.chunks:
                fh.write(json.dumps(_chunk_to_record(chunk), ensure_ascii=False) + "\n")
        os.replace(tmp, path)
