"""Deterministic hashed bag-of-words embedder.

Texts are lowercased and split on non-alphanumerics; each token is hashed
with 64-bit FNV-1a into one of 256 buckets; bucket counts are L2-normalized.
The result is reproducible across runs and platforms, which makes retrieval
golden-testable. Production embedders can register under their own id behind
the same contract.
"""

from __future__ import annotations

import math
import re
from typing import Protocol

DIMENSION = 256
HASHED_BOW_ID = "hashed-bow-256"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

# Word characters minus underscore: splits on every non-alphanumeric.
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def fnv1a_64(data: bytes) -> int:
    value = _FNV_OFFSET
    for byte in data:
        value ^= byte
        value = (value * _FNV_PRIME) & _MASK64
    return value


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def token_bucket(token: str, dimension: int = DIMENSION) -> int:
    return fnv1a_64(token.encode("utf-8")) % dimension


class Embedder(Protocol):
    embedder_id: str
    dimension: int

    def embed(self, text: str) -> tuple[float, ...]: ...


class HashedBagEmbedder:
    embedder_id = HASHED_BOW_ID
    dimension = DIMENSION

    def embed(self, text: str) -> tuple[float, ...]:
        if not text:
            raise ValueError("empty text")
        tokens = tokenize(text)
        if not tokens:
            raise ValueError("text contains no alphanumeric tokens")
        counts = [0.0] * self.dimension
        for token in tokens:
            counts[token_bucket(token, self.dimension)] += 1.0
        norm = math.sqrt(sum(c * c for c in counts))
        return tuple(c / norm for c in counts)


_EMBEDDERS: dict[str, Embedder] = {HASHED_BOW_ID: HashedBagEmbedder()}


def register_embedder(embedder: Embedder) -> None:
    _EMBEDDERS[embedder.embedder_id] = embedder


def get_embedder(embedder_id: str) -> Embedder:
    if embedder_id not in _EMBEDDERS:
        raise KeyError(f"unknown embedder '{embedder_id}'")
    return _EMBEDDERS[embedder_id]


def embed(embedder_id: str, text: str) -> tuple[float, ...]:
    """Embed ``text`` into a unit-norm vector with the named embedder."""
    return get_embedder(embedder_id).embed(text)


def cosine(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    """Dot product; equals cosine similarity for unit-norm inputs.

    Correctly-rounded accumulation, so mathematically equal scores compare
    equal and ranking tie-breaks stay reproducible.
    """
    return math.fsum(x * y for x, y in zip(a, b))
