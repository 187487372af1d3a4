"""Text embedding providers.

Any object with ``dim`` and ``embed(text) -> np.ndarray`` works. The hashing
provider is deterministic and needs no model download.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol

import numpy as np

from omnivic.errors import BackendError, ContractViolation
from omnivic.remote import Transport

_TOKEN = re.compile(r"[a-z0-9]+")


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


def _normalize(vec: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(vec))
    if n == 0.0 or not np.isfinite(n):
        raise ContractViolation("cannot normalize a zero or non-finite embedding")
    return vec / n


class HashingEmbedder:
    """Bag-of-words over lowercase alphanumeric tokens, hashed into ``dim`` buckets."""

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ContractViolation("dim must be positive")
        self.dim = dim

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dim

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ContractViolation("cannot embed empty text")
        tokens = _TOKEN.findall(text.lower())
        if not tokens:
            raise ContractViolation(f"no tokens in {text!r}")
        vec = np.zeros(self.dim)
        for tok in tokens:
            vec[self._bucket(tok)] += 1.0
        return _normalize(vec)


class RemoteEmbedder:
    """Embeds through a remote endpoint.

    Request: ``{"model": ..., "input": text}``; the response must carry an
    ``embedding`` list (or OpenAI-style ``data[0].embedding``).
    """

    def __init__(self, transport: Transport, model: str, dim: int):
        self.transport = transport
        self.model = model
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ContractViolation("cannot embed empty text")
        try:
            reply = self.transport({"model": self.model, "input": text})
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(f"embedding transport failed: {exc}") from exc
        try:
            values = reply["embedding"] if "embedding" in reply else reply["data"][0]["embedding"]
            vec = np.asarray(values, dtype=float)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed embedding response: {reply!r}") from exc
        if vec.shape != (self.dim,):
            raise BackendError(f"expected {self.dim} numbers, got shape {vec.shape}")
        try:
            return _normalize(vec)
        except ContractViolation as exc:
            raise BackendError(str(exc)) from exc
