"""Content-addressed delivery store.

Stands in for an IPFS-style pinning service: immutable blobs addressed by
``cid:<hex sha256>``, with a size-proportional simulated upload latency.
Retrieval re-hashes the stored bytes, so injected corruption is detected.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .crypto import sha256

__all__ = [
    "Cid",
    "ContentStore",
    "StoreError",
    "EmptyContent",
    "NotFound",
    "NotYetAvailable",
    "IntegrityFailure",
    "cid_of",
]

_MIB = 1024 * 1024


class StoreError(Exception):
    pass


class EmptyContent(StoreError):
    pass


class NotFound(StoreError):
    pass


class NotYetAvailable(StoreError):
    pass


class IntegrityFailure(StoreError):
    pass


@dataclass(frozen=True)
class Cid:
    digest: bytes

    def __str__(self) -> str:
        return "cid:" + self.digest.hex()

    @classmethod
    def parse(cls, text: str) -> "Cid":
        if not text.startswith("cid:"):
            raise ValueError(f"not a cid: {text!r}")
        digest = bytes.fromhex(text[4:])
        if len(digest) != 32:
            raise ValueError("cid digest must be 32 bytes")
        return cls(digest)


def cid_of(content: bytes) -> Cid:
    return Cid(sha256(content))


class ContentStore:
    """In-process CID store with a linear upload-latency model."""

    def __init__(
        self,
        upload_base_ms: int = 50,
        upload_per_mib_ms: int = 20,
        persist_dir: str | None = None,
    ):
        self.upload_base_ms = upload_base_ms
        self.upload_per_mib_ms = upload_per_mib_ms
        self.persist_dir = persist_dir
        self._blobs: dict[bytes, bytes] = {}
        self._available_at: dict[bytes, int] = {}
        if persist_dir:
            os.makedirs(persist_dir, exist_ok=True)

    def upload_latency_ms(self, size: int) -> int:
        return self.upload_base_ms + round(self.upload_per_mib_ms * size / _MIB)

    def put(self, content: bytes, now_ms: int, size_hint: int | None = None) -> tuple[Cid, int]:
        """Store ``content``; returns (cid, completion time). Idempotent.

        ``size_hint`` lets simulated workloads charge upload latency for a
        declared artifact size while storing small stand-in bytes.
        """
        if not content:
            raise EmptyContent("refusing to store empty content")
        cid = cid_of(content)
        completion = now_ms + self.upload_latency_ms(size_hint or len(content))
        previous = self._available_at.get(cid.digest)
        if previous is not None:
            completion = min(previous, completion)
        self._blobs[cid.digest] = content
        self._available_at[cid.digest] = completion
        if self.persist_dir:
            path = os.path.join(self.persist_dir, cid.digest.hex())
            with open(path, "wb") as fh:
                fh.write(content)
        return cid, completion

    def get(self, cid: Cid, now_ms: int) -> bytes:
        content = self._blobs.get(cid.digest)
        if content is None:
            raise NotFound(str(cid))
        if now_ms < self._available_at[cid.digest]:
            raise NotYetAvailable(str(cid))
        if sha256(content) != cid.digest:
            raise IntegrityFailure(str(cid))
        return content

    def corrupt(self, cid: Cid, content: bytes) -> None:
        """Test hook: overwrite stored bytes without touching the CID."""
        if cid.digest not in self._blobs:
            raise NotFound(str(cid))
        self._blobs[cid.digest] = content
