"""Execution logs and signed provenance artifacts.

The provenance artifact is the cross-layer binding object: it ties the
request hash and quote id to the verified payment receipt, the hash of the
canonical execution log, and the content id of the delivered bytes, all
under the service agent's signature. Anyone holding the artifact, the
quote, the receipt, and the delivered bytes can re-verify the session
offline. Evidence level is signed logs; the verdict carries an assurance
tag so stronger backends (attestation, proofs) can slot in later.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import crypto
from .canon import canonicalize
from .settlement import Quote, Receipt, quote_id
from .store import cid_of

__all__ = [
    "LogEntry",
    "ExecutionLog",
    "ProvenanceArtifact",
    "ProvenanceReason",
    "ProvenanceVerdict",
    "BindingMismatch",
    "build_provenance",
    "verify_provenance",
    "provenance_hash",
    "ASSURANCE_SIGNED_LOG",
]

ASSURANCE_SIGNED_LOG = "SignedLog"


class BindingMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LogEntry:
    step_index: int
    tool_name: str
    input_hash: bytes
    output_hash: bytes
    sim_timestamp_ms: int

    def to_dict(self) -> dict:
        return {
            "stepIndex": self.step_index,
            "toolName": self.tool_name,
            "inputHash": self.input_hash.hex(),
            "outputHash": self.output_hash.hex(),
            "simTimestampMs": self.sim_timestamp_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogEntry":
        return cls(
            d["stepIndex"],
            d["toolName"],
            bytes.fromhex(d["inputHash"]),
            bytes.fromhex(d["outputHash"]),
            d["simTimestampMs"],
        )


@dataclass(frozen=True)
class ExecutionLog:
    request_hash: bytes
    quote_id: bytes
    entries: tuple[LogEntry, ...]

    def __post_init__(self) -> None:
        for i, entry in enumerate(self.entries):
            if entry.step_index != i:
                raise ValueError("step_index must increase strictly from 0")

    def to_dict(self) -> dict:
        return {
            "requestHash": self.request_hash.hex(),
            "quoteId": self.quote_id.hex(),
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExecutionLog":
        return cls(
            bytes.fromhex(d["requestHash"]),
            bytes.fromhex(d["quoteId"]),
            tuple(LogEntry.from_dict(e) for e in d["entries"]),
        )

    def digest(self) -> bytes:
        return crypto.sha256(canonicalize(self.to_dict()))


@dataclass(frozen=True)
class ProvenanceArtifact:
    request_hash: bytes
    quote_id: bytes
    receipt_tx_hash: bytes
    output_cid: str
    exec_log_hash: bytes
    sa: bytes
    signature: crypto.Signature

    def unsigned_dict(self) -> dict:
        return {
            "requestHash": self.request_hash.hex(),
            "quoteId": self.quote_id.hex(),
            "receiptTxHash": self.receipt_tx_hash.hex(),
            "outputCid": self.output_cid,
            "execLogHash": self.exec_log_hash.hex(),
            "sa": self.sa.hex(),
        }

    def to_dict(self) -> dict:
        d = self.unsigned_dict()
        d["signature"] = self.signature.hex()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProvenanceArtifact":
        sa = bytes.fromhex(d["sa"])
        return cls(
            request_hash=bytes.fromhex(d["requestHash"]),
            quote_id=bytes.fromhex(d["quoteId"]),
            receipt_tx_hash=bytes.fromhex(d["receiptTxHash"]),
            output_cid=d["outputCid"],
            exec_log_hash=bytes.fromhex(d["execLogHash"]),
            sa=sa,
            signature=crypto.Signature(bytes.fromhex(d["signature"]), sa),
        )


class ProvenanceReason(str, Enum):
    SIGNER_MISMATCH = "SignerMismatch"
    BINDING_MISMATCH = "BindingMismatch"
    RECEIPT_MISMATCH = "ReceiptMismatch"
    CID_MISMATCH = "CidMismatch"


@dataclass(frozen=True)
class ProvenanceVerdict:
    accepted: bool
    reason: ProvenanceReason | None = None
    assurance: str = ASSURANCE_SIGNED_LOG


def build_provenance(
    sa_identity: crypto.AgentIdentity,
    exec_log: ExecutionLog,
    receipt: Receipt,
    output_cid: str,
) -> ProvenanceArtifact:
    """Sign the artifact binding log, receipt, and output; pure given inputs."""
    if exec_log.request_hash != receipt.event.request_hash:
        raise BindingMismatch("execution log bound to a different request")
    if exec_log.quote_id != receipt.event.quote_id:
        raise BindingMismatch("execution log bound to a different quote")
    unsigned = ProvenanceArtifact(
        request_hash=exec_log.request_hash,
        quote_id=exec_log.quote_id,
        receipt_tx_hash=receipt.tx_hash,
        output_cid=output_cid,
        exec_log_hash=exec_log.digest(),
        sa=sa_identity.address,
        signature=crypto.Signature(b"", sa_identity.address),
    )
    sig = sa_identity.sign(canonicalize(unsigned.unsigned_dict()))
    object.__setattr__(unsigned, "signature", sig)
    return unsigned


def verify_provenance(
    artifact: ProvenanceArtifact,
    quote: Quote,
    receipt: Receipt,
    delivered_content: bytes,
    sa_public_key: bytes,
) -> ProvenanceVerdict:
    """Offline check that the delivered bytes are the paid-for output."""
    try:
        signer_ok = (
            crypto.derive_address(sa_public_key) == artifact.sa
            and artifact.sa == quote.payee
            and crypto.verify(
                sa_public_key,
                canonicalize(artifact.unsigned_dict()),
                artifact.signature.bytes,
            )
        )
    except crypto.InvalidPublicKey:
        signer_ok = False
    if not signer_ok:
        return ProvenanceVerdict(False, ProvenanceReason.SIGNER_MISMATCH)
    if artifact.request_hash != quote.request_hash:
        return ProvenanceVerdict(False, ProvenanceReason.BINDING_MISMATCH)
    if artifact.quote_id != quote_id(quote):
        return ProvenanceVerdict(False, ProvenanceReason.BINDING_MISMATCH)
    if artifact.receipt_tx_hash != receipt.tx_hash:
        return ProvenanceVerdict(False, ProvenanceReason.RECEIPT_MISMATCH)
    if str(cid_of(delivered_content)) != artifact.output_cid:
        return ProvenanceVerdict(False, ProvenanceReason.CID_MISMATCH)
    return ProvenanceVerdict(True)


def provenance_hash(artifact: ProvenanceArtifact) -> bytes:
    """Hash over the full artifact (signature included); recorded on release."""
    return crypto.sha256(canonicalize(artifact.to_dict()))
