from random import Random

import pytest

from agora.canon import canonicalize
from agora.crypto import AgentIdentity, sha256
from agora.ledger import EscrowLockedEvent
from agora.provenance import (
    BindingMismatch,
    ExecutionLog,
    LogEntry,
    ProvenanceArtifact,
    ProvenanceReason,
    build_provenance,
    provenance_hash,
    verify_provenance,
)
from agora.settlement import Quote, Receipt, quote_id
from agora.store import cid_of

SA = AgentIdentity.from_seed(b"prov-sa")
UA = AgentIdentity.from_seed(b"prov-ua")
CONTENT = b"delivered artifact bytes"


def make_quote(request_hash):
    unsigned = Quote(
        price=5000,
        currency="USDC",
        payee=SA.address,
        chain_id=1,
        escrow_ref="escrow:sim",
        expiry_ms=60_000,
        nonce=sha256(b"nonce"),
        request_hash=request_hash,
        receipt_spec={"kind": "OnChainEvent"},
        signature=None,
    )
    sig = SA.sign(canonicalize(unsigned.unsigned_dict()))
    object.__setattr__(unsigned, "signature", sig)
    return unsigned


def make_session():
    request_hash = sha256(b"the request")
    quote = make_quote(request_hash)
    qid = quote_id(quote)
    event = EscrowLockedEvent(
        quote_id=qid,
        request_hash=request_hash,
        payer=UA.address,
        payee=SA.address,
        amount=5000,
        expiry_ms=60_000,
        block_number=1,
    )
    receipt = Receipt(tx_hash=sha256(b"tx"), block_number=1, event=event)
    log = ExecutionLog(
        request_hash,
        qid,
        (LogEntry(0, "generate", request_hash, cid_of(CONTENT).digest, 1234),),
    )
    artifact = build_provenance(SA, log, receipt, str(cid_of(CONTENT)))
    return quote, receipt, log, artifact


def test_execution_log_strict_step_indexing():
    rh, qid = sha256(b"r"), sha256(b"q")
    entry = LogEntry(1, "t", rh, rh, 0)
    with pytest.raises(ValueError):
        ExecutionLog(rh, qid, (entry,))
    log = ExecutionLog(rh, qid, (LogEntry(0, "t", rh, rh, 0), LogEntry(1, "t", rh, rh, 5)))
    assert ExecutionLog.from_dict(log.to_dict()) == log
    assert log.digest() == sha256(canonicalize(log.to_dict()))


def test_build_and_verify_round_trip():
    quote, receipt, log, artifact = make_session()
    assert artifact.exec_log_hash == log.digest()
    verdict = verify_provenance(artifact, quote, receipt, CONTENT, SA.public_key)
    assert verdict.accepted
    assert verdict.assurance == "SignedLog"
    # Offline: the wire form verifies identically.
    decoded = ProvenanceArtifact.from_dict(artifact.to_dict())
    assert verify_provenance(decoded, quote, receipt, CONTENT, SA.public_key).accepted


def test_build_rejects_mismatched_log_bindings():
    quote, receipt, log, _ = make_session()
    wrong_log = ExecutionLog(sha256(b"other"), log.quote_id, log.entries)
    with pytest.raises(BindingMismatch):
        build_provenance(SA, wrong_log, receipt, str(cid_of(CONTENT)))
    wrong_qid = ExecutionLog(log.request_hash, sha256(b"other"), log.entries)
    with pytest.raises(BindingMismatch):
        build_provenance(SA, wrong_qid, receipt, str(cid_of(CONTENT)))


def test_signer_mismatch_detected():
    quote, receipt, _, artifact = make_session()
    impostor = AgentIdentity.from_seed(b"impostor")
    verdict = verify_provenance(artifact, quote, receipt, CONTENT, impostor.public_key)
    assert verdict.reason == ProvenanceReason.SIGNER_MISMATCH

    d = artifact.to_dict()
    d["outputCid"] = str(cid_of(b"free stuff"))  # signature no longer covers this
    forged = ProvenanceArtifact.from_dict(d)
    verdict = verify_provenance(forged, quote, receipt, b"free stuff", SA.public_key)
    assert verdict.reason == ProvenanceReason.SIGNER_MISMATCH


def test_binding_mismatch_detected():
    quote, receipt, log, artifact = make_session()
    other_quote = make_quote(sha256(b"a different request"))
    verdict = verify_provenance(artifact, other_quote, receipt, CONTENT, SA.public_key)
    assert verdict.reason == ProvenanceReason.BINDING_MISMATCH


def test_receipt_mismatch_detected():
    quote, receipt, _, artifact = make_session()
    other = Receipt(tx_hash=sha256(b"tx2"), block_number=1, event=receipt.event)
    verdict = verify_provenance(artifact, quote, other, CONTENT, SA.public_key)
    assert verdict.reason == ProvenanceReason.RECEIPT_MISMATCH


def test_delivered_bytes_mutation_detected():
    quote, receipt, _, artifact = make_session()
    mutated = bytearray(CONTENT)
    mutated[0] ^= 0x01
    verdict = verify_provenance(artifact, quote, receipt, bytes(mutated), SA.public_key)
    assert verdict.reason == ProvenanceReason.CID_MISMATCH


def test_provenance_hash_covers_signature():
    _, _, _, artifact = make_session()
    h1 = provenance_hash(artifact)
    d = artifact.to_dict()
    d["signature"] = "00" * 64
    h2 = provenance_hash(ProvenanceArtifact.from_dict(d))
    assert h1 != h2


def test_deterministic_rebuild():
    _, _, _, a1 = make_session()
    _, _, _, a2 = make_session()
    assert a1 == a2
    assert provenance_hash(a1) == provenance_hash(a2)
