"""Offline verification of an exported run directory.

Re-checks every settled session from files alone — no live simulation
state: the ledger event log stands in for chain access, identities map
addresses to public keys, and the provenance artifact plus the delivered
bytes are read from disk. Any tampering with the receipt bindings, the
provenance artifact, or the delivered content is reported as a finding.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from . import crypto
from .canon import canonicalize
from .ledger import EscrowLockedEvent, EscrowReleasedEvent, decode_event
from .provenance import ProvenanceArtifact, provenance_hash, verify_provenance
from .settlement import Quote, Receipt, quote_id, verify_receipt

__all__ = ["Finding", "AuditReport", "OfflineLedgerView", "verify_run"]


@dataclass(frozen=True)
class Finding:
    path: str
    check: str
    detail: str

    def to_dict(self) -> dict:
        return {"path": self.path, "check": self.check, "detail": self.detail}


@dataclass
class AuditReport:
    ok: bool
    sessions_checked: int
    findings: list[Finding] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "sessionsChecked": self.sessions_checked,
            "findings": [f.to_dict() for f in self.findings],
        }


@dataclass(frozen=True)
class _TxRecord:
    tx_hash: bytes
    block_number: int
    status: str


class OfflineLedgerView:
    """Read-only ledger facade reconstructed from ``ledger_events.jsonl``."""

    def __init__(self, block_time_ms: int):
        self.block_time_ms = block_time_ms
        self._receipts: dict[bytes, _TxRecord] = {}
        self._lock_events: dict[bytes, EscrowLockedEvent] = {}
        self._release_events: dict[bytes, EscrowReleasedEvent] = {}  # by quote id

    @classmethod
    def load(cls, path: str, block_time_ms: int) -> "OfflineLedgerView":
        view = cls(block_time_ms)
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                record = json.loads(line)
                tx_hash = bytes.fromhex(record["txHash"])
                if record["record"] == "tx":
                    view._receipts[tx_hash] = _TxRecord(
                        tx_hash, record["blockNumber"], record["status"]
                    )
                elif record["record"] == "event":
                    event = decode_event(record["event"])
                    if isinstance(event, EscrowLockedEvent):
                        view._lock_events[tx_hash] = event
                    elif isinstance(event, EscrowReleasedEvent):
                        view._release_events[event.quote_id] = event
        return view

    def get_receipt(self, tx_hash: bytes):
        return self._receipts.get(tx_hash)

    def get_lock_event(self, tx_hash: bytes) -> EscrowLockedEvent | None:
        return self._lock_events.get(tx_hash)

    def get_release_event(self, qid: bytes) -> EscrowReleasedEvent | None:
        return self._release_events.get(qid)


def _world_dirs(root: str) -> list[str]:
    """Every directory under ``root`` holding an exported world."""
    out = []
    for dirpath, dirnames, filenames in os.walk(root):
        if "ledger_events.jsonl" in filenames:
            out.append(dirpath)
    return sorted(out)


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def verify_run(root: str) -> AuditReport:
    """Audit every exported world under ``root``; ok iff zero findings."""
    findings: list[Finding] = []
    checked = 0
    worlds = _world_dirs(root)
    if not worlds:
        return AuditReport(False, 0, [Finding(root, "layout", "no exported worlds found")])
    for wdir in worlds:
        tdir = os.path.join(wdir, "transcripts")
        if not os.path.isdir(tdir):
            continue  # metrics-only world (e.g. throughput): nothing exported
        try:
            meta = _load_json(os.path.join(wdir, "meta.json"))
            identities = _load_json(os.path.join(wdir, "identities.json"))
            ledger = OfflineLedgerView.load(
                os.path.join(wdir, "ledger_events.jsonl"), meta["blockTimeMs"]
            )
        except (OSError, ValueError, KeyError) as err:
            findings.append(Finding(wdir, "layout", f"unreadable world: {err}"))
            continue
        pubkeys: dict[bytes, bytes] = {}
        for addr_hex, pub_hex in identities.items():
            addr, pub = bytes.fromhex(addr_hex), bytes.fromhex(pub_hex)
            try:
                derived = crypto.derive_address(pub)
            except crypto.InvalidPublicKey:
                derived = None
            if derived != addr:
                findings.append(
                    Finding(wdir, "identity", f"public key does not derive {addr_hex}")
                )
                continue
            pubkeys[addr] = pub
        for name in sorted(os.listdir(tdir)):
            tpath = os.path.join(tdir, name)
            try:
                transcript = _load_json(tpath)
            except (OSError, ValueError) as err:
                findings.append(Finding(tpath, "transcript", f"unreadable: {err}"))
                continue
            if transcript.get("finalState") != "Settled":
                continue
            checked += 1
            findings.extend(_verify_session(wdir, tpath, transcript, ledger, pubkeys))
    return AuditReport(not findings, checked, findings)


def _verify_session(
    wdir: str,
    tpath: str,
    transcript: dict,
    ledger: OfflineLedgerView,
    pubkeys: dict[bytes, bytes],
) -> list[Finding]:
    findings: list[Finding] = []
    artifacts = transcript.get("artifacts", {})
    sid = transcript.get("sessionId", "")
    try:
        request = artifacts["request"]
        quote = Quote.from_dict(artifacts["quote"])
        receipt = Receipt.from_dict(artifacts["receipt"])
    except (KeyError, TypeError, ValueError) as err:
        return [Finding(tpath, "artifacts", f"malformed session artifacts: {err}")]

    # Request binding: the quote must price exactly this request.
    request_hash = crypto.sha256(canonicalize(request))
    if quote.request_hash != request_hash:
        findings.append(Finding(tpath, "requestHash", "quote bound to different request"))

    payee_pub = pubkeys.get(quote.payee)
    if payee_pub is None:
        findings.append(Finding(tpath, "quoteSignature", "payee public key unknown"))
    elif not quote.verify_signature(payee_pub):
        findings.append(Finding(tpath, "quoteSignature", "quote signature invalid"))

    payer = bytes.fromhex(request["requester"])
    verdict = verify_receipt(ledger, receipt, quote, payer, ledger.block_time_ms)
    if not verdict.accepted:
        findings.append(Finding(tpath, "receipt", verdict.reason.value))

    prov_path = os.path.join(wdir, "artifacts", sid, "provenance.json")
    output_path = os.path.join(wdir, "artifacts", sid, "output.bin")
    try:
        artifact = ProvenanceArtifact.from_dict(_load_json(prov_path))
        with open(output_path, "rb") as fh:
            delivered = fh.read()
    except (OSError, KeyError, TypeError, ValueError) as err:
        findings.append(Finding(prov_path, "provenance", f"unreadable evidence: {err}"))
        return findings
    if payee_pub is not None:
        pv = verify_provenance(artifact, quote, receipt, delivered, payee_pub)
        if not pv.accepted:
            findings.append(Finding(prov_path, "provenance", pv.reason.value))

    # Settlement anchor: the on-ledger release must commit to this artifact.
    release = ledger.get_release_event(quote_id(quote))
    if release is None:
        findings.append(Finding(tpath, "release", "no escrow release recorded"))
    elif release.provenance_hash != provenance_hash(artifact):
        findings.append(
            Finding(tpath, "release", "release commits to a different provenance hash")
        )
    return findings
