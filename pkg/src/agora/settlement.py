"""Payment-challenge settlement objects and verification.

A service answers a priced request with a 402-style challenge carrying a
signed quote. The client locks the quoted amount in escrow (keyed by the
quote id, which binds the signed quote to the request hash) and presents a
receipt: the lock transaction hash plus the decoded escrow event. The
service accepts the receipt only if every binding matches; accepted quote
ids enter a consumed set so receipts cannot be replayed, while byte-identical
retries of a completed request get the cached delivery back.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from random import Random
from typing import Any, Protocol

from . import crypto
from .canon import canonicalize
from .capability import CapabilityManifest, ServiceRequest, price_request, validate_request
from .capability import SchemaViolation
from .ledger import EscrowLockedEvent, Ledger, TxReceipt

__all__ = [
    "PAYMENT_CHALLENGE_PAYLOAD_TYPE",
    "ReceiptSpecKind",
    "Quote",
    "PaymentChallenge",
    "Receipt",
    "RejectReason",
    "Verdict",
    "SettlementError",
    "InvalidQuoteSignature",
    "QuoteExpired",
    "InsufficientBalance",
    "compute_request_hash",
    "issue_quote",
    "quote_id",
    "pay_quote",
    "verify_receipt",
    "ConsumedSet",
]

PAYMENT_CHALLENGE_PAYLOAD_TYPE = "payment_challenge_402"


class ReceiptSpecKind(str, Enum):
    ON_CHAIN_EVENT = "OnChainEvent"
    # Interface placeholders; verification rejects them as unsupported.
    PROCESSOR_SIGNED = "ProcessorSigned"
    L2_ROLLUP = "L2Rollup"


class SettlementError(Exception):
    pass


class InvalidQuoteSignature(SettlementError):
    pass


class QuoteExpired(SettlementError):
    pass


class InsufficientBalance(SettlementError):
    pass


@dataclass(frozen=True)
class Quote:
    price: int  # fixed-point, 6 decimals
    currency: str
    payee: bytes
    chain_id: int
    escrow_ref: str
    expiry_ms: int
    nonce: bytes  # 32 random bytes
    request_hash: bytes
    receipt_spec: dict  # {"kind": ReceiptSpecKind value, ...params}
    signature: crypto.Signature

    def unsigned_dict(self) -> dict:
        return {
            "price": self.price,
            "currency": self.currency,
            "payee": self.payee.hex(),
            "chainId": self.chain_id,
            "escrowRef": self.escrow_ref,
            "expiryMs": self.expiry_ms,
            "nonce": self.nonce.hex(),
            "requestHash": self.request_hash.hex(),
            "receiptSpec": self.receipt_spec,
        }

    def to_dict(self) -> dict:
        d = self.unsigned_dict()
        d["signature"] = self.signature.hex()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Quote":
        payee = bytes.fromhex(d["payee"])
        return cls(
            price=d["price"],
            currency=d["currency"],
            payee=payee,
            chain_id=d["chainId"],
            escrow_ref=d["escrowRef"],
            expiry_ms=d["expiryMs"],
            nonce=bytes.fromhex(d["nonce"]),
            request_hash=bytes.fromhex(d["requestHash"]),
            receipt_spec=d["receiptSpec"],
            signature=crypto.Signature(bytes.fromhex(d["signature"]), payee),
        )

    def verify_signature(self, payee_public_key: bytes) -> bool:
        try:
            if crypto.derive_address(payee_public_key) != self.payee:
                return False
        except crypto.InvalidPublicKey:
            return False
        return crypto.verify(
            payee_public_key, canonicalize(self.unsigned_dict()), self.signature.bytes
        )


def quote_id(quote: Quote) -> bytes:
    """Digest keying the escrow entry.

    sha256(canonical unsigned quote || quote signature || request hash); a
    deterministic function of the signed quote and the request binding.
    """
    return crypto.sha256(
        canonicalize(quote.unsigned_dict()) + quote.signature.bytes + quote.request_hash
    )


@dataclass(frozen=True)
class PaymentChallenge:
    quote: Quote
    status_code: int = 402

    def to_dict(self) -> dict:
        return {"statusCode": self.status_code, "quote": self.quote.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PaymentChallenge":
        return cls(quote=Quote.from_dict(d["quote"]), status_code=d["statusCode"])


@dataclass(frozen=True)
class Receipt:
    """Proof of payment: lock tx hash plus the decoded escrow event."""

    tx_hash: bytes
    block_number: int
    event: EscrowLockedEvent

    def to_dict(self) -> dict:
        return {
            "txHash": self.tx_hash.hex(),
            "blockNumber": self.block_number,
            "event": self.event.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Receipt":
        return cls(
            tx_hash=bytes.fromhex(d["txHash"]),
            block_number=d["blockNumber"],
            event=EscrowLockedEvent.from_dict(d["event"]),
        )


class RejectReason(str, Enum):
    BINDING_MISMATCH = "BindingMismatch"
    AMOUNT_MISMATCH = "AmountMismatch"
    PAYER_MISMATCH = "PayerMismatch"
    PAYEE_MISMATCH = "PayeeMismatch"
    QUOTE_EXPIRED = "QuoteExpired"
    TX_NOT_FOUND = "TxNotFound"
    ALREADY_CONSUMED = "AlreadyConsumed"
    UNSUPPORTED_RECEIPT_SPEC = "UnsupportedReceiptSpec"


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: RejectReason | None = None

    @classmethod
    def accept(cls) -> "Verdict":
        return cls(True)

    @classmethod
    def reject(cls, reason: RejectReason) -> "Verdict":
        return cls(False, reason)


def compute_request_hash(
    request: ServiceRequest, manifest: CapabilityManifest | None = None
) -> bytes:
    """SHA-256 over the canonicalized request JSON."""
    if manifest is not None:
        verdict = validate_request(manifest, request)
        if not verdict.ok:
            raise SchemaViolation(", ".join(verdict.violations))
    return crypto.sha256(canonicalize(request.to_dict()))


def issue_quote(
    sa_identity: crypto.AgentIdentity,
    request: ServiceRequest,
    manifest: CapabilityManifest,
    now_ms: int,
    ttl_ms: int,
    rng: Random,
    chain_id: int = 1,
    escrow_ref: str = "escrow:sim",
) -> PaymentChallenge:
    """Price the request and wrap a signed quote in a 402 challenge."""
    price = price_request(manifest, request)
    unsigned = Quote(
        price=price,
        currency=manifest.pricing.currency,
        payee=sa_identity.address,
        chain_id=chain_id,
        escrow_ref=escrow_ref,
        expiry_ms=now_ms + ttl_ms,
        nonce=rng.getrandbits(256).to_bytes(32, "big"),
        request_hash=compute_request_hash(request),
        receipt_spec={"kind": ReceiptSpecKind.ON_CHAIN_EVENT.value},
        signature=crypto.Signature(b"", sa_identity.address),
    )
    sig = sa_identity.sign(canonicalize(unsigned.unsigned_dict()))
    object.__setattr__(unsigned, "signature", sig)
    return PaymentChallenge(quote=unsigned)


def pay_quote(
    ua_identity: crypto.AgentIdentity,
    ledger: Ledger,
    quote: Quote,
    now_ms: int,
    payee_public_key: bytes,
) -> Receipt:
    """Lock the quoted amount in escrow and assemble the receipt.

    Direct-call variant: blocks (in simulated time) until inclusion by
    advancing the ledger. The session engine stages the same transaction
    through the event scheduler instead.
    """
    if not quote.verify_signature(payee_public_key):
        raise InvalidQuoteSignature("quote signature does not verify against payee")
    if now_ms >= quote.expiry_ms:
        raise QuoteExpired(f"expired at {quote.expiry_ms}")
    if ledger.balance_of(ua_identity.address) < quote.price:
        raise InsufficientBalance("payer balance below quoted price")
    qid = quote_id(quote)
    tx_receipt = ledger.lock_escrow(
        ua_identity, qid, quote.request_hash, quote.payee, quote.price, quote.expiry_ms, now_ms
    )
    return receipt_from_lock(ledger, tx_receipt)


def receipt_from_lock(ledger: Ledger, tx_receipt: TxReceipt) -> Receipt:
    if not tx_receipt.success:
        raise SettlementError(f"lock reverted: {tx_receipt.revert_reason}")
    event = ledger.get_lock_event(tx_receipt.tx_hash)
    assert event is not None
    return Receipt(tx_receipt.tx_hash, tx_receipt.block_number, event)


class LedgerView(Protocol):
    """Read surface verification needs; satisfied by Ledger and offline views."""

    def get_receipt(self, tx_hash: bytes) -> Any: ...

    def get_lock_event(self, tx_hash: bytes) -> EscrowLockedEvent | None: ...

    @property
    def config(self) -> Any: ...


def verify_receipt(
    ledger: "LedgerView",
    receipt: Receipt,
    quote: Quote,
    expected_payer: bytes,
    block_time_ms: int | None = None,
) -> Verdict:
    """Accept iff the decoded on-ledger escrow event matches every binding.

    The expiry check uses the lock block's timestamp, so a payment made
    before expiry stays valid no matter when it is verified.
    """
    if quote.receipt_spec.get("kind") != ReceiptSpecKind.ON_CHAIN_EVENT.value:
        return Verdict.reject(RejectReason.UNSUPPORTED_RECEIPT_SPEC)
    tx_receipt = ledger.get_receipt(receipt.tx_hash)
    if tx_receipt is None or tx_receipt.status != "success":
        return Verdict.reject(RejectReason.TX_NOT_FOUND)
    event = ledger.get_lock_event(receipt.tx_hash)
    if event is None or event != receipt.event:
        return Verdict.reject(RejectReason.BINDING_MISMATCH)
    if event.quote_id != quote_id(quote):
        return Verdict.reject(RejectReason.BINDING_MISMATCH)
    if event.request_hash != quote.request_hash:
        return Verdict.reject(RejectReason.BINDING_MISMATCH)
    if event.payer != expected_payer:
        return Verdict.reject(RejectReason.PAYER_MISMATCH)
    if event.payee != quote.payee:
        return Verdict.reject(RejectReason.PAYEE_MISMATCH)
    if event.amount != quote.price:
        return Verdict.reject(RejectReason.AMOUNT_MISMATCH)
    if block_time_ms is None:
        block_time_ms = ledger.config.block_time_ms
    lock_time_ms = event.block_number * block_time_ms
    if lock_time_ms >= quote.expiry_ms:
        return Verdict.reject(RejectReason.QUOTE_EXPIRED)
    return Verdict.accept()


class ConsumedSet:
    """Replay guard with idempotent-retry support.

    Check-and-mark is a single step: the service calls :meth:`check`, and on
    Accept immediately :meth:`mark`s the quote id together with the cached
    delivery. A later presentation of the same quote id returns the cache
    only for a byte-identical request; anything else is AlreadyConsumed.
    """

    def __init__(self) -> None:
        self._consumed: dict[bytes, dict] = {}

    def lookup(self, qid: bytes, request_hash: bytes) -> tuple[Verdict | None, dict | None]:
        """(None, None) if unseen; (Accept, cache) for an identical retry;
        (Reject(AlreadyConsumed), None) otherwise."""
        entry = self._consumed.get(qid)
        if entry is None:
            return None, None
        if entry["requestHash"] == request_hash.hex():
            return Verdict.accept(), entry["delivery"]
        return Verdict.reject(RejectReason.ALREADY_CONSUMED), None

    def mark(self, qid: bytes, request_hash: bytes, delivery: dict) -> None:
        self._consumed[qid] = {"requestHash": request_hash.hex(), "delivery": delivery}

    def snapshot(self) -> dict:
        return {qid.hex(): dict(entry) for qid, entry in self._consumed.items()}

    @classmethod
    def restore(cls, snapshot: dict) -> "ConsumedSet":
        out = cls()
        out._consumed = {bytes.fromhex(k): dict(v) for k, v in snapshot.items()}
        return out
