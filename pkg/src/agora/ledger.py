"""Simulated settlement chain.

Accounts with integer token balances (6-decimal fixed point), eager block
production at a fixed block time, flat per-kind gas accounting, typed event
logs, and the escrow state machine (Locked -> Released | Refunded).

A transaction submitted at time t is included in the first block whose
production time is strictly greater than t (blocks exist at every multiple
of ``block_time_ms``), subject to an optional per-block inclusion cap
modeling RPC/chain throughput limits. State effects apply at inclusion;
guard failures revert the transaction (receipt status ``revert``) while
still consuming its gas and block slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable

from .canon import canonicalize
from .crypto import AgentIdentity, sha256

__all__ = [
    "TxKind",
    "EscrowStatus",
    "LedgerConfig",
    "Transaction",
    "TxReceipt",
    "TxHandle",
    "EscrowEntry",
    "EscrowLockedEvent",
    "EscrowReleasedEvent",
    "EscrowRefundedEvent",
    "IdentityRegisteredEvent",
    "OrderAnchoredEvent",
    "DeliveryAnchoredEvent",
    "Ledger",
    "gas_total",
    "decode_event",
]

TOKEN_DECIMALS = 6  # amounts are integers in 1e-6 token units


class TxKind(str, Enum):
    REGISTER_IDENTITY = "RegisterIdentity"
    ESCROW_LOCK = "EscrowLock"
    ESCROW_RELEASE = "EscrowRelease"
    ESCROW_REFUND = "EscrowRefund"
    ANCHOR_ORDER = "AnchorOrder"
    ANCHOR_DELIVERY = "AnchorDelivery"


DEFAULT_GAS_SCHEDULE: dict[TxKind, int] = {
    TxKind.REGISTER_IDENTITY: 46_000,
    # Lock + release pinned to a 159k session total; the internal split is
    # a declared assumption. Anchors pinned so an anchored session is 326k.
    TxKind.ESCROW_LOCK: 95_000,
    TxKind.ESCROW_RELEASE: 64_000,
    TxKind.ESCROW_REFUND: 64_000,
    TxKind.ANCHOR_ORDER: 90_000,
    TxKind.ANCHOR_DELIVERY: 77_000,
}


class EscrowStatus(str, Enum):
    LOCKED = "Locked"
    RELEASED = "Released"
    REFUNDED = "Refunded"


@dataclass
class LedgerConfig:
    block_time_ms: int = 2000
    gas_schedule: dict[TxKind, int] = field(
        default_factory=lambda: dict(DEFAULT_GAS_SCHEDULE)
    )
    initial_balances: dict[bytes, int] = field(default_factory=dict)
    tx_rate_cap: float | None = None  # confirmed tx/s; None = uncapped

    def __post_init__(self) -> None:
        if self.block_time_ms <= 0:
            raise ValueError("block_time_ms must be > 0")
        if any(g <= 0 for g in self.gas_schedule.values()):
            raise ValueError("gas values must be > 0")

    @property
    def per_block_cap(self) -> int | None:
        if self.tx_rate_cap is None:
            return None
        return max(1, int(self.tx_rate_cap * self.block_time_ms / 1000))


# --- events -----------------------------------------------------------------


@dataclass(frozen=True)
class EscrowLockedEvent:
    quote_id: bytes
    request_hash: bytes
    payer: bytes
    payee: bytes
    amount: int
    expiry_ms: int
    block_number: int

    TYPE = "EscrowLocked"

    def to_dict(self) -> dict:
        return {
            "type": self.TYPE,
            "quoteId": self.quote_id.hex(),
            "requestHash": self.request_hash.hex(),
            "payer": self.payer.hex(),
            "payee": self.payee.hex(),
            "amount": self.amount,
            "expiryMs": self.expiry_ms,
            "blockNumber": self.block_number,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EscrowLockedEvent":
        return cls(
            quote_id=bytes.fromhex(d["quoteId"]),
            request_hash=bytes.fromhex(d["requestHash"]),
            payer=bytes.fromhex(d["payer"]),
            payee=bytes.fromhex(d["payee"]),
            amount=d["amount"],
            expiry_ms=d["expiryMs"],
            block_number=d["blockNumber"],
        )


@dataclass(frozen=True)
class EscrowReleasedEvent:
    quote_id: bytes
    provenance_hash: bytes

    TYPE = "EscrowReleased"

    def to_dict(self) -> dict:
        return {
            "type": self.TYPE,
            "quoteId": self.quote_id.hex(),
            "provenanceHash": self.provenance_hash.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EscrowReleasedEvent":
        return cls(bytes.fromhex(d["quoteId"]), bytes.fromhex(d["provenanceHash"]))


@dataclass(frozen=True)
class EscrowRefundedEvent:
    quote_id: bytes

    TYPE = "EscrowRefunded"

    def to_dict(self) -> dict:
        return {"type": self.TYPE, "quoteId": self.quote_id.hex()}

    @classmethod
    def from_dict(cls, d: dict) -> "EscrowRefundedEvent":
        return cls(bytes.fromhex(d["quoteId"]))


@dataclass(frozen=True)
class IdentityRegisteredEvent:
    agent: bytes

    TYPE = "IdentityRegistered"

    def to_dict(self) -> dict:
        return {"type": self.TYPE, "agent": self.agent.hex()}

    @classmethod
    def from_dict(cls, d: dict) -> "IdentityRegisteredEvent":
        return cls(bytes.fromhex(d["agent"]))


@dataclass(frozen=True)
class OrderAnchoredEvent:
    anchor_hash: bytes

    TYPE = "OrderAnchored"

    def to_dict(self) -> dict:
        return {"type": self.TYPE, "anchorHash": self.anchor_hash.hex()}

    @classmethod
    def from_dict(cls, d: dict) -> "OrderAnchoredEvent":
        return cls(bytes.fromhex(d["anchorHash"]))


@dataclass(frozen=True)
class DeliveryAnchoredEvent:
    anchor_hash: bytes

    TYPE = "DeliveryAnchored"

    def to_dict(self) -> dict:
        return {"type": self.TYPE, "anchorHash": self.anchor_hash.hex()}

    @classmethod
    def from_dict(cls, d: dict) -> "DeliveryAnchoredEvent":
        return cls(bytes.fromhex(d["anchorHash"]))


_EVENT_TYPES = {
    cls.TYPE: cls
    for cls in (
        EscrowLockedEvent,
        EscrowReleasedEvent,
        EscrowRefundedEvent,
        IdentityRegisteredEvent,
        OrderAnchoredEvent,
        DeliveryAnchoredEvent,
    )
}


def decode_event(d: dict):
    """Typed event record from its encoded dict form (round-trips)."""
    return _EVENT_TYPES[d["type"]].from_dict(d)


# --- transactions -----------------------------------------------------------


@dataclass(frozen=True)
class Transaction:
    kind: TxKind
    sender: bytes
    tx_nonce: int
    body: dict
    tx_hash: bytes

    @classmethod
    def build(cls, kind: TxKind, sender: bytes, tx_nonce: int, body: dict) -> "Transaction":
        digest = sha256(
            canonicalize(
                {
                    "kind": kind.value,
                    "sender": sender.hex(),
                    "txNonce": tx_nonce,
                    "body": body,
                }
            )
        )
        return cls(kind, sender, tx_nonce, body, digest)


@dataclass(frozen=True)
class TxReceipt:
    tx_hash: bytes
    block_number: int
    gas_used: int
    events: tuple
    status: str  # "success" | "revert"
    revert_reason: str | None = None
    kind: TxKind = TxKind.REGISTER_IDENTITY

    @property
    def success(self) -> bool:
        return self.status == "success"


@dataclass(frozen=True)
class TxHandle:
    tx_hash: bytes
    inclusion_ms: int
    block_number: int


@dataclass
class EscrowEntry:
    quote_id: bytes
    request_hash: bytes
    payer: bytes
    payee: bytes
    amount: int
    expiry_ms: int
    status: EscrowStatus


class LedgerError(Exception):
    pass


class Ledger:
    """Single-writer ledger state machine advanced by explicit clock ticks."""

    def __init__(self, config: LedgerConfig):
        self.config = config
        self.balances: dict[bytes, int] = dict(config.initial_balances)
        self.initial_supply = sum(config.initial_balances.values())
        self.registered: set[bytes] = set()
        self.escrows: dict[bytes, EscrowEntry] = {}
        self.receipts: dict[bytes, TxReceipt] = {}
        self.lock_events: dict[bytes, EscrowLockedEvent] = {}  # tx_hash -> event
        self.event_log: list[tuple[bytes, int, dict]] = []  # (tx_hash, block, event dict)
        self._pending: list[tuple[int, int, Transaction]] = []  # (inclusion, seq, tx)
        self._block_fill: dict[int, int] = {}
        self._nonces: dict[bytes, int] = {}
        self._seq = 0
        self._applied_through_ms = 0

    # -- identity bootstrap (simulation setup; no tx, no gas) --

    def bootstrap_register(self, address: bytes) -> None:
        self.registered.add(address)

    def credit(self, address: bytes, amount: int) -> None:
        self.balances[address] = self.balances.get(address, 0) + amount
        self.initial_supply += amount

    # -- submission / block model --

    def next_tx_nonce(self, sender: bytes) -> int:
        n = self._nonces.get(sender, 0) + 1
        self._nonces[sender] = n
        return n

    def _assign_block(self, now_ms: int) -> int:
        bt = self.config.block_time_ms
        block = now_ms // bt + 1  # first block strictly after now_ms
        cap = self.config.per_block_cap
        if cap is not None:
            while self._block_fill.get(block, 0) >= cap:
                block += 1
        self._block_fill[block] = self._block_fill.get(block, 0) + 1
        return block

    def submit(self, tx: Transaction, now_ms: int) -> TxHandle:
        """Queue a transaction; returns its (deterministic) inclusion slot."""
        self.advance_to(now_ms)
        block = self._assign_block(now_ms)
        inclusion = block * self.config.block_time_ms
        self._seq += 1
        self._pending.append((inclusion, self._seq, tx))
        return TxHandle(tx_hash=tx.tx_hash, inclusion_ms=inclusion, block_number=block)

    def advance_to(self, now_ms: int) -> None:
        """Apply every pending transaction included at or before ``now_ms``."""
        if now_ms < self._applied_through_ms:
            return
        self._applied_through_ms = now_ms
        due = [item for item in self._pending if item[0] <= now_ms]
        if not due:
            return
        self._pending = [item for item in self._pending if item[0] > now_ms]
        for inclusion, _seq, tx in sorted(due):
            self._apply(tx, inclusion)

    def _apply(self, tx: Transaction, inclusion_ms: int) -> None:
        block = inclusion_ms // self.config.block_time_ms
        gas = self.config.gas_schedule[tx.kind]
        try:
            events = self._execute(tx, inclusion_ms, block)
            receipt = TxReceipt(tx.tx_hash, block, gas, tuple(events), "success", None, tx.kind)
        except LedgerError as err:
            receipt = TxReceipt(tx.tx_hash, block, gas, (), "revert", str(err), tx.kind)
        self.receipts[tx.tx_hash] = receipt
        for event in receipt.events:
            self.event_log.append((tx.tx_hash, block, event.to_dict()))
            if isinstance(event, EscrowLockedEvent):
                self.lock_events[tx.tx_hash] = event

    def _execute(self, tx: Transaction, now_ms: int, block: int) -> list:
        kind, body, sender = tx.kind, tx.body, tx.sender
        if kind != TxKind.REGISTER_IDENTITY and sender not in self.registered:
            raise LedgerError("NotRegistered")
        if kind == TxKind.REGISTER_IDENTITY:
            agent = bytes.fromhex(body["agent"])
            if agent in self.registered:
                raise LedgerError("AlreadyRegistered")
            self.registered.add(agent)
            return [IdentityRegisteredEvent(agent)]
        if kind == TxKind.ESCROW_LOCK:
            quote_id = bytes.fromhex(body["quoteId"])
            amount = body["amount"]
            expiry_ms = body["expiryMs"]
            if quote_id in self.escrows:
                raise LedgerError("DuplicateQuoteId")
            if amount <= 0:
                raise LedgerError("NonPositiveAmount")
            if now_ms >= expiry_ms:
                raise LedgerError("QuoteExpired")
            if self.balances.get(sender, 0) < amount:
                raise LedgerError("InsufficientBalance")
            entry = EscrowEntry(
                quote_id=quote_id,
                request_hash=bytes.fromhex(body["requestHash"]),
                payer=sender,
                payee=bytes.fromhex(body["payee"]),
                amount=amount,
                expiry_ms=expiry_ms,
                status=EscrowStatus.LOCKED,
            )
            self.balances[sender] -= amount
            self.escrows[quote_id] = entry
            return [
                EscrowLockedEvent(
                    quote_id=quote_id,
                    request_hash=entry.request_hash,
                    payer=entry.payer,
                    payee=entry.payee,
                    amount=amount,
                    expiry_ms=expiry_ms,
                    block_number=block,
                )
            ]
        if kind == TxKind.ESCROW_RELEASE:
            quote_id = bytes.fromhex(body["quoteId"])
            provenance_hash = bytes.fromhex(body["provenanceHash"])
            entry = self.escrows.get(quote_id)
            if entry is None or entry.status != EscrowStatus.LOCKED:
                raise LedgerError("NotLocked")
            if sender != entry.payee:
                raise LedgerError("NotPayee")
            if provenance_hash == bytes(32):
                raise LedgerError("ZeroEvidence")
            entry.status = EscrowStatus.RELEASED
            self.balances[entry.payee] = self.balances.get(entry.payee, 0) + entry.amount
            return [EscrowReleasedEvent(quote_id, provenance_hash)]
        if kind == TxKind.ESCROW_REFUND:
            quote_id = bytes.fromhex(body["quoteId"])
            entry = self.escrows.get(quote_id)
            if entry is None or entry.status != EscrowStatus.LOCKED:
                raise LedgerError("NotLocked")
            if sender != entry.payer:
                raise LedgerError("NotPayer")
            if now_ms < entry.expiry_ms:
                raise LedgerError("NotExpired")
            entry.status = EscrowStatus.REFUNDED
            self.balances[entry.payer] = self.balances.get(entry.payer, 0) + entry.amount
            return [EscrowRefundedEvent(quote_id)]
        if kind == TxKind.ANCHOR_ORDER:
            return [OrderAnchoredEvent(bytes.fromhex(body["anchorHash"]))]
        if kind == TxKind.ANCHOR_DELIVERY:
            return [DeliveryAnchoredEvent(bytes.fromhex(body["anchorHash"]))]
        raise LedgerError(f"UnknownKind:{kind}")

    # -- transaction builders --

    def build_register(self, identity: AgentIdentity) -> Transaction:
        return Transaction.build(
            TxKind.REGISTER_IDENTITY,
            identity.address,
            self.next_tx_nonce(identity.address),
            {"agent": identity.address.hex()},
        )

    def build_lock(
        self,
        payer: AgentIdentity,
        quote_id: bytes,
        request_hash: bytes,
        payee: bytes,
        amount: int,
        expiry_ms: int,
    ) -> Transaction:
        return Transaction.build(
            TxKind.ESCROW_LOCK,
            payer.address,
            self.next_tx_nonce(payer.address),
            {
                "quoteId": quote_id.hex(),
                "requestHash": request_hash.hex(),
                "payee": payee.hex(),
                "amount": amount,
                "expiryMs": expiry_ms,
            },
        )

    def build_release(
        self, payee: AgentIdentity, quote_id: bytes, provenance_hash: bytes
    ) -> Transaction:
        return Transaction.build(
            TxKind.ESCROW_RELEASE,
            payee.address,
            self.next_tx_nonce(payee.address),
            {"quoteId": quote_id.hex(), "provenanceHash": provenance_hash.hex()},
        )

    def build_refund(self, payer: AgentIdentity, quote_id: bytes) -> Transaction:
        return Transaction.build(
            TxKind.ESCROW_REFUND,
            payer.address,
            self.next_tx_nonce(payer.address),
            {"quoteId": quote_id.hex()},
        )

    def build_anchor(self, kind: TxKind, sender: AgentIdentity, anchor_hash: bytes) -> Transaction:
        return Transaction.build(
            kind,
            sender.address,
            self.next_tx_nonce(sender.address),
            {"anchorHash": anchor_hash.hex()},
        )

    def _run(self, tx: Transaction, now_ms: int) -> TxReceipt:
        """Submit and advance past inclusion; for direct (non-simulated) use."""
        handle = self.submit(tx, now_ms)
        self.advance_to(handle.inclusion_ms)
        return self.receipts[tx.tx_hash]

    def register_identity(self, identity: AgentIdentity, now_ms: int) -> TxReceipt:
        return self._run(self.build_register(identity), now_ms)

    def lock_escrow(
        self,
        payer: AgentIdentity,
        quote_id: bytes,
        request_hash: bytes,
        payee: bytes,
        amount: int,
        expiry_ms: int,
        now_ms: int,
    ) -> TxReceipt:
        tx = self.build_lock(payer, quote_id, request_hash, payee, amount, expiry_ms)
        return self._run(tx, now_ms)

    def release_escrow(
        self, payee: AgentIdentity, quote_id: bytes, provenance_hash: bytes, now_ms: int
    ) -> TxReceipt:
        return self._run(self.build_release(payee, quote_id, provenance_hash), now_ms)

    def refund_escrow(self, payer: AgentIdentity, quote_id: bytes, now_ms: int) -> TxReceipt:
        return self._run(self.build_refund(payer, quote_id), now_ms)

    # -- queries --

    def get_receipt(self, tx_hash: bytes) -> TxReceipt | None:
        return self.receipts.get(tx_hash)

    def get_lock_event(self, tx_hash: bytes) -> EscrowLockedEvent | None:
        return self.lock_events.get(tx_hash)

    def balance_of(self, address: bytes) -> int:
        return self.balances.get(address, 0)

    def locked_total(self) -> int:
        return sum(
            e.amount for e in self.escrows.values() if e.status == EscrowStatus.LOCKED
        )

    def conserved(self) -> bool:
        return sum(self.balances.values()) + self.locked_total() == self.initial_supply

    def export_log(self) -> list[dict]:
        """Receipt + event records for offline audit (line-delimited JSON)."""
        records: list[dict] = []
        for receipt in self.receipts.values():
            records.append(
                {
                    "record": "tx",
                    "txHash": receipt.tx_hash.hex(),
                    "blockNumber": receipt.block_number,
                    "gasUsed": receipt.gas_used,
                    "status": receipt.status,
                    "kind": receipt.kind.value,
                    "revertReason": receipt.revert_reason,
                }
            )
        for tx_hash, block, event in self.event_log:
            records.append(
                {
                    "record": "event",
                    "txHash": tx_hash.hex(),
                    "blockNumber": block,
                    "event": event,
                }
            )
        return records


def gas_total(receipts: Iterable[TxReceipt]) -> int:
    """Sum of gas used over a set of receipts."""
    return sum(r.gas_used for r in receipts)
