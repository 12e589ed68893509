"""Asynchronous agent-to-agent messaging.

Signed envelopes travel through a single logical relay (`MessageBus`) into
durable per-agent inboxes. Delivery is delayed by a sampled per-message
latency, senders never block on receiver availability, and receivers
enforce signature validity plus per-(sender, thread) nonce monotonicity;
violations are dropped into an audit log rather than raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Any

from . import crypto
from .canon import canonicalize

__all__ = [
    "MessagingError",
    "InvalidSignature",
    "UnknownReceiver",
    "MessageEnvelope",
    "DeliveryHandle",
    "Inbox",
    "LatencyModel",
    "MessageBus",
]


class MessagingError(Exception):
    pass


class InvalidSignature(MessagingError):
    pass


class UnknownReceiver(MessagingError):
    pass


@dataclass(frozen=True)
class MessageEnvelope:
    """Signed, nonce-carrying unit of asynchronous delivery."""

    sender: bytes
    receiver: bytes
    thread_id: bytes
    nonce: int
    timestamp_ms: int
    payload_type: str
    payload: bytes
    signature: crypto.Signature

    def signing_bytes(self) -> bytes:
        return canonicalize(
            {
                "sender": self.sender.hex(),
                "receiver": self.receiver.hex(),
                "threadId": self.thread_id.hex(),
                "nonce": self.nonce,
                "timestampMs": self.timestamp_ms,
                "payloadType": self.payload_type,
                "payload": self.payload.hex(),
            }
        )

    @classmethod
    def build(
        cls,
        identity: crypto.AgentIdentity,
        receiver: bytes,
        thread_id: bytes,
        nonce: int,
        timestamp_ms: int,
        payload_type: str,
        payload_obj: Any,
    ) -> "MessageEnvelope":
        """Construct and sign an envelope whose payload is canonical JSON."""
        payload = canonicalize(payload_obj)
        unsigned = cls(
            sender=identity.address,
            receiver=receiver,
            thread_id=thread_id,
            nonce=nonce,
            timestamp_ms=timestamp_ms,
            payload_type=payload_type,
            payload=payload,
            signature=crypto.Signature(b"", identity.address),
        )
        sig = identity.sign(unsigned.signing_bytes())
        object.__setattr__(unsigned, "signature", sig)
        return unsigned


@dataclass(frozen=True)
class DeliveryHandle:
    deliver_at_ms: int
    latency_ms: int


@dataclass
class Inbox:
    """Durable inbox: messages stay queued until consumed."""

    owner: bytes
    _pending: list[tuple[int, int, MessageEnvelope]] = field(default_factory=list)
    seen_nonces: dict[tuple[bytes, bytes], int] = field(default_factory=dict)


@dataclass
class LatencyModel:
    """Uniform one-way latency in integer milliseconds."""

    min_ms: int = 5
    max_ms: int = 10

    def sample(self, rng: Random) -> int:
        return rng.randint(self.min_ms, self.max_ms)


class MessageBus:
    """Single logical relay with latency injection and loss injection.

    Sends are linearizable per receiver (simulation events are totally
    ordered); each inbox has exactly one consumer.
    """

    def __init__(
        self,
        rng: Random,
        latency: LatencyModel | None = None,
        drop_probability: float = 0.0,
    ):
        self._rng = rng
        self.latency = latency or LatencyModel()
        self.drop_probability = drop_probability
        self._inboxes: dict[bytes, Inbox] = {}
        self._pubkeys: dict[bytes, bytes] = {}
        self._seq = 0
        self.audit_log: list[dict] = []
        self.sent_log: list[int] = []  # send timestamps, for throughput metrics

    def register(self, address: bytes, public_key: bytes) -> Inbox:
        inbox = self._inboxes.get(address)
        if inbox is None:
            inbox = Inbox(owner=address)
            self._inboxes[address] = inbox
        self._pubkeys[address] = public_key
        return inbox

    def open_thread(self, initiator: bytes, responder: bytes) -> bytes:
        """Fresh 16-byte thread id from the bus RNG."""
        return self._rng.getrandbits(128).to_bytes(16, "big")

    def send(self, envelope: MessageEnvelope, now_ms: int) -> DeliveryHandle:
        pubkey = self._pubkeys.get(envelope.sender)
        if pubkey is None or not crypto.verify(
            pubkey, envelope.signing_bytes(), envelope.signature.bytes
        ):
            raise InvalidSignature("envelope signature invalid")
        object.__setattr__(envelope, "_sig_ok", True)
        inbox = self._inboxes.get(envelope.receiver)
        if inbox is None:
            raise UnknownReceiver(envelope.receiver.hex())
        latency = self.latency.sample(self._rng)
        self.sent_log.append(now_ms)
        if self.drop_probability and self._rng.random() < self.drop_probability:
            self.audit_log.append(
                {"kind": "dropped", "atMs": now_ms, "sender": envelope.sender.hex()}
            )
            return DeliveryHandle(deliver_at_ms=now_ms + latency, latency_ms=latency)
        self._seq += 1
        deliver_at = now_ms + latency
        inbox._pending.append((deliver_at, self._seq, envelope))
        return DeliveryHandle(deliver_at_ms=deliver_at, latency_ms=latency)

    def receive(self, inbox: Inbox, now_ms: int) -> list[MessageEnvelope]:
        """All envelopes due by ``now_ms``, in delivery order.

        Signature or nonce violations are dropped with an audit entry.
        """
        inbox._pending.sort(key=lambda item: (item[0], item[1]))
        due: list[MessageEnvelope] = []
        rest = []
        for deliver_at, seq, env in inbox._pending:
            if deliver_at <= now_ms:
                due.append(env)
            else:
                rest.append((deliver_at, seq, env))
        inbox._pending = rest

        accepted: list[MessageEnvelope] = []
        for env in due:
            pubkey = self._pubkeys.get(env.sender)
            # Envelopes already verified at send time are stamped; the relay
            # is in-process, so the bytes cannot have changed in transit.
            verified = getattr(env, "_sig_ok", False)
            if pubkey is None or not (
                verified
                or crypto.verify(pubkey, env.signing_bytes(), env.signature.bytes)
            ):
                self._audit(inbox, env, now_ms, "invalid_signature")
                continue
            key = (env.sender, env.thread_id)
            high_water = inbox.seen_nonces.get(key, 0)
            if env.nonce <= high_water:
                self._audit(inbox, env, now_ms, "nonce_replay")
                continue
            inbox.seen_nonces[key] = env.nonce
            accepted.append(env)
        return accepted

    def _audit(self, inbox: Inbox, env: MessageEnvelope, now_ms: int, reason: str) -> None:
        self.audit_log.append(
            {
                "kind": "rejected",
                "reason": reason,
                "atMs": now_ms,
                "owner": inbox.owner.hex(),
                "sender": env.sender.hex(),
                "threadId": env.thread_id.hex(),
                "nonce": env.nonce,
                "payloadType": env.payload_type,
            }
        )
