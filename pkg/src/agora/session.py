"""User/Service agent behavior and the pay-per-request session engine.

A session walks discovery -> quote -> pay -> verify-receipt -> execute ->
deliver -> settle as a single sequential process; many sessions interleave
through the shared bus/ledger/store when run under the event scheduler.
Two settlement modes exist: the default keeps negotiation and delivery
off-chain (escrow lock + release only), while the anchored baseline adds
an order anchor before the lock and a delivery anchor before the release.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from random import Random
from typing import Any

from . import crypto
from .canon import canonicalize
from .capability import (
    CapabilityManifest,
    OutputType,
    Pricing,
    PricingUnit,
    Registry,
    ServiceRequest,
    validate_request,
)
from .envelope import Inbox, MessageBus, MessageEnvelope
from .ledger import Ledger, TxKind, TxReceipt
from .provenance import (
    ExecutionLog,
    LogEntry,
    ProvenanceArtifact,
    build_provenance,
    provenance_hash,
    verify_provenance,
)
from .settlement import (
    PAYMENT_CHALLENGE_PAYLOAD_TYPE,
    ConsumedSet,
    PaymentChallenge,
    Quote,
    Receipt,
    RejectReason,
    compute_request_hash,
    issue_quote,
    quote_id,
    receipt_from_lock,
    verify_receipt,
)
from .sim import Scheduler
from .store import Cid, ContentStore, cid_of

__all__ = [
    "Mode",
    "SessionState",
    "WorkloadKind",
    "WorkloadSpec",
    "PhaseTimings",
    "SessionTranscript",
    "AgentEndpoint",
    "UserAgent",
    "ServiceAgent",
    "World",
    "session_process",
    "run_session",
    "execute_workload",
    "workload_request_params",
    "default_manifest",
]

DEFAULT_QUOTE_TTL_MS = 60_000
DEFAULT_UA_FUNDING = 10_000_000_000  # 10,000.000000 tokens


class Mode(str, Enum):
    AGENT_OSI = "agentosi"
    WEB3_BASELINE = "web3-baseline"


class SessionState(str, Enum):
    DISCOVERY = "Discovery"
    QUOTED = "Quoted"
    PAYING = "Paying"
    VERIFYING_RECEIPT = "VerifyingReceipt"
    EXECUTING = "Executing"
    DELIVERING = "Delivering"
    SETTLED = "Settled"
    FAILED = "Failed"


class WorkloadKind(str, Enum):
    LIGHT = "light"
    PIPELINE = "pipeline"
    GENAI = "genai"


_WORKLOAD_DEFAULTS: dict[WorkloadKind, dict] = {
    WorkloadKind.LIGHT: {"exec_ms": 0},
    WorkloadKind.PIPELINE: {"steps": 5, "step_exec_ms": 100, "step_output_bytes": 65_536},
    WorkloadKind.GENAI: {"exec_ms": 4122, "output_bytes": 8 * 1024 * 1024},
}


@dataclass(frozen=True)
class WorkloadSpec:
    kind: WorkloadKind
    params: dict = field(default_factory=dict)

    @classmethod
    def create(cls, kind: WorkloadKind | str, overrides: dict | None = None) -> "WorkloadSpec":
        kind = WorkloadKind(kind)
        params = dict(_WORKLOAD_DEFAULTS[kind])
        params.update(overrides or {})
        if kind == WorkloadKind.PIPELINE and params["steps"] < 1:
            raise ValueError("pipeline needs steps >= 1")
        if params.get("exec_ms", 0) < 0:
            raise ValueError("exec_ms must be >= 0")
        return cls(kind, params)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "params": self.params}

    @property
    def service_id(self) -> str:
        return f"svc-{self.kind.value}"


@dataclass
class PhaseTimings:
    messaging_ms: int = 0
    confirmation_serial_ms: int = 0
    confirmation_overlapped_ms: int = 0
    execution_delivery_ms: int = 0
    total_ms: int = 0

    def to_dict(self, attribution: str = "serial") -> dict:
        confirmation = (
            self.confirmation_serial_ms
            if attribution == "serial"
            else self.confirmation_overlapped_ms
        )
        return {
            "messagingMs": self.messaging_ms,
            "confirmationMs": confirmation,
            "confirmationSerialMs": self.confirmation_serial_ms,
            "confirmationOverlappedMs": self.confirmation_overlapped_ms,
            "executionDeliveryMs": self.execution_delivery_ms,
            "totalMs": self.total_ms,
        }


@dataclass
class SessionTranscript:
    session_id: str
    mode: Mode
    workload: WorkloadSpec
    timings: PhaseTimings
    gas_receipts: list[TxReceipt]
    final_state: SessionState
    failure_reason: str | None = None
    start_ms: int = 0
    end_ms: int = 0
    request: dict | None = None
    quote: dict | None = None
    receipt: dict | None = None
    provenance: dict | None = None
    provenance_hash_hex: str | None = None
    output_cid: str | None = None
    inline_result: dict | None = None
    attribution: str = "serial"

    @property
    def settled(self) -> bool:
        return self.final_state == SessionState.SETTLED

    def gas_total(self) -> int:
        return sum(r.gas_used for r in self.gas_receipts)

    def to_dict(self) -> dict:
        return {
            "sessionId": self.session_id,
            "mode": self.mode.value,
            "workload": self.workload.to_dict(),
            "phaseTimings": self.timings.to_dict(self.attribution),
            "gasReceipts": [
                {
                    "kind": r.kind.value,
                    "txHash": r.tx_hash.hex(),
                    "blockNumber": r.block_number,
                    "gasUsed": r.gas_used,
                    "status": r.status,
                }
                for r in self.gas_receipts
            ],
            "artifacts": {
                "request": self.request,
                "quote": self.quote,
                "receipt": self.receipt,
                "provenance": self.provenance,
                "provenanceHash": self.provenance_hash_hex,
                "outputCid": self.output_cid,
                "inlineResult": self.inline_result,
            },
            "finalState": self.final_state.value,
            "failureReason": self.failure_reason,
            "startMs": self.start_ms,
            "endMs": self.end_ms,
        }


class AgentEndpoint:
    """Identity plus inbox plumbing: envelope nonces and per-thread routing."""

    def __init__(self, identity: crypto.AgentIdentity, bus: MessageBus):
        self.identity = identity
        self.bus = bus
        self.inbox: Inbox = bus.register(identity.address, identity.public_key)
        self._nonces: dict[bytes, int] = {}
        self._buffers: dict[tuple[bytes, str], list[MessageEnvelope]] = {}

    @property
    def address(self) -> bytes:
        return self.identity.address

    def envelope(
        self, receiver: bytes, thread_id: bytes, payload_type: str, payload_obj: Any, now_ms: int
    ) -> MessageEnvelope:
        nonce = self._nonces.get(thread_id, 0) + 1
        self._nonces[thread_id] = nonce
        return MessageEnvelope.build(
            self.identity, receiver, thread_id, nonce, now_ms, payload_type, payload_obj
        )

    def take(self, thread_id: bytes, payload_type: str, now_ms: int) -> MessageEnvelope | None:
        """Next buffered message of the given type on the thread, polling first."""
        for env in self.bus.receive(self.inbox, now_ms):
            self._buffers.setdefault((env.thread_id, env.payload_type), []).append(env)
        queue = self._buffers.get((thread_id, payload_type))
        if queue:
            return queue.pop(0)
        return None


class UserAgent(AgentEndpoint):
    def __init__(self, identity: crypto.AgentIdentity, bus: MessageBus, rng: Random):
        super().__init__(identity, bus)
        self.rng = rng


class ServiceAgent(AgentEndpoint):
    def __init__(
        self,
        identity: crypto.AgentIdentity,
        bus: MessageBus,
        rng: Random,
        manifest: CapabilityManifest,
        quote_ttl_ms: int = DEFAULT_QUOTE_TTL_MS,
    ):
        super().__init__(identity, bus)
        self.rng = rng
        self.manifest = manifest
        self.quote_ttl_ms = quote_ttl_ms
        self.consumed = ConsumedSet()
        self.pending_quotes: dict[bytes, Quote] = {}

    def issue_challenge(self, request: ServiceRequest, now_ms: int) -> PaymentChallenge:
        challenge = issue_quote(
            self.identity, request, self.manifest, now_ms, self.quote_ttl_ms, self.rng
        )
        self.pending_quotes[quote_id(challenge.quote)] = challenge.quote
        return challenge

    def handle_receipt(
        self,
        ledger: Ledger,
        quote: Quote,
        receipt: Receipt,
        request_hash: bytes,
        expected_payer: bytes,
    ) -> tuple[str, Any]:
        """Single check-and-mark step for an incoming payment receipt.

        Returns ("cached", delivery) for a byte-identical retry,
        ("accept", quote_id) on a fresh accepted receipt (caller must mark
        the consumed set once the delivery exists), or ("reject", reason).
        """
        qid = quote_id(quote)
        # A quote this agent issued itself needs no signature re-check.
        if self.pending_quotes.get(qid) != quote and not quote.verify_signature(
            self.identity.public_key
        ):
            return "reject", "InvalidQuoteSignature"
        if quote.request_hash != request_hash:
            return "reject", RejectReason.BINDING_MISMATCH.value
        prior, cached = self.consumed.lookup(qid, request_hash)
        if prior is not None:
            if prior.accepted:
                # Idempotent retry: only the original payer may collect the
                # cached delivery; anyone else replaying a consumed receipt
                # is rejected.
                verdict = verify_receipt(ledger, receipt, quote, expected_payer)
                if verdict.accepted:
                    return "cached", cached
                return "reject", RejectReason.ALREADY_CONSUMED.value
            return "reject", prior.reason.value
        verdict = verify_receipt(ledger, receipt, quote, expected_payer)
        if not verdict.accepted:
            return "reject", verdict.reason.value
        return "accept", qid


_SCHEMAS: dict[WorkloadKind, dict] = {
    WorkloadKind.LIGHT: {
        "type": "object",
        "required": ["prompt"],
        "properties": {"prompt": {"type": "string", "maxLength": 2000}},
    },
    WorkloadKind.PIPELINE: {
        "type": "object",
        "required": ["prompt", "steps"],
        "properties": {
            "prompt": {"type": "string", "maxLength": 2000},
            "steps": {"type": "integer", "minimum": 1, "maximum": 150},
        },
    },
    WorkloadKind.GENAI: {
        "type": "object",
        "required": ["prompt", "width", "height", "steps"],
        "properties": {
            "prompt": {"type": "string", "maxLength": 2000},
            "width": {"type": "integer", "minimum": 64, "maximum": 4096},
            "height": {"type": "integer", "minimum": 64, "maximum": 4096},
            "steps": {"type": "integer", "minimum": 1, "maximum": 150},
        },
    },
}


def default_manifest(identity: crypto.AgentIdentity, workload: WorkloadSpec) -> CapabilityManifest:
    if workload.kind == WorkloadKind.PIPELINE:
        pricing = Pricing(PricingUnit.PER_STEP, 10_000)  # 0.01/step
        output_type = OutputType.CONTENT_REF
    elif workload.kind == WorkloadKind.GENAI:
        pricing = Pricing(PricingUnit.PER_REQUEST, 250_000)  # 0.25
        output_type = OutputType.CONTENT_REF
    else:
        pricing = Pricing(PricingUnit.PER_REQUEST, 250_000)
        output_type = OutputType.INLINE_JSON
    return CapabilityManifest.create(
        identity, workload.service_id, _SCHEMAS[workload.kind], output_type, pricing
    )


def workload_request_params(workload: WorkloadSpec) -> dict:
    if workload.kind == WorkloadKind.LIGHT:
        return {"prompt": "ping"}
    if workload.kind == WorkloadKind.PIPELINE:
        return {"prompt": "render pipeline artifact", "steps": workload.params["steps"]}
    return {"prompt": "cyberpunk cat", "width": 1024, "height": 1024, "steps": 30}


def _pseudo_content(seed: bytes, declared_size: int) -> bytes:
    """Deterministic stand-in bytes; small on purpose (the latency model
    charges for the declared size, not the stand-in length)."""
    rng = Random(int.from_bytes(seed, "big"))
    body = rng.randbytes(min(declared_size, 4096))
    header = declared_size.to_bytes(8, "big")
    return header + body


def execute_workload(
    workload: WorkloadSpec,
    request: ServiceRequest,
    request_hash: bytes,
    qid: bytes,
    store: ContentStore,
    now_ms: int,
) -> tuple[ExecutionLog, str, bytes, Cid | None, int]:
    """Run the simulated workload; returns (log, output_kind, output_bytes,
    cid or None, end time). Deterministic given the request."""
    t = now_ms
    entries: list[LogEntry] = []
    if workload.kind == WorkloadKind.LIGHT:
        t += workload.params.get("exec_ms", 0)
        result = {"ok": True, "serviceId": request.service_id, "requestHash": request_hash.hex()}
        output = canonicalize(result)
        entries.append(LogEntry(0, "inline_result", request_hash, crypto.sha256(output), t))
        log = ExecutionLog(request_hash, qid, tuple(entries))
        return log, "inline", output, None, t
    if workload.kind == WorkloadKind.PIPELINE:
        cid: Cid | None = None
        output = b""
        for i in range(workload.params["steps"]):
            t += workload.params["step_exec_ms"]
            step_input = crypto.sha256(
                canonicalize({"step": i, "params": request.params, "requestHash": request_hash.hex()})
            )
            output = _pseudo_content(step_input, workload.params["step_output_bytes"])
            cid, t = store.put(output, t, size_hint=workload.params["step_output_bytes"])
            entries.append(LogEntry(i, f"pipeline_step_{i}", step_input, cid.digest, t))
        log = ExecutionLog(request_hash, qid, tuple(entries))
        return log, "cid", output, cid, t
    # GenAI: one long generation delay, one upload.
    t += workload.params["exec_ms"]
    output = _pseudo_content(request_hash, workload.params["output_bytes"])
    cid, t = store.put(output, t, size_hint=workload.params["output_bytes"])
    entries.append(LogEntry(0, "generate", request_hash, cid.digest, t))
    log = ExecutionLog(request_hash, qid, tuple(entries))
    return log, "cid", output, cid, t


@dataclass
class World:
    """One simulation universe: shared substrates plus the agent roster."""

    seed: int
    bus: MessageBus
    ledger: Ledger
    store: ContentStore
    registry: Registry
    rng: Random

    @classmethod
    def create(
        cls,
        seed: int,
        ledger_config=None,
        bus_latency=None,
        store_kwargs: dict | None = None,
        drop_probability: float = 0.0,
    ) -> "World":
        from .ledger import LedgerConfig

        master = Random(seed)
        bus_rng = Random(master.getrandbits(64))
        world_rng = Random(master.getrandbits(64))
        bus = MessageBus(bus_rng, latency=bus_latency, drop_probability=drop_probability)
        ledger = Ledger(ledger_config or LedgerConfig())
        store = ContentStore(**(store_kwargs or {}))
        return cls(seed, bus, ledger, store, Registry(), world_rng)

    def new_user_agent(
        self, label: str, funding: int = DEFAULT_UA_FUNDING, bootstrap: bool = True
    ) -> UserAgent:
        identity = crypto.AgentIdentity.from_seed(f"{self.seed}:ua:{label}".encode())
        ua = UserAgent(identity, self.bus, Random(self.rng.getrandbits(64)))
        if bootstrap:
            self.ledger.bootstrap_register(identity.address)
        if funding:
            self.ledger.credit(identity.address, funding)
        return ua

    def new_service_agent(
        self,
        label: str,
        workload: WorkloadSpec,
        quote_ttl_ms: int = DEFAULT_QUOTE_TTL_MS,
        bootstrap: bool = True,
    ) -> ServiceAgent:
        identity = crypto.AgentIdentity.from_seed(f"{self.seed}:sa:{label}".encode())
        manifest = default_manifest(identity, workload)
        sa = ServiceAgent(
            identity, self.bus, Random(self.rng.getrandbits(64)), manifest, quote_ttl_ms
        )
        if bootstrap:
            self.ledger.bootstrap_register(identity.address)
        self.registry.advertise(manifest)
        return sa


def session_process(
    world: World,
    ua: UserAgent,
    sa: ServiceAgent,
    workload: WorkloadSpec,
    mode: Mode,
    sink: list[SessionTranscript],
    attribution: str = "serial",
):
    """Generator process driving one full session; appends its transcript."""
    bus, ledger, store = world.bus, world.ledger, world.store
    timings = PhaseTimings()
    gas: list[TxReceipt] = []
    t = yield
    t0 = t
    transcript = SessionTranscript(
        session_id="",
        mode=mode,
        workload=workload,
        timings=timings,
        gas_receipts=gas,
        final_state=SessionState.DISCOVERY,
        start_ms=t0,
        attribution=attribution,
    )
    sink.append(transcript)

    def fail(reason: str, end_ms: int) -> None:
        transcript.final_state = SessionState.FAILED
        transcript.failure_reason = reason
        transcript.end_ms = end_ms
        timings.total_ms = end_ms - t0

    # Phase 1: discovery and capability binding.
    manifests = world.registry.discover(workload.service_id)
    if not manifests:
        fail("NoService", t)
        return
    manifest = manifests[0]
    request = ServiceRequest.create(
        workload.service_id, workload_request_params(workload), ua.address, ua.rng
    )
    if not validate_request(manifest, request).ok:
        fail("SchemaViolation", t)
        return
    request_hash = compute_request_hash(request)
    transcript.session_id = request_hash.hex()[:16]
    transcript.request = request.to_dict()
    thread = bus.open_thread(ua.address, sa.address)

    # Phase 2: request -> 402 challenge -> pay -> receipt.
    handle = bus.send(
        ua.envelope(sa.address, thread, "service_request", request.to_dict(), t), t
    )
    timings.messaging_ms += handle.latency_ms
    t = yield handle.deliver_at_ms

    env = sa.take(thread, "service_request", t)
    if env is None:
        fail("RequestLost", t)
        return
    sa_request = ServiceRequest.from_dict(
        json.loads(env.payload.decode("utf-8"))
    )
    if not validate_request(sa.manifest, sa_request).ok:
        fail("SchemaViolation", t)
        return
    challenge = sa.issue_challenge(sa_request, t)
    handle = bus.send(
        sa.envelope(
            ua.address, thread, PAYMENT_CHALLENGE_PAYLOAD_TYPE, challenge.to_dict(), t
        ),
        t,
    )
    timings.messaging_ms += handle.latency_ms
    t = yield handle.deliver_at_ms
    transcript.final_state = SessionState.QUOTED

    env = ua.take(thread, PAYMENT_CHALLENGE_PAYLOAD_TYPE, t)
    if env is None:
        fail("ChallengeLost", t)
        return
    quote = PaymentChallenge.from_dict(
        json.loads(env.payload.decode("utf-8"))
    ).quote
    transcript.quote = quote.to_dict()
    if not quote.verify_signature(manifest.payee_public_key):
        fail("InvalidQuoteSignature", t)
        return
    if quote.request_hash != request_hash:
        fail(RejectReason.BINDING_MISMATCH.value, t)
        return
    if t >= quote.expiry_ms:
        fail(RejectReason.QUOTE_EXPIRED.value, t)
        return
    if ledger.balance_of(ua.address) < quote.price:
        fail("InsufficientBalance", t)
        return
    transcript.final_state = SessionState.PAYING

    if mode == Mode.WEB3_BASELINE:
        anchor = ledger.build_anchor(TxKind.ANCHOR_ORDER, ua.identity, request_hash)
        h = ledger.submit(anchor, t)
        timings.confirmation_serial_ms += h.inclusion_ms - t
        timings.confirmation_overlapped_ms += h.inclusion_ms - t
        t = yield h.inclusion_ms
        ledger.advance_to(t)
        gas.append(ledger.get_receipt(anchor.tx_hash))

    qid = quote_id(quote)
    lock_tx = ledger.build_lock(
        ua.identity, qid, quote.request_hash, quote.payee, quote.price, quote.expiry_ms
    )
    h = ledger.submit(lock_tx, t)
    timings.confirmation_serial_ms += h.inclusion_ms - t
    timings.confirmation_overlapped_ms += h.inclusion_ms - t
    t = yield h.inclusion_ms
    ledger.advance_to(t)
    lock_receipt = ledger.get_receipt(lock_tx.tx_hash)
    gas.append(lock_receipt)
    if not lock_receipt.success:
        fail(lock_receipt.revert_reason, t)
        return
    receipt = receipt_from_lock(ledger, lock_receipt)
    transcript.receipt = receipt.to_dict()
    transcript.final_state = SessionState.VERIFYING_RECEIPT

    handle = bus.send(
        ua.envelope(
            sa.address,
            thread,
            "payment_receipt",
            {"receipt": receipt.to_dict(), "quote": quote.to_dict()},
            t,
        ),
        t,
    )
    timings.messaging_ms += handle.latency_ms
    t = yield handle.deliver_at_ms

    # Phase 3: receipt verification, execution, provenance.
    env = sa.take(thread, "payment_receipt", t)
    if env is None:
        fail("ReceiptLost", t)
        return
    payload = json.loads(env.payload.decode("utf-8"))
    presented_quote = Quote.from_dict(payload["quote"])
    presented_receipt = Receipt.from_dict(payload["receipt"])
    sa_request_hash = compute_request_hash(sa_request)
    outcome, detail = sa.handle_receipt(
        ledger, presented_quote, presented_receipt, sa_request_hash, env.sender
    )
    if outcome == "reject":
        fail(detail, t)
        return
    transcript.final_state = SessionState.EXECUTING
    if outcome == "cached":
        delivery_payload = detail
        release_handle = None
        exec_end = t
    else:
        exec_start = t
        exec_log, output_kind, output_bytes, out_cid, exec_end = execute_workload(
            workload, sa_request, sa_request_hash, qid, store, t
        )
        timings.execution_delivery_ms += exec_end - exec_start
        t = exec_end
        content_cid = out_cid if out_cid is not None else cid_of(output_bytes)
        artifact = build_provenance(sa.identity, exec_log, presented_receipt, str(content_cid))
        transcript.provenance = artifact.to_dict()
        transcript.provenance_hash_hex = provenance_hash(artifact).hex()

        if mode == Mode.WEB3_BASELINE:
            anchor = ledger.build_anchor(
                TxKind.ANCHOR_DELIVERY, sa.identity, provenance_hash(artifact)
            )
            h = ledger.submit(anchor, t)
            timings.confirmation_serial_ms += h.inclusion_ms - t
            timings.confirmation_overlapped_ms += h.inclusion_ms - t
            t = yield h.inclusion_ms
            ledger.advance_to(t)
            gas.append(ledger.get_receipt(anchor.tx_hash))

        delivery_payload = {
            "provenance": artifact.to_dict(),
            "outputCid": str(content_cid) if output_kind == "cid" else None,
            "inlineResult": (
                json.loads(output_bytes.decode("utf-8"))
                if output_kind == "inline"
                else None
            ),
        }
        sa.consumed.mark(qid, sa_request_hash, delivery_payload)

    # Phase 4: delivery plus escrow release, in parallel.
    transcript.final_state = SessionState.DELIVERING
    handle = bus.send(sa.envelope(ua.address, thread, "delivery", delivery_payload, t), t)
    timings.messaging_ms += handle.latency_ms
    deliver_at = handle.deliver_at_ms

    if outcome == "accept":
        release_tx = ledger.build_release(
            sa.identity, qid, bytes.fromhex(transcript.provenance_hash_hex)
        )
        release_handle = ledger.submit(release_tx, t)
        timings.confirmation_serial_ms += release_handle.inclusion_ms - t
        timings.confirmation_overlapped_ms += max(
            0, release_handle.inclusion_ms - deliver_at
        )
    end = max(deliver_at, release_handle.inclusion_ms) if release_handle else deliver_at
    t = yield end
    ledger.advance_to(t)

    if release_handle is not None:
        release_receipt = ledger.get_receipt(release_handle.tx_hash)
        gas.append(release_receipt)
        if not release_receipt.success:
            fail(release_receipt.revert_reason, t)
            return

    # UA-side offline verification of the delivery.
    env = ua.take(thread, "delivery", t)
    if env is None:
        fail("DeliveryLost", t)
        return
    payload = json.loads(env.payload.decode("utf-8"))
    artifact = ProvenanceArtifact.from_dict(payload["provenance"])
    if payload.get("outputCid"):
        transcript.output_cid = payload["outputCid"]
        delivered = store.get(Cid.parse(payload["outputCid"]), t)
    else:
        transcript.inline_result = payload["inlineResult"]
        delivered = canonicalize(payload["inlineResult"])
        transcript.output_cid = str(cid_of(delivered))
    verdict = verify_provenance(artifact, quote, receipt, delivered, manifest.payee_public_key)
    if not verdict.accepted:
        fail(verdict.reason.value, t)
        return
    if transcript.provenance is None:
        transcript.provenance = artifact.to_dict()
        transcript.provenance_hash_hex = provenance_hash(artifact).hex()

    transcript.final_state = SessionState.SETTLED
    transcript.end_ms = t
    timings.total_ms = t - t0
    return


def run_session(
    world: World,
    ua: UserAgent,
    sa: ServiceAgent,
    workload: WorkloadSpec,
    mode: Mode,
    now_ms: int = 0,
    attribution: str = "serial",
) -> SessionTranscript:
    """Run one session to completion on a private scheduler."""
    sink: list[SessionTranscript] = []
    scheduler = Scheduler()
    scheduler.spawn(
        session_process(world, ua, sa, workload, mode, sink, attribution), now_ms
    )
    scheduler.run()
    return sink[0]
