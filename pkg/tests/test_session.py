import json
from random import Random

import pytest

from agora.canon import canonicalize
from agora.crypto import sha256
from agora.envelope import LatencyModel
from agora.ledger import LedgerConfig, TxKind
from agora.provenance import ProvenanceArtifact, verify_provenance
from agora.session import (
    Mode,
    SessionState,
    World,
    WorkloadKind,
    WorkloadSpec,
    run_session,
    workload_request_params,
)
from agora.capability import ServiceRequest
from agora.settlement import Quote, Receipt, RejectReason, compute_request_hash, quote_id
from agora.store import Cid, cid_of


def make_world(seed=11, **kwargs):
    return World.create(seed, **kwargs)


def settled_session(world, workload_kind=WorkloadKind.LIGHT, mode=Mode.AGENT_OSI, label="a"):
    spec = WorkloadSpec.create(workload_kind)
    ua = world.new_user_agent(label)
    sa = world.new_service_agent(label, spec)
    transcript = run_session(world, ua, sa, spec, mode)
    return ua, sa, spec, transcript


@pytest.mark.parametrize("kind", list(WorkloadKind))
@pytest.mark.parametrize("mode", list(Mode))
def test_all_workloads_settle_in_both_modes(kind, mode):
    world = make_world()
    _, _, _, transcript = settled_session(world, kind, mode)
    assert transcript.final_state == SessionState.SETTLED
    expected_gas = 159_000 if mode == Mode.AGENT_OSI else 326_000
    assert transcript.gas_total() == expected_gas
    assert world.ledger.conserved()


def test_session_moves_exactly_the_quoted_amount():
    world = make_world()
    ua, sa, _, transcript = settled_session(world)
    price = transcript.quote["price"]
    assert price == 250_000
    assert world.ledger.balance_of(sa.address) == price
    assert world.ledger.balance_of(ua.address) == 10_000_000_000 - price


def test_light_delivers_inline_json():
    world = make_world()
    _, _, _, transcript = settled_session(world, WorkloadKind.LIGHT)
    assert transcript.inline_result["ok"] is True
    # The output CID binds the canonical inline bytes.
    assert transcript.output_cid == str(cid_of(canonicalize(transcript.inline_result)))


def test_genai_delivers_content_ref():
    world = make_world()
    _, _, _, transcript = settled_session(world, WorkloadKind.GENAI)
    assert transcript.inline_result is None
    delivered = world.store.get(Cid.parse(transcript.output_cid), transcript.end_ms)
    assert cid_of(delivered).digest == Cid.parse(transcript.output_cid).digest


def test_pipeline_price_scales_with_steps():
    world = make_world()
    _, _, _, transcript = settled_session(world, WorkloadKind.PIPELINE)
    assert transcript.quote["price"] == 10_000 * 5


def test_provenance_offline_verifiable_from_transcript():
    world = make_world()
    _, sa, _, transcript = settled_session(world, WorkloadKind.GENAI)
    artifact = ProvenanceArtifact.from_dict(transcript.provenance)
    quote = Quote.from_dict(transcript.quote)
    receipt = Receipt.from_dict(transcript.receipt)
    delivered = world.store.get(Cid.parse(transcript.output_cid), transcript.end_ms)
    verdict = verify_provenance(artifact, quote, receipt, delivered, sa.identity.public_key)
    assert verdict.accepted


def test_baseline_mode_adds_anchor_transactions():
    world = make_world()
    _, _, _, transcript = settled_session(world, mode=Mode.WEB3_BASELINE)
    kinds = [r.kind for r in transcript.gas_receipts]
    assert kinds == [
        TxKind.ANCHOR_ORDER,
        TxKind.ESCROW_LOCK,
        TxKind.ANCHOR_DELIVERY,
        TxKind.ESCROW_RELEASE,
    ]


def test_timing_attribution_modes():
    w1, w2 = make_world(5), make_world(5)
    *_, serial = settled_session(w1, WorkloadKind.GENAI)
    spec = WorkloadSpec.create(WorkloadKind.GENAI)
    ua = w2.new_user_agent("a")
    sa = w2.new_service_agent("a", spec)
    overlapped = run_session(w2, ua, sa, spec, Mode.AGENT_OSI, attribution="overlapped")
    ts, to = serial.timings, overlapped.timings
    assert (ts.messaging_ms, ts.total_ms) == (to.messaging_ms, to.total_ms)
    assert to.confirmation_overlapped_ms <= ts.confirmation_serial_ms
    assert serial.to_dict()["phaseTimings"]["confirmationMs"] == ts.confirmation_serial_ms
    assert overlapped.to_dict()["phaseTimings"]["confirmationMs"] == to.confirmation_overlapped_ms


def test_deterministic_transcripts_under_seed():
    t1 = settled_session(make_world(21), WorkloadKind.GENAI)[3].to_dict()
    t2 = settled_session(make_world(21), WorkloadKind.GENAI)[3].to_dict()
    t3 = settled_session(make_world(22), WorkloadKind.GENAI)[3].to_dict()
    assert json.dumps(t1, sort_keys=True) == json.dumps(t2, sort_keys=True)
    assert t1 != t3


def test_total_message_loss_fails_cleanly():
    world = make_world(drop_probability=1.0)
    _, _, _, transcript = settled_session(world)
    assert transcript.final_state == SessionState.FAILED
    assert transcript.failure_reason == "RequestLost"
    assert world.ledger.conserved()


# --- adversarial drivers ------------------------------------------------------


def completed_session(world):
    ua, sa, spec, transcript = settled_session(world)
    assert transcript.settled
    quote = Quote.from_dict(transcript.quote)
    receipt = Receipt.from_dict(transcript.receipt)
    request_hash = bytes.fromhex(transcript.quote["requestHash"])
    return ua, sa, quote, receipt, request_hash, transcript


def test_receipt_replay_across_sessions_already_consumed():
    world = make_world()
    ua, sa, quote, receipt, request_hash, _ = completed_session(world)
    attacker = world.new_user_agent("attacker")
    outcome, detail = sa.handle_receipt(
        world.ledger, quote, receipt, request_hash, attacker.address
    )
    assert (outcome, detail) == ("reject", RejectReason.ALREADY_CONSUMED.value)
    # Honest byte-identical retry by the original payer gets the cache back.
    outcome, delivery = sa.handle_receipt(
        world.ledger, quote, receipt, request_hash, ua.address
    )
    assert outcome == "cached"
    assert delivery["provenance"] is not None
    assert world.ledger.conserved()


def test_receipt_reuse_for_different_request_binding_mismatch():
    world = make_world()
    ua, sa, quote, receipt, _, _ = completed_session(world)
    new_request_hash = sha256(b"a different piece of work")
    outcome, detail = sa.handle_receipt(
        world.ledger, quote, receipt, new_request_hash, ua.address
    )
    assert (outcome, detail) == ("reject", RejectReason.BINDING_MISMATCH.value)


def test_tampered_quote_rejected_by_both_sides():
    world = make_world()
    spec = WorkloadSpec.create(WorkloadKind.LIGHT)
    ua = world.new_user_agent("a")
    sa = world.new_service_agent("a", spec)
    request = ServiceRequest.create(
        spec.service_id, workload_request_params(spec), ua.address, Random(0)
    )
    challenge = sa.issue_challenge(request, 0)
    d = challenge.quote.to_dict()
    d["price"] = 1  # discount forgery
    forged = Quote.from_dict(d)
    # UA-side check.
    assert not forged.verify_signature(sa.manifest.payee_public_key)
    # SA-side check (attacker skips the UA and presents directly).
    fake_receipt = Receipt.from_dict(
        {
            "txHash": sha256(b"no such tx").hex(),
            "blockNumber": 1,
            "event": {
                "type": "EscrowLocked",
                "quoteId": quote_id(forged).hex(),
                "requestHash": d["requestHash"],
                "payer": ua.address.hex(),
                "payee": d["payee"],
                "amount": 1,
                "expiryMs": d["expiryMs"],
                "blockNumber": 1,
            },
        }
    )
    outcome, detail = sa.handle_receipt(
        world.ledger, forged, fake_receipt, bytes.fromhex(d["requestHash"]), ua.address
    )
    assert (outcome, detail) == ("reject", "InvalidQuoteSignature")


def test_expired_quote_payment_reverts():
    world = make_world()
    spec = WorkloadSpec.create(WorkloadKind.LIGHT)
    ua = world.new_user_agent("a")
    sa = world.new_service_agent("a", spec, quote_ttl_ms=1000)
    request = ServiceRequest.create(
        spec.service_id, workload_request_params(spec), ua.address, Random(0)
    )
    challenge = sa.issue_challenge(request, 0)
    quote = challenge.quote
    before = world.ledger.balance_of(ua.address)
    lock = world.ledger.lock_escrow(
        ua.identity,
        quote_id(quote),
        quote.request_hash,
        quote.payee,
        quote.price,
        quote.expiry_ms,
        now_ms=quote.expiry_ms + 1,  # pay after expiry
    )
    assert lock.revert_reason == "QuoteExpired"
    assert world.ledger.balance_of(ua.address) == before
    assert world.ledger.conserved()


def test_mutated_delivery_bytes_rejected_cid_mismatch():
    world = make_world()
    _, sa, quote, receipt, _, transcript = completed_session(world)
    artifact = ProvenanceArtifact.from_dict(transcript.provenance)
    delivered = bytearray(canonicalize(transcript.inline_result))
    delivered[3] ^= 0x01
    verdict = verify_provenance(
        artifact, quote, receipt, bytes(delivered), sa.identity.public_key
    )
    assert not verdict.accepted
    assert verdict.reason.value == "CidMismatch"


def test_double_release_reverts_not_locked():
    world = make_world()
    _, sa, quote, _, _, transcript = completed_session(world)
    before = world.ledger.balance_of(sa.address)
    second = world.ledger.release_escrow(
        sa.identity, quote_id(quote), sha256(b"again"), transcript.end_ms + 5000
    )
    assert second.revert_reason == "NotLocked"
    assert world.ledger.balance_of(sa.address) == before
    assert world.ledger.conserved()


def test_pre_expiry_refund_reverts_not_expired():
    world = make_world()
    spec = WorkloadSpec.create(WorkloadKind.LIGHT)
    ua = world.new_user_agent("a")
    sa = world.new_service_agent("a", spec)
    request = ServiceRequest.create(
        spec.service_id, workload_request_params(spec), ua.address, Random(0)
    )
    quote = sa.issue_challenge(request, 0).quote
    qid = quote_id(quote)
    lock = world.ledger.lock_escrow(
        ua.identity, qid, quote.request_hash, quote.payee, quote.price, quote.expiry_ms, 0
    )
    assert lock.success
    # Submitted well before expiry, so the inclusion block is also pre-expiry.
    refund = world.ledger.refund_escrow(ua.identity, qid, now_ms=4000)
    assert refund.revert_reason == "NotExpired"
    # After expiry the payer recovers the funds.
    refund = world.ledger.refund_escrow(ua.identity, qid, now_ms=quote.expiry_ms)
    assert refund.success
    assert world.ledger.balance_of(ua.address) == 10_000_000_000
    assert world.ledger.conserved()


def test_request_hash_recomputed_by_service():
    """The SA prices what it validates: request hash from its own bytes."""
    world = make_world()
    ua, sa, _, transcript = settled_session(world)
    request = ServiceRequest.from_dict(transcript.request)
    assert compute_request_hash(request).hex() == transcript.quote["requestHash"]
