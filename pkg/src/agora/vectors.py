"""Golden test vectors for the deterministic primitives.

``emit`` writes a canonical JSON file of inputs and expected outputs for
canonicalization, hashing, identity derivation, signing, quote ids, and
content ids; ``check`` recomputes everything and reports mismatches.
Useful for cross-implementation conformance and regression pinning.
"""

from __future__ import annotations

import json

from . import crypto
from .canon import canonical_str, canonicalize
from .settlement import Quote, quote_id
from .store import cid_of

__all__ = ["build_vectors", "emit", "check"]

_CANON_CASES = [
    {"b": 1, "a": [2, True, None], "c": {"z": "ü", "y": -3}},
    {},
    {"nested": {"k": [{"x": 0.5}, "s"]}},
    {"unicode": "héllo ✓", "empty": [], "big": 2**64},
]

_SIGN_MESSAGE = b"agora interop vector v1"


def _identity_vector(seed: bytes) -> dict:
    identity = crypto.AgentIdentity.from_seed(seed)
    return {
        "seed": seed.hex(),
        "secretKey": identity.secret_key.hex(),
        "publicKey": identity.public_key.hex(),
        "address": identity.address.hex(),
    }


def _vector_quote() -> Quote:
    sa = crypto.AgentIdentity.from_seed(b"vector-service")
    unsigned = Quote(
        price=250_000,
        currency="TOK",
        payee=sa.address,
        chain_id=1,
        escrow_ref="escrow:sim",
        expiry_ms=60_000,
        nonce=bytes(range(32)),
        request_hash=crypto.sha256(b"vector-request"),
        receipt_spec={"kind": "OnChainEvent"},
        signature=crypto.Signature(b"", sa.address),
    )
    sig = sa.sign(canonicalize(unsigned.unsigned_dict()))
    object.__setattr__(unsigned, "signature", sig)
    return unsigned


def build_vectors() -> dict:
    signer = crypto.AgentIdentity.from_seed(b"\x01")
    signature = signer.sign(_SIGN_MESSAGE)
    quote = _vector_quote()
    return {
        "version": 1,
        "canonicalJson": [
            {"value": case, "canonical": canonical_str(case)} for case in _CANON_CASES
        ],
        "sha256": [
            {"message": b"".hex(), "digest": crypto.sha256(b"").hex()},
            {"message": b"abc".hex(), "digest": crypto.sha256(b"abc").hex()},
        ],
        "identities": [
            _identity_vector(b"\x01"),
            _identity_vector(b"\x02"),
            _identity_vector(b"agent interop"),
        ],
        "signature": {
            "seed": b"\x01".hex(),
            "message": _SIGN_MESSAGE.hex(),
            "signature": signature.bytes.hex(),
        },
        "quote": {"wire": quote.to_dict(), "quoteId": quote_id(quote).hex()},
        "cid": [
            {"content": b"hello".hex(), "cid": str(cid_of(b"hello"))},
            {"content": (b"\x00" * 4).hex(), "cid": str(cid_of(b"\x00" * 4))},
        ],
    }


def emit(path: str) -> dict:
    vectors = build_vectors()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_str(vectors))
        fh.write("\n")
    return vectors


def check(path: str) -> list[str]:
    """Recompute all vectors; returns a list of mismatch descriptions."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            stored = json.load(fh)
    except (OSError, ValueError) as err:
        return [f"unreadable vector file: {err}"]
    expected = build_vectors()
    mismatches: list[str] = []
    for key, value in expected.items():
        if stored.get(key) != json.loads(canonical_str(value)):
            mismatches.append(f"section {key!r} does not match")
    extra = set(stored) - set(expected)
    if extra:
        mismatches.append(f"unexpected sections: {sorted(extra)}")
    # Independent re-verification of the stored signature and quote.
    try:
        sig = stored["signature"]
        ident = crypto.AgentIdentity.from_seed(bytes.fromhex(sig["seed"]))
        if not crypto.verify(
            ident.public_key, bytes.fromhex(sig["message"]), bytes.fromhex(sig["signature"])
        ):
            mismatches.append("stored signature does not verify")
        quote = Quote.from_dict(stored["quote"]["wire"])
        payee_pub = crypto.AgentIdentity.from_seed(b"vector-service").public_key
        if not quote.verify_signature(payee_pub):
            mismatches.append("stored quote signature does not verify")
        if quote_id(quote).hex() != stored["quote"]["quoteId"]:
            mismatches.append("stored quote id does not match")
    except (KeyError, TypeError, ValueError):
        mismatches.append("vector file structure invalid")
    return mismatches
