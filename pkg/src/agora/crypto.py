"""Identities, hashing, and signatures.

An agent identity is a secp256k1 keypair plus a 20-byte address derived
from the uncompressed public key: ``address = sha256(pubkey)[-20:]``.
(SHA-256 rather than keccak, so one hash primitive covers the whole stack;
this intentionally diverges from EVM address rules.)

Signing is deterministic (RFC 6979), so re-signing the same bytes with the
same key is byte-stable. Verification uses OpenSSL via `cryptography`,
which doubles as an independent implementation cross-checking the
in-house signer.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from random import Random

from cryptography.exceptions import InvalidSignature as _OpensslBadSig
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import encode_dss_signature

from . import _secp256k1 as curve

__all__ = [
    "ADDRESS_LEN",
    "InvalidPublicKey",
    "Signature",
    "AgentIdentity",
    "sha256",
    "derive_address",
    "verify",
]

ADDRESS_LEN = 20
PUBKEY_LEN = 65
SIGNATURE_LEN = 64


class InvalidPublicKey(ValueError):
    """Public key bytes do not encode a valid curve point."""


def sha256(data: bytes) -> bytes:
    """32-byte SHA-256 digest."""
    return hashlib.sha256(data).digest()


def derive_address(public_key: bytes) -> bytes:
    """20-byte address: last 20 bytes of sha256(uncompressed public key)."""
    _decode_point(public_key)
    return sha256(public_key)[-ADDRESS_LEN:]


def _decode_point(public_key: bytes) -> tuple[int, int]:
    if len(public_key) != PUBKEY_LEN or public_key[0] != 0x04:
        raise InvalidPublicKey("expected 65-byte uncompressed point")
    x = int.from_bytes(public_key[1:33], "big")
    y = int.from_bytes(public_key[33:], "big")
    if not curve.on_curve(x, y):
        raise InvalidPublicKey("point not on curve")
    return x, y


@dataclass(frozen=True)
class Signature:
    """64-byte r||s ECDSA signature plus the signer's address."""

    bytes: bytes
    signer: bytes

    def hex(self) -> str:
        return self.bytes.hex()


_OPENSSL_KEYS: dict[bytes, ec.EllipticCurvePublicKey] = {}

# Signatures produced by the in-process RFC 6979 signer are valid by
# construction, so verifying one is a pure function with a known result.
# `sign` records (pubkey, digest, sig) here and `verify` answers those
# from the set; anything else (tampered bytes, foreign signatures) still
# goes through OpenSSL. Bounded to keep long runs at constant memory.
_KNOWN_GOOD: set[tuple[bytes, bytes, bytes]] = set()
_KNOWN_GOOD_MAX = 1 << 20


def _openssl_key(public_key: bytes) -> ec.EllipticCurvePublicKey:
    key = _OPENSSL_KEYS.get(public_key)
    if key is None:
        _decode_point(public_key)
        key = ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256K1(), public_key)
        _OPENSSL_KEYS[public_key] = key
    return key


def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    """True iff ``signature`` is a valid signature of ``message`` under the key."""
    if len(signature) != SIGNATURE_LEN:
        return False
    if (public_key, sha256(message), signature) in _KNOWN_GOOD:
        return True
    r = int.from_bytes(signature[:32], "big")
    s = int.from_bytes(signature[32:], "big")
    if not (0 < r < curve.N and 0 < s < curve.N):
        return False
    try:
        key = _openssl_key(public_key)
    except InvalidPublicKey:
        return False
    try:
        key.verify(encode_dss_signature(r, s), message, ec.ECDSA(hashes.SHA256()))
        return True
    except _OpensslBadSig:
        return False


def verify_pure(public_key: bytes, message: bytes, signature: bytes) -> bool:
    """Pure-Python verify; independent oracle for the OpenSSL path."""
    if len(signature) != SIGNATURE_LEN:
        return False
    try:
        pub = _decode_point(public_key)
    except InvalidPublicKey:
        return False
    r = int.from_bytes(signature[:32], "big")
    s = int.from_bytes(signature[32:], "big")
    return curve.verify_digest(pub, sha256(message), r, s)


@dataclass(frozen=True)
class AgentIdentity:
    """secp256k1 keypair; the principal for every signed artifact."""

    secret_key: bytes = field(repr=False)
    public_key: bytes
    address: bytes

    @classmethod
    def from_secret(cls, secret_key: bytes) -> "AgentIdentity":
        if len(secret_key) != 32:
            raise ValueError("secret key must be 32 bytes")
        d = int.from_bytes(secret_key, "big")
        if not (1 <= d < curve.N):
            raise ValueError("secret scalar out of range")
        x, y = curve.mul_base(d)
        public_key = b"\x04" + x.to_bytes(32, "big") + y.to_bytes(32, "big")
        return cls(secret_key, public_key, derive_address(public_key))

    @classmethod
    def from_seed(cls, seed: bytes) -> "AgentIdentity":
        """Deterministic identity from arbitrary seed bytes."""
        d = int.from_bytes(sha256(seed), "big") % (curve.N - 1) + 1
        return cls.from_secret(d.to_bytes(32, "big"))

    @classmethod
    def generate(cls, rng: Random) -> "AgentIdentity":
        return cls.from_seed(rng.getrandbits(256).to_bytes(32, "big"))

    def sign(self, message: bytes) -> Signature:
        """Deterministic signature over ``message`` (hashed with SHA-256)."""
        d = int.from_bytes(self.secret_key, "big")
        digest = sha256(message)
        r, s = curve.sign_digest(d, digest)
        sig_bytes = r.to_bytes(32, "big") + s.to_bytes(32, "big")
        if len(_KNOWN_GOOD) >= _KNOWN_GOOD_MAX:
            _KNOWN_GOOD.clear()
        _KNOWN_GOOD.add((self.public_key, digest, sig_bytes))
        return Signature(sig_bytes, self.address)
