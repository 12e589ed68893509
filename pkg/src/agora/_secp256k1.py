"""Minimal secp256k1 arithmetic with RFC 6979 deterministic nonces.

Only what identity/signing needs: fixed-base scalar multiplication (with a
precomputed window table, built lazily on first use), generic scalar
multiplication for the pure-Python verify oracle, and deterministic ECDSA
signing with low-s normalization. Verification in the hot path goes through
the `cryptography` package (see crypto.py); the pure verify here exists so
tests can cross-check the two routes.
"""

from __future__ import annotations

import hashlib
import hmac

# Curve parameters (secp256k1).
P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

_INF = (0, 0, 0)  # Jacobian point at infinity


def _jac_double(pt):
    x, y, z = pt
    if not y:
        return _INF
    ysq = y * y % P
    s = 4 * x * ysq % P
    m = 3 * x * x % P  # a == 0 on secp256k1
    nx = (m * m - 2 * s) % P
    ny = (m * (s - nx) - 8 * ysq * ysq) % P
    nz = 2 * y * z % P
    return (nx, ny, nz)


def _jac_add(p, q):
    if not p[2]:
        return q
    if not q[2]:
        return p
    x1, y1, z1 = p
    x2, y2, z2 = q
    z1sq = z1 * z1 % P
    z2sq = z2 * z2 % P
    u1 = x1 * z2sq % P
    u2 = x2 * z1sq % P
    s1 = y1 * z2sq * z2 % P
    s2 = y2 * z1sq * z1 % P
    if u1 == u2:
        if s1 != s2:
            return _INF
        return _jac_double(p)
    h = (u2 - u1) % P
    r = (s2 - s1) % P
    hsq = h * h % P
    hcu = hsq * h % P
    u1hsq = u1 * hsq % P
    nx = (r * r - hcu - 2 * u1hsq) % P
    ny = (r * (u1hsq - nx) - s1 * hcu) % P
    nz = h * z1 * z2 % P
    return (nx, ny, nz)


def _to_affine(pt):
    x, y, z = pt
    if not z:
        raise ValueError("point at infinity")
    zinv = pow(z, -1, P)
    zinv2 = zinv * zinv % P
    return (x * zinv2 % P, y * zinv2 * zinv % P)


def on_curve(x: int, y: int) -> bool:
    if not (0 < x < P and 0 < y < P):
        return False
    return (y * y - (x * x * x + 7)) % P == 0


# Fixed-base table: _TABLE[i][j] is the affine point (j << 8i) * G, j in 1..255.
_TABLE: list[list[tuple[int, int]]] | None = None


def _build_table() -> list[list[tuple[int, int]]]:
    rows = []
    base = (GX, GY, 1)
    for _ in range(32):
        row_jac = [base]
        for _ in range(254):
            row_jac.append(_jac_add(row_jac[-1], base))
        rows.append([_to_affine(p) for p in row_jac])
        for _ in range(8):
            base = _jac_double(base)
    return rows


def mul_base(k: int) -> tuple[int, int]:
    """k * G in affine coordinates, 1 <= k < N."""
    global _TABLE
    if _TABLE is None:
        _TABLE = _build_table()
    k %= N
    if k == 0:
        raise ValueError("zero scalar")
    acc = _INF
    for i in range(32):
        b = (k >> (8 * i)) & 0xFF
        if b:
            ax, ay = _TABLE[i][b - 1]
            acc = _jac_add(acc, (ax, ay, 1))
    return _to_affine(acc)


def mul_point(k: int, point: tuple[int, int]) -> tuple[int, int]:
    """k * point (double-and-add); slow path, used by the verify oracle."""
    k %= N
    if k == 0:
        raise ValueError("zero scalar")
    acc = _INF
    add = (point[0], point[1], 1)
    while k:
        if k & 1:
            acc = _jac_add(acc, add)
        add = _jac_double(add)
        k >>= 1
    return _to_affine(acc)


def _hmac256(key: bytes, data: bytes) -> bytes:
    return hmac.new(key, data, hashlib.sha256).digest()


def rfc6979_nonce(secret: int, digest: bytes) -> int:
    """Deterministic ECDSA nonce per RFC 6979 (SHA-256, qlen == hlen)."""
    x = secret.to_bytes(32, "big")
    h = (int.from_bytes(digest, "big") % N).to_bytes(32, "big")
    v = b"\x01" * 32
    k = b"\x00" * 32
    k = _hmac256(k, v + b"\x00" + x + h)
    v = _hmac256(k, v)
    k = _hmac256(k, v + b"\x01" + x + h)
    v = _hmac256(k, v)
    while True:
        v = _hmac256(k, v)
        candidate = int.from_bytes(v, "big")
        if 1 <= candidate < N:
            return candidate
        k = _hmac256(k, v + b"\x00")
        v = _hmac256(k, v)


def sign_digest(secret: int, digest: bytes) -> tuple[int, int]:
    """Deterministic ECDSA over a 32-byte digest; returns low-s (r, s)."""
    e = int.from_bytes(digest, "big") % N
    k = rfc6979_nonce(secret, digest)
    while True:
        rx, _ = mul_base(k)
        r = rx % N
        if r:
            s = pow(k, -1, N) * (e + r * secret) % N
            if s:
                break
        # Astronomically unlikely; re-derive as RFC 6979 prescribes.
        k = rfc6979_nonce(secret, hashlib.sha256(digest + b"retry").digest())
    if s > N // 2:
        s = N - s
    return r, s


def verify_digest(pub: tuple[int, int], digest: bytes, r: int, s: int) -> bool:
    """Pure-Python ECDSA verify (test oracle; production path uses OpenSSL)."""
    if not (1 <= r < N and 1 <= s < N) or not on_curve(*pub):
        return False
    e = int.from_bytes(digest, "big") % N
    w = pow(s, -1, N)
    u1 = e * w % N
    u2 = r * w % N
    p1 = mul_base(u1) if u1 else None
    p2 = mul_point(u2, pub) if u2 else None
    if p1 is None and p2 is None:
        return False
    if p1 is None:
        x, _ = p2
    elif p2 is None:
        x, _ = p1
    else:
        pt = _jac_add((p1[0], p1[1], 1), (p2[0], p2[1], 1))
        if not pt[2]:
            return False
        x, _ = _to_affine(pt)
    return x % N == r
