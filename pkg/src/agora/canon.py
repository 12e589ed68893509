"""Canonical JSON encoding.

Every signed or hashed protocol object goes through :func:`canonicalize`
before hashing/signing, so two peers always agree on the exact bytes:
UTF-8, object keys sorted ascending, no whitespace, numbers in shortest
exact decimal form.

Protocol objects use integer numbers only (monetary amounts are
fixed-point integers); finite floats are still encodable for generality,
but NaN/Infinity and non-string map keys are rejected.
"""

from __future__ import annotations

import json
import math
from typing import Any

__all__ = ["NonCanonicalizable", "canonicalize", "canonical_str"]


class NonCanonicalizable(ValueError):
    """Value cannot be canonically encoded (non-string key, non-finite number)."""


def _check(value: Any, path: str) -> None:
    if value is None or isinstance(value, (str, bool, int)):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise NonCanonicalizable(f"non-finite number at {path or '/'}")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise NonCanonicalizable(f"non-string key {key!r} at {path or '/'}")
            _check(item, f"{path}/{key}")
        return
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check(item, f"{path}/{i}")
        return
    raise NonCanonicalizable(f"unsupported type {type(value).__name__} at {path or '/'}")


def canonical_str(value: Any) -> str:
    """Canonical JSON as a str (see :func:`canonicalize`)."""
    _check(value, "")
    # sort_keys orders by code point; UTF-8 preserves code-point order,
    # so this matches bytewise-ascending key order after encoding.
    return json.dumps(
        value,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def canonicalize(value: Any) -> bytes:
    """Encode ``value`` as canonical JSON bytes.

    Raises:
        NonCanonicalizable: on non-string map keys or non-finite numbers.
    """
    return canonical_str(value).encode("utf-8")
