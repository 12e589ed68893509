"""Capability manifests, request validation, and pricing.

The schema language is a deliberately small subset of JSON Schema: object
type with ``required`` plus per-property ``type`` (string/integer/boolean),
``enum``, integer ``minimum``/``maximum``, and string ``maxLength``. That
covers the benchmark workloads while keeping validation decidable and fast.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from random import Random
from typing import Any

from . import crypto
from .canon import canonicalize

__all__ = [
    "PricingUnit",
    "OutputType",
    "Pricing",
    "CapabilityManifest",
    "ServiceRequest",
    "ValidationVerdict",
    "validate_request",
    "price_request",
    "SchemaViolation",
    "NoPricing",
    "Registry",
]


class PricingUnit(str, Enum):
    PER_REQUEST = "PerRequest"
    PER_STEP = "PerStep"
    # Declared by the interface but not priced by this implementation.
    PER_TOKEN = "PerToken"
    PER_RESOURCE = "PerResource"


class OutputType(str, Enum):
    INLINE_JSON = "InlineJson"
    CONTENT_REF = "ContentRef"


class SchemaViolation(ValueError):
    pass


class NoPricing(ValueError):
    pass


@dataclass(frozen=True)
class Pricing:
    unit: PricingUnit
    price_per_unit: int  # fixed-point, 6 decimals
    currency: str = "USDC"

    def to_dict(self) -> dict:
        return {
            "unit": self.unit.value,
            "pricePerUnit": self.price_per_unit,
            "currency": self.currency,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Pricing":
        return cls(PricingUnit(d["unit"]), d["pricePerUnit"], d["currency"])


@dataclass(frozen=True)
class CapabilityManifest:
    service_id: str
    payee: bytes
    payee_public_key: bytes
    input_schema: dict
    output_type: OutputType
    pricing: Pricing
    signature: crypto.Signature

    def unsigned_dict(self) -> dict:
        return {
            "serviceId": self.service_id,
            "payee": self.payee.hex(),
            "payeePublicKey": self.payee_public_key.hex(),
            "inputSchema": self.input_schema,
            "outputType": self.output_type.value,
            "pricing": self.pricing.to_dict(),
        }

    def to_dict(self) -> dict:
        d = self.unsigned_dict()
        d["signature"] = self.signature.hex()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CapabilityManifest":
        payee = bytes.fromhex(d["payee"])
        return cls(
            service_id=d["serviceId"],
            payee=payee,
            payee_public_key=bytes.fromhex(d["payeePublicKey"]),
            input_schema=d["inputSchema"],
            output_type=OutputType(d["outputType"]),
            pricing=Pricing.from_dict(d["pricing"]),
            signature=crypto.Signature(bytes.fromhex(d["signature"]), payee),
        )

    @classmethod
    def create(
        cls,
        identity: crypto.AgentIdentity,
        service_id: str,
        input_schema: dict,
        output_type: OutputType,
        pricing: Pricing,
    ) -> "CapabilityManifest":
        if pricing.price_per_unit <= 0:
            raise ValueError("price_per_unit must be > 0")
        unsigned = cls(
            service_id=service_id,
            payee=identity.address,
            payee_public_key=identity.public_key,
            input_schema=input_schema,
            output_type=output_type,
            pricing=pricing,
            signature=crypto.Signature(b"", identity.address),
        )
        sig = identity.sign(canonicalize(unsigned.unsigned_dict()))
        object.__setattr__(unsigned, "signature", sig)
        return unsigned

    def verify_signature(self) -> bool:
        try:
            if crypto.derive_address(self.payee_public_key) != self.payee:
                return False
        except crypto.InvalidPublicKey:
            return False
        return crypto.verify(
            self.payee_public_key,
            canonicalize(self.unsigned_dict()),
            self.signature.bytes,
        )


@dataclass(frozen=True)
class ServiceRequest:
    service_id: str
    params: dict
    requester: bytes
    client_nonce: bytes

    def to_dict(self) -> dict:
        return {
            "serviceId": self.service_id,
            "params": self.params,
            "requester": self.requester.hex(),
            "clientNonce": self.client_nonce.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ServiceRequest":
        return cls(
            service_id=d["serviceId"],
            params=d["params"],
            requester=bytes.fromhex(d["requester"]),
            client_nonce=bytes.fromhex(d["clientNonce"]),
        )

    @classmethod
    def create(
        cls, service_id: str, params: dict, requester: bytes, rng: Random
    ) -> "ServiceRequest":
        return cls(service_id, params, requester, rng.getrandbits(256).to_bytes(32, "big"))


@dataclass(frozen=True)
class ValidationVerdict:
    ok: bool
    violations: tuple[str, ...] = ()  # constraint paths, e.g. "/steps"


def _validate_value(schema: dict, value: Any, path: str, violations: list[str]) -> None:
    expected = schema.get("type")
    if expected == "string":
        if not isinstance(value, str):
            violations.append(path)
            return
        max_len = schema.get("maxLength")
        if max_len is not None and len(value) > max_len:
            violations.append(path)
    elif expected == "integer":
        if not isinstance(value, int) or isinstance(value, bool):
            violations.append(path)
            return
        lo, hi = schema.get("minimum"), schema.get("maximum")
        if (lo is not None and value < lo) or (hi is not None and value > hi):
            violations.append(path)
    elif expected == "boolean":
        if not isinstance(value, bool):
            violations.append(path)
            return
    elif expected is not None:
        violations.append(path)
        return
    enum = schema.get("enum")
    if enum is not None and value not in enum:
        violations.append(path)


def validate_request(manifest: CapabilityManifest, request: ServiceRequest) -> ValidationVerdict:
    """Check request params against the manifest's input schema.

    Reject verdicts list every violated constraint path.
    """
    schema = manifest.input_schema
    violations: list[str] = []
    if request.service_id != manifest.service_id:
        violations.append("/serviceId")
    params = request.params
    if not isinstance(params, dict):
        return ValidationVerdict(False, ("/params",))
    for name in schema.get("required", []):
        if name not in params:
            violations.append(f"/{name}")
    properties = schema.get("properties", {})
    for name, value in params.items():
        prop = properties.get(name)
        if prop is None:
            violations.append(f"/{name}")
            continue
        _validate_value(prop, value, f"/{name}", violations)
    violations = sorted(set(violations))
    return ValidationVerdict(not violations, tuple(violations))


def price_request(manifest: CapabilityManifest, request: ServiceRequest) -> int:
    """Fixed-point price for a validated request."""
    verdict = validate_request(manifest, request)
    if not verdict.ok:
        raise SchemaViolation(", ".join(verdict.violations))
    pricing = manifest.pricing
    if pricing.unit == PricingUnit.PER_REQUEST:
        return pricing.price_per_unit
    if pricing.unit == PricingUnit.PER_STEP:
        steps = request.params.get("steps")
        if not isinstance(steps, int) or steps < 1:
            raise SchemaViolation("/steps")
        return pricing.price_per_unit * steps
    raise NoPricing(f"unpriced metering unit {pricing.unit.value}")


class Registry:
    """In-simulation service directory: serialized writes, concurrent reads."""

    def __init__(self) -> None:
        self._manifests: dict[str, CapabilityManifest] = {}

    def advertise(self, manifest: CapabilityManifest) -> None:
        self._manifests[manifest.service_id] = manifest

    def discover(self, service_id: str | None = None) -> list[CapabilityManifest]:
        """Manifests with verifying signatures, optionally filtered by id."""
        found = (
            [m for sid, m in sorted(self._manifests.items())]
            if service_id is None
            else [m for m in (self._manifests.get(service_id),) if m is not None]
        )
        return [m for m in found if m.verify_signature()]
