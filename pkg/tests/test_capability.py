from random import Random

import pytest

from agora.capability import (
    CapabilityManifest,
    NoPricing,
    OutputType,
    Pricing,
    PricingUnit,
    Registry,
    SchemaViolation,
    ServiceRequest,
    price_request,
    validate_request,
)
from agora.crypto import AgentIdentity

SA = AgentIdentity.from_seed(b"cap-sa")
UA = AgentIdentity.from_seed(b"cap-ua")

SCHEMA = {
    "type": "object",
    "required": ["prompt", "steps"],
    "properties": {
        "prompt": {"type": "string", "maxLength": 10},
        "steps": {"type": "integer", "minimum": 1, "maximum": 50},
        "hd": {"type": "boolean"},
        "style": {"type": "string", "enum": ["fast", "best"]},
    },
}


def make_manifest(pricing=None, schema=None) -> CapabilityManifest:
    return CapabilityManifest.create(
        SA,
        "svc-test",
        schema or SCHEMA,
        OutputType.CONTENT_REF,
        pricing or Pricing(PricingUnit.PER_STEP, 10_000),
    )


def make_request(params) -> ServiceRequest:
    return ServiceRequest.create("svc-test", params, UA.address, Random(1))


def test_manifest_signature_round_trip():
    manifest = make_manifest()
    assert manifest.verify_signature()
    decoded = CapabilityManifest.from_dict(manifest.to_dict())
    assert decoded.verify_signature()
    assert decoded == manifest


def test_manifest_tamper_detected():
    manifest = make_manifest()
    d = manifest.to_dict()
    d["pricing"]["pricePerUnit"] = 1  # cheaper than signed
    assert not CapabilityManifest.from_dict(d).verify_signature()


def test_valid_request_accepted():
    verdict = validate_request(make_manifest(), make_request({"prompt": "hi", "steps": 3}))
    assert verdict.ok and verdict.violations == ()


@pytest.mark.parametrize(
    "params,paths",
    [
        ({"steps": 3}, ("/prompt",)),                        # missing required
        ({"prompt": "hi"}, ("/steps",)),
        ({"prompt": "hi", "steps": 0}, ("/steps",)),          # below minimum
        ({"prompt": "hi", "steps": 51}, ("/steps",)),         # above maximum
        ({"prompt": "hi", "steps": True}, ("/steps",)),       # bool is not integer
        ({"prompt": "x" * 11, "steps": 3}, ("/prompt",)),     # too long
        ({"prompt": "hi", "steps": 3, "oops": 1}, ("/oops",)),  # unknown param
        ({"prompt": "hi", "steps": 3, "hd": "yes"}, ("/hd",)),
        ({"prompt": "hi", "steps": 3, "style": "slow"}, ("/style",)),
        ({"prompt": 7, "steps": "3"}, ("/prompt", "/steps")),
    ],
)
def test_schema_violations(params, paths):
    verdict = validate_request(make_manifest(), make_request(params))
    assert not verdict.ok
    assert verdict.violations == paths


def test_service_id_mismatch():
    request = ServiceRequest.create("svc-other", {"prompt": "hi", "steps": 1}, UA.address, Random(1))
    verdict = validate_request(make_manifest(), request)
    assert "/serviceId" in verdict.violations


def test_pricing_per_request():
    manifest = make_manifest(pricing=Pricing(PricingUnit.PER_REQUEST, 250_000))
    assert price_request(manifest, make_request({"prompt": "hi", "steps": 3})) == 250_000


def test_pricing_per_step_scales():
    manifest = make_manifest()
    assert price_request(manifest, make_request({"prompt": "hi", "steps": 5})) == 50_000
    assert price_request(manifest, make_request({"prompt": "hi", "steps": 1})) == 10_000


def test_pricing_rejects_invalid_request():
    with pytest.raises(SchemaViolation):
        price_request(make_manifest(), make_request({"prompt": "hi"}))


def test_unpriced_unit_rejected():
    manifest = make_manifest(pricing=Pricing(PricingUnit.PER_TOKEN, 10))
    with pytest.raises(NoPricing):
        price_request(manifest, make_request({"prompt": "hi", "steps": 3}))


def test_nonpositive_price_rejected_at_creation():
    with pytest.raises(ValueError):
        make_manifest(pricing=Pricing(PricingUnit.PER_REQUEST, 0))


def test_registry_discovery_filters_bad_signatures():
    registry = Registry()
    good = make_manifest()
    registry.advertise(good)
    bad_dict = make_manifest().to_dict()
    bad_dict["serviceId"] = "svc-forged"
    registry.advertise(CapabilityManifest.from_dict(bad_dict))
    assert [m.service_id for m in registry.discover()] == ["svc-test"]
    assert registry.discover("svc-forged") == []
    assert registry.discover("svc-test")[0] == good
    assert registry.discover("svc-missing") == []
