import json
import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore", DeprecationWarning)
    from fastapi.testclient import TestClient

from agora.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


SMALL = {"trials": 3, "duration_s": 5, "caps": {"concurrency_levels": [10]}}


def test_healthz(client):
    resp = client.get("/healthz")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_run_session_settles(client):
    resp = client.post(
        "/v1/sessions", json={"overrides": {"seed": 5, "workload": "genai"}}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["final_state"] == "Settled"
    assert body["failure_reason"] is None
    assert body["gas_total"] == 159_000
    assert set(body["phase_timings"]) >= {"messagingMs", "confirmationMs", "totalMs"}


def test_run_session_baseline_mode_override(client):
    resp = client.post("/v1/sessions", json={"overrides": {"mode": "web3-baseline"}})
    assert resp.json()["gas_total"] == 326_000


def test_bench_cost_section(client):
    resp = client.post("/v1/bench", json={"section": "cost", "config": SMALL})
    assert resp.status_code == 200
    report = resp.json()["report"]
    assert report["sections"]["cost"]["registerGas"] == 46_000
    assert "latency" not in report["sections"]


def test_bench_writes_and_verify_accepts(client, tmp_path):
    out = str(tmp_path / "run")
    resp = client.post(
        "/v1/bench",
        json={"section": "latency", "config": SMALL, "out_dir": out, "audit_log": True},
    )
    assert resp.status_code == 200
    resp = client.post("/v1/verify", json={"run_dir": out})
    body = resp.json()
    assert body["ok"] is True
    assert body["sessions_checked"] > 0
    assert body["findings"] == []


def test_verify_rejects_tamper(client, tmp_path):
    out = str(tmp_path / "run")
    client.post("/v1/bench", json={"section": "latency", "config": SMALL, "out_dir": out})
    prov = next((tmp_path / "run").rglob("provenance.json"))
    raw = bytearray(prov.read_bytes())
    raw[10] ^= 0x01
    prov.write_bytes(bytes(raw))
    body = client.post("/v1/verify", json={"run_dir": out}).json()
    assert body["ok"] is False
    assert body["findings"]


def test_vectors_emit_then_check(client, tmp_path):
    path = str(tmp_path / "vectors.json")
    resp = client.post("/v1/vectors", json={"action": "emit", "path": path})
    assert resp.json()["ok"] is True
    resp = client.post("/v1/vectors", json={"action": "check", "path": path})
    assert resp.json() == {"ok": True, "mismatches": []}
    data = json.loads(open(path).read())
    data["sha256"][0]["digest"] = "00" * 32
    with open(path, "w") as fh:
        json.dump(data, fh)
    body = client.post("/v1/vectors", json={"action": "check", "path": path}).json()
    assert body["ok"] is False and body["mismatches"]


def test_bad_config_is_400(client):
    resp = client.post("/v1/bench", json={"section": "cost", "config": {"bogus": 1}})
    assert resp.status_code == 400
    assert "bogus" in resp.json()["detail"]


def test_malformed_body_is_422(client):
    resp = client.post("/v1/bench", json={"section": "nope"})
    assert resp.status_code == 422
    resp = client.post("/v1/sessions", json={"overrides": {"trials": 0}})
    assert resp.status_code == 422
