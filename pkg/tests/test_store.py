import hashlib

import pytest

from agora.store import (
    Cid,
    ContentStore,
    EmptyContent,
    IntegrityFailure,
    NotFound,
    NotYetAvailable,
    cid_of,
)

MIB = 1024 * 1024


def test_cid_is_sha256():
    content = b"payload"
    cid = cid_of(content)
    assert cid.digest == hashlib.sha256(content).digest()
    assert str(cid) == "cid:" + cid.digest.hex()
    assert Cid.parse(str(cid)) == cid


def test_cid_parse_rejects_garbage():
    with pytest.raises(ValueError):
        Cid.parse("notacid:ff")
    with pytest.raises(ValueError):
        Cid.parse("cid:ff")  # wrong length


def test_upload_latency_linear_in_size():
    store = ContentStore(upload_base_ms=50, upload_per_mib_ms=20)
    assert store.upload_latency_ms(0) == 50
    assert store.upload_latency_ms(MIB) == 70
    assert store.upload_latency_ms(8 * MIB) == 210
    assert store.upload_latency_ms(MIB // 2) == 60


def test_put_get_round_trip():
    store = ContentStore()
    cid, ready_at = store.put(b"hello", now_ms=100)
    assert ready_at == 100 + store.upload_latency_ms(5)
    with pytest.raises(NotYetAvailable):
        store.get(cid, ready_at - 1)
    assert store.get(cid, ready_at) == b"hello"


def test_size_hint_charges_declared_size():
    store = ContentStore()
    cid, ready_at = store.put(b"tiny", now_ms=0, size_hint=8 * MIB)
    assert ready_at == 210
    assert store.get(cid, ready_at) == b"tiny"


def test_put_idempotent_keeps_earliest_availability():
    store = ContentStore()
    cid1, ready1 = store.put(b"same", now_ms=0)
    cid2, ready2 = store.put(b"same", now_ms=10_000)
    assert cid1 == cid2
    assert ready2 == ready1  # re-upload cannot delay availability


def test_missing_and_empty():
    store = ContentStore()
    with pytest.raises(NotFound):
        store.get(cid_of(b"nothing"), 0)
    with pytest.raises(EmptyContent):
        store.put(b"", 0)


def test_corruption_detected_on_get():
    store = ContentStore()
    cid, ready_at = store.put(b"original", now_ms=0)
    store.corrupt(cid, b"evil bytes")
    with pytest.raises(IntegrityFailure):
        store.get(cid, ready_at)


def test_persist_dir_writes_blobs(tmp_path):
    store = ContentStore(persist_dir=str(tmp_path / "blobs"))
    cid, _ = store.put(b"persisted", now_ms=0)
    assert (tmp_path / "blobs" / cid.digest.hex()).read_bytes() == b"persisted"
