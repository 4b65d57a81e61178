import os
import time

import pytest

from larchkit import fido2, totp
from larchkit.client import LarchClient, LocalTransport
from larchkit.group import G
from larchkit.logservice.service import Failpoint, LogService, ServiceError
from larchkit.logservice.store import RecordStore


def _chal(i=0):
    return bytes([i]) * fido2.CHAL_BYTES


# --- record store ---------------------------------------------------------


def test_store_roundtrip(tmp_path):
    st = RecordStore(str(tmp_path))
    acct = b"\xaa" * 16
    seqs = [st.append(acct, 1, 1000 + i, b"body-%d" % i) for i in range(5)]
    assert seqs == [0, 1, 2, 3, 4]
    recs = st.records()
    assert [r.body for r in recs] == [b"body-%d" % i for i in range(5)]
    assert all(r.account == acct for r in recs)
    assert recs[3].ts == 1003 and recs[3].mech == 1
    st.close()


def test_store_filters(tmp_path):
    st = RecordStore(str(tmp_path))
    a, b = b"\xaa" * 16, b"\xbb" * 16
    st.append(a, 1, 1, b"x")
    st.append(b, 2, 2, b"y")
    st.append(a, 2, 3, b"z")
    assert [r.body for r in st.records(account=a)] == [b"x", b"z"]
    assert [r.body for r in st.records(mech=2)] == [b"y", b"z"]
    st.close()


def test_store_truncates_torn_tail(tmp_path):
    st = RecordStore(str(tmp_path))
    acct = b"\xcc" * 16
    for i in range(3):
        st.append(acct, 1, i, b"ok-%d" % i)
    st.close()
    # simulate a crash mid-append: partial entry at the tail
    with open(tmp_path / "records.bin", "ab") as f:
        f.write(b"\x40\x00\x00\x00" + b"half an entry")
    st2 = RecordStore(str(tmp_path))
    assert [r.body for r in st2.records()] == [b"ok-0", b"ok-1", b"ok-2"]
    # and the file itself was cleaned, so a third open stays stable
    st2.append(acct, 1, 99, b"after")
    st2.close()
    st3 = RecordStore(str(tmp_path))
    assert [r.body for r in st3.records()] == [b"ok-0", b"ok-1", b"ok-2", b"after"]
    st3.close()


def test_store_rebuilds_missing_or_stale_index(tmp_path):
    st = RecordStore(str(tmp_path))
    acct = b"\xdd" * 16
    for i in range(4):
        st.append(acct, 2, i, b"r%d" % i)
    st.close()
    os.remove(tmp_path / "records.idx")
    st2 = RecordStore(str(tmp_path))
    assert len(st2.records()) == 4
    st2.close()
    with open(tmp_path / "records.idx", "r+b") as f:
        f.seek(0)
        f.write(b"\xff" * 12)
    st3 = RecordStore(str(tmp_path))
    assert [r.body for r in st3.records()] == [b"r0", b"r1", b"r2", b"r3"]
    st3.close()


def test_store_refuses_bad_account(tmp_path):
    st = RecordStore(str(tmp_path))
    with pytest.raises(Exception):
        st.append(b"short", 1, 0, b"x")
    st.close()


# --- service state and durability -----------------------------------------


def test_state_survives_restart(tmp_path):
    data = str(tmp_path / "log")
    service = LogService(data, reps=20)
    client = LarchClient(LocalTransport(service), str(tmp_path / "vault.json"))
    client.enroll()
    client.fido2_register("a.example", presig_count=2)
    client.fido2_auth("a.example", _chal(1))

    service2 = LogService(data, reps=20)
    client2 = LarchClient(LocalTransport(service2), str(tmp_path / "vault.json"))
    sig, pk = client2.fido2_auth("a.example", _chal(2))
    report = client2.audit()
    assert [e["rp"] for e in report["fido2"]] == ["a.example", "a.example"]
    assert report["tampered"] == []


def test_enroll_idempotency_replay_refused(tmp_path):
    service = LogService(str(tmp_path / "log"), reps=20)
    req = {
        "idempotency": "same-token-twice",
        "identity_pk": (G * 5).encode().hex(),
        "cm": "00" * 32,
        "pw_public": (G * 7).encode().hex(),
        "pad_seed": "11" * 32,
    }
    service.enroll(dict(req))
    with pytest.raises(ServiceError) as ei:
        service.enroll(dict(req))
    assert ei.value.code == "ALREADY_ACTIVE"


def test_auth_checked_before_fields(service):
    with pytest.raises(ServiceError) as ei:
        service.fido2_register("00" * 16, "nope", {"cred_id": 7})
    assert ei.value.code == "REJECT_UNKNOWN"


def test_bad_token_unauthorized(service, client):
    account = client.vault.data["account_id"]
    with pytest.raises(ServiceError) as ei:
        service.fido2_register(account, "wrong-token", {})
    assert ei.value.code == "UNAUTHORIZED"


def test_fido2_failpoint_never_releases_share_without_record(tmp_path):
    """Crash after the durable append: no share left the log, but the
    record is already on disk, so the client never holds an unlogged
    credential."""
    data = str(tmp_path / "log")
    service = LogService(data, reps=20, failpoints={"fido2_after_append"})
    client = LarchClient(LocalTransport(service), str(tmp_path / "vault.json"))
    client.enroll()
    client.fido2_register("a.example", presig_count=2)
    with pytest.raises(Failpoint):
        client.fido2_auth("a.example", _chal(1))

    service2 = LogService(data, reps=20)
    recs = service2.store.records()
    assert len(recs) == 1 and recs[0].mech == 1
    assert service2.verify_integrity() == []
    # the presignature is burned on the log side: replaying it is refused
    account = client.vault.data["account_id"]
    batch = next(iter(service2._state["accounts"][account]["fido2"]["batches"].values()))
    assert batch["used"] == [0]


def test_pw_failpoint_record_precedes_beta(tmp_path):
    data = str(tmp_path / "log")
    service = LogService(data, reps=20, failpoints={"pw_after_append"})
    client = LarchClient(LocalTransport(service), str(tmp_path / "vault.json"))
    client.enroll()
    client.pw_register("a.example")
    with pytest.raises(Failpoint):
        client.pw_auth("a.example")
    service2 = LogService(data, reps=20)
    recs = service2.store.records()
    assert len(recs) == 1 and recs[0].mech == 3
    assert service2.verify_integrity() == []


@pytest.mark.slow
def test_totp_failpoint_record_precedes_code(tmp_path):
    data = str(tmp_path / "log")
    service = LogService(data, reps=20, failpoints={"totp_after_append"})
    client = LarchClient(LocalTransport(service), str(tmp_path / "vault.json"))
    client.enroll()
    client.totp_register("a.example", b"\x05" * totp.KEY_BYTES)
    with pytest.raises(Failpoint):
        client.totp_code("a.example", t=totp.time_step(time.time()))
    service2 = LogService(data, reps=20)
    recs = service2.store.records()
    assert len(recs) == 1 and recs[0].mech == 2
    assert service2.verify_integrity() == []


# --- integrity sweep --------------------------------------------------------


def test_verify_integrity_flags_tampering(tmp_path):
    data = str(tmp_path / "log")
    service = LogService(data, reps=20)
    client = LarchClient(LocalTransport(service), str(tmp_path / "vault.json"))
    client.enroll()
    client.pw_register("a.example")
    client.pw_auth("a.example")
    client.pw_auth("a.example")
    assert service.verify_integrity() == []

    # flip one ciphertext byte of record 1 on disk
    path = os.path.join(data, "records.bin")
    with open(path, "rb") as f:
        raw = bytearray(f.read())
    # find second entry offset: 4 + len of first
    import struct as _s
    first_len = _s.unpack_from("<L", raw, 0)[0]
    off = 4 + first_len + 4 + 16 + 1 + 8  # into record 1's ct
    raw[off] ^= 1
    with open(path, "wb") as f:
        f.write(raw)

    service2 = LogService(data, reps=20)
    bad = service2.verify_integrity()
    assert [(seq, reason) for seq, reason in bad] == [(1, "signature check failed")]
    # client-side audit flags the same record
    client2 = LarchClient(LocalTransport(service2), str(tmp_path / "vault.json"))
    report = client2.audit()
    assert report["tampered"] == [1]
    assert len(report["pw"]) == 1


def test_verify_integrity_flags_unknown_account(tmp_path):
    data = str(tmp_path / "log")
    service = LogService(data, reps=20)
    service.store.append(b"\x99" * 16, 3, 0, b"x" * (66 + 64))
    assert service.verify_integrity() == [(0, "unknown account")]


def test_verify_integrity_flags_bad_framing(tmp_path, client, service):
    client.pw_register("a.example")
    client.pw_auth("a.example")
    account = bytes.fromhex(client.vault.data["account_id"])
    service.store.append(account, 3, 0, b"too short")
    service.store.append(account, 9, 0, b"y" * 130)
    bad = dict(service.verify_integrity())
    assert bad == {1: "bad framing", 2: "bad framing"}
