import base64
import time

import pytest

from larchkit import ecdsa, fido2
from larchkit.client import ClientError, LarchClient, LocalTransport
from larchkit.logservice.service import LogService, ServiceError


def _chal(i=0):
    return bytes([i]) * fido2.CHAL_BYTES


def test_register_and_auth(client):
    pk = client.fido2_register("github.com", presig_count=3)
    sig, pk2 = client.fido2_auth("github.com", _chal(1))
    assert pk == pk2 and len(sig) == 64
    rp_id = fido2.rp_identifier("github.com")
    dgst = fido2.auth_digest(rp_id, _chal(1))
    assert ecdsa.verify_digest(pk, fido2.digest_scalar(dgst), sig)


def test_signatures_vary_by_challenge(client):
    client.fido2_register("a.example", presig_count=3)
    s1, _ = client.fido2_auth("a.example", _chal(1))
    s2, _ = client.fido2_auth("a.example", _chal(2))
    assert s1 != s2


def test_presig_exhaustion_then_replenish(client):
    client.fido2_register("a.example", presig_count=2)
    client.fido2_auth("a.example", _chal(1))
    client.fido2_auth("a.example", _chal(2))
    with pytest.raises(ClientError, match="replenish"):
        client.fido2_auth("a.example", _chal(3))
    client.fido2_replenish("a.example", count=2)
    sig, pk = client.fido2_auth("a.example", _chal(3))
    assert ecdsa.verify_digest(
        pk,
        fido2.digest_scalar(fido2.auth_digest(fido2.rp_identifier("a.example"), _chal(3))),
        sig,
    )


def test_duplicate_registration_rejected(client):
    client.fido2_register("a.example", presig_count=2)
    with pytest.raises(ClientError, match="already"):
        client.fido2_register("a.example")
    with pytest.raises(ClientError, match="no credential"):
        client.fido2_auth("other.example", _chal())


def _round1_request(client, rp_name, challenge, ts=None, **override):
    """Build a valid round1 payload the way the client does, with knobs."""
    import larchkit.ecdsa2p as ecdsa2p
    from larchkit.group import scalar_from_bytes, scalar_to_bytes

    v = client.vault.data
    cred = v["fido2"]["creds"][rp_name]
    batch_id, index, presig = client._allocate_presig(cred["cred_id"])
    k = bytes.fromhex(v["archive_k"])
    r = bytes.fromhex(v["archive_r"])
    rp_id = fido2.rp_identifier(rp_name)
    ct, dgst, proof = fido2.prove_auth(k, r, rp_id, challenge, client._reps())
    if ts is None:
        ts = int(time.time())
    sig = client._sign_record(1, ts, ct)
    signer = ecdsa2p.ClientSigning(
        presig, scalar_from_bytes(bytes.fromhex(cred["x_share"])),
        fido2.digest_scalar(dgst))
    d1, e1 = signer.round1_payload()
    req = {
        "cred_id": cred["cred_id"], "batch_id": batch_id, "index": index,
        "ts": ts, "dgst": dgst.hex(),
        "ct": base64.b64encode(ct).decode(),
        "proof": base64.b64encode(proof).decode(),
        "sig": base64.b64encode(sig).decode(),
        "d1": scalar_to_bytes(d1).hex(), "e1": scalar_to_bytes(e1).hex(),
    }
    req.update(override)
    return req


def _creds(client):
    return client.vault.data["account_id"], client.vault.data["token"]


def test_presig_replay_rejected(service, client):
    client.fido2_register("a.example", presig_count=3)
    client.fido2_auth("a.example", _chal(1))
    account, token = _creds(client)
    used_index = 0
    req = _round1_request(client, "a.example", _chal(2), index=used_index)
    with pytest.raises(ServiceError) as ei:
        service.fido2_round1(account, token, req)
    assert ei.value.code == "REJECT_REPLAY"


def test_stale_timestamp_rejected(service, client):
    client.fido2_register("a.example", presig_count=3)
    account, token = _creds(client)
    req = _round1_request(client, "a.example", _chal(), ts=int(time.time()) - 3600)
    with pytest.raises(ServiceError) as ei:
        service.fido2_round1(account, token, req)
    assert ei.value.code == "REJECT_TIME"


def test_bad_proof_rejected(service, client):
    client.fido2_register("a.example", presig_count=3)
    account, token = _creds(client)
    req = _round1_request(client, "a.example", _chal())
    proof = bytearray(base64.b64decode(req["proof"]))
    proof[len(proof) // 2] ^= 1
    req["proof"] = base64.b64encode(bytes(proof)).decode()
    with pytest.raises(ServiceError) as ei:
        service.fido2_round1(account, token, req)
    assert ei.value.code == "REJECT_PROOF"


def test_bad_record_signature_rejected(service, client):
    client.fido2_register("a.example", presig_count=3)
    account, token = _creds(client)
    req = _round1_request(client, "a.example", _chal())
    sig = bytearray(base64.b64decode(req["sig"]))
    sig[0] ^= 1
    req["sig"] = base64.b64encode(bytes(sig)).decode()
    with pytest.raises(ServiceError) as ei:
        service.fido2_round1(account, token, req)
    assert ei.value.code == "REJECT_INTEGRITY"


def test_unknown_ids_rejected(service, client):
    client.fido2_register("a.example", presig_count=2)
    account, token = _creds(client)
    req = _round1_request(client, "a.example", _chal())
    with pytest.raises(ServiceError) as ei:
        service.fido2_round1(account, token, dict(req, cred_id="nope-nope"))
    assert ei.value.code == "REJECT_UNKNOWN"
    with pytest.raises(ServiceError) as ei:
        service.fido2_round1(account, token, dict(req, batch_id="nope-nope"))
    assert ei.value.code == "REJECT_UNKNOWN"
    with pytest.raises(ServiceError) as ei:
        service.fido2_round1(account, token, dict(req, index=10 ** 6))
    assert ei.value.code == "REJECT_UNKNOWN"


def test_objection_window_gates_new_batches(tmp_path):
    now = [1_000_000]
    service = LogService(str(tmp_path / "log"), reps=20, objection_window=600,
                         clock=lambda: now[0])
    client = LarchClient(LocalTransport(service), str(tmp_path / "vault.json"))
    client.enroll()
    client.fido2_register("a.example", presig_count=2)
    # the fresh batch is not active yet: round1 refuses to draw from it
    with pytest.raises(ServiceError) as ei:
        client.fido2_auth("a.example", _chal(), ts=now[0])
    assert ei.value.code == "REJECT_INACTIVE"
    now[0] += 601
    sig, pk = client.fido2_auth("a.example", _chal(), ts=now[0])
    assert ecdsa.verify_digest(
        pk,
        fido2.digest_scalar(fido2.auth_digest(fido2.rp_identifier("a.example"), _chal())),
        sig,
    )


def test_objection_cancels_pending_batch(tmp_path):
    now = [1_000_000]
    service = LogService(str(tmp_path / "log"), reps=20, objection_window=600,
                         clock=lambda: now[0])
    client = LarchClient(LocalTransport(service), str(tmp_path / "vault.json"))
    client.enroll()
    client.fido2_register("a.example", presig_count=2)
    account, token = _creds(client)
    batch_id = next(iter(client.vault.data["fido2"]["batches"]))
    resp = service.fido2_object(account, token, {"batch_id": batch_id})
    assert resp["cancelled"] == batch_id
    # service side is gone; a direct round1 against it is unknown
    now[0] += 601
    req = _round1_request(client, "a.example", _chal(), ts=now[0])
    with pytest.raises(ServiceError) as ei:
        service.fido2_round1(account, token, req)
    assert ei.value.code == "REJECT_UNKNOWN"


def test_objection_refused_once_active(tmp_path):
    now = [1_000_000]
    service = LogService(str(tmp_path / "log"), reps=20, objection_window=600,
                         clock=lambda: now[0])
    client = LarchClient(LocalTransport(service), str(tmp_path / "vault.json"))
    client.enroll()
    client.fido2_register("a.example", presig_count=2)
    account, token = _creds(client)
    batch_id = next(iter(client.vault.data["fido2"]["batches"]))
    now[0] += 601
    with pytest.raises(ServiceError) as ei:
        service.fido2_object(account, token, {"batch_id": batch_id})
    assert ei.value.code == "REJECT_INACTIVE"


def test_audit_lists_rps_in_order(client):
    client.fido2_register("alpha.example", presig_count=4)
    client.fido2_register("beta.example", presig_count=4)
    seq = ["alpha.example", "beta.example", "alpha.example",
           "alpha.example", "beta.example"]
    for i, rp in enumerate(seq):
        client.fido2_auth(rp, _chal(i))
    report = client.audit()
    assert [e["rp"] for e in report["fido2"]] == seq
    assert report["tampered"] == []
    used = {b["batch_id"]: b["used"] for b in report["batches"]}
    assert sum(len(u) for u in used.values()) == 5
