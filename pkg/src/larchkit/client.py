"""Client orchestration: enrollment, per-mechanism flows, audit.

LarchClient drives the full protocol against a transport. Two transports
exist: LocalTransport calls a LogService instance in-process (tests,
benchmarks), HttpTransport speaks to a running daemon. The client owns the
vault and is the only writer of client secrets; everything the log gets is
produced here.
"""

import base64
import json
import secrets
import struct
import threading
import time
import urllib.error
import urllib.request

from . import ecdsa, ecdsa2p, fido2, password, totp, wire
from .group import G, Q, decode_point, rand_scalar, scalar_from_bytes, scalar_to_bytes
from .logservice.service import ServiceError, record_sig_message
from .sym import rand_bytes
from .vault import Vault

DEFAULT_PRESIG_COUNT = 64


class ClientError(Exception):
    pass


class TransportError(Exception):
    """Could not reach the log service at all."""


class LocalTransport:
    """Direct in-process calls against a LogService."""

    def __init__(self, service):
        self.service = service

    def enroll(self, req):
        return self.service.enroll(req)

    def call(self, name, account, token, req):
        return getattr(self.service, name)(account, token, req)

    def audit(self, account, token):
        return self.service.audit(account, token)

    def totp_open(self, account, token, sid, t, n):
        return self.service.totp_open(account, token, sid, t, n)

    def totp_ot2(self, account, token, sid, msg):
        return self.service.totp_ot2(account, token, sid, msg)

    def totp_finish(self, account, token, sid, labels, ct, sig):
        return self.service.totp_finish(account, token, sid, labels, ct, sig)


_HTTP_ROUTES = {
    "fido2_register": "/fido2/register",
    "fido2_presign": "/fido2/presign",
    "fido2_object": "/fido2/presign/object",
    "fido2_round1": "/fido2/auth/round1",
    "fido2_round2": "/fido2/auth/round2",
    "fido2_round3": "/fido2/auth/round3",
    "totp_register": "/totp/register",
    "totp_unregister": "/totp/unregister",
    "pw_register": "/pw/register",
    "pw_auth": "/pw/auth",
}


class HttpTransport:
    """Talks to a running larchd over HTTP. Raises ServiceError on protocol
    rejections (same codes as the in-process service) and TransportError when
    the daemon is unreachable."""

    def __init__(self, base_url, timeout=120):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _request(self, path, data, headers, method):
        req = urllib.request.Request(self.base_url + path, data=data,
                                     headers=headers, method=method)
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.read()
        except urllib.error.HTTPError as e:
            body = e.read()
            try:
                err = json.loads(body.decode())
                raise ServiceError(err["error"], err.get("detail", "")) from None
            except (ValueError, KeyError, UnicodeDecodeError):
                raise ServiceError("BAD_REQUEST",
                                   "http %d from log" % e.code) from None
        except (urllib.error.URLError, ConnectionError, TimeoutError, OSError) as e:
            raise TransportError("log service unreachable: %s" % e) from None

    def _json(self, path, obj, account=None, token=None, method="POST"):
        headers = {"Content-Type": "application/json"}
        if token is not None:
            headers["Authorization"] = "Bearer " + token
            headers["X-Larch-Account"] = account
        data = json.dumps(obj).encode() if obj is not None else None
        return json.loads(self._request(path, data, headers, method).decode())

    def _frame(self, account, token, ftype, sid, body):
        headers = {
            "Content-Type": "application/octet-stream",
            "Authorization": "Bearer " + token,
            "X-Larch-Account": account,
        }
        data = wire.pack_frame(ftype, bytes.fromhex(sid), 0, body)
        raw = self._request("/totp/session", data, headers, "POST")
        return wire.unpack_frames(raw)

    def enroll(self, req):
        return self._json("/enroll", req)

    def call(self, name, account, token, req):
        return self._json(_HTTP_ROUTES[name], req, account, token)

    def audit(self, account, token):
        return self._json("/audit", None, account, token, method="GET")

    def totp_open(self, account, token, sid, t, n):
        frames = self._frame(account, token, wire.SESSION_OPEN, sid,
                             wire.open_body(wire.MECH_TOTP, t, n))
        blob = labels = ot1 = None
        n_srv = 0
        for ftype, _, _, body in frames:
            if ftype == wire.GARBLE_BLOB:
                n_srv, blob, labels = wire.parse_garble(body)
            elif ftype == wire.OT_ROUND_1:
                ot1 = body
        if blob is None or ot1 is None:
            raise ClientError("log reply is missing session frames")
        return n_srv, blob, labels, ot1

    def totp_ot2(self, account, token, sid, msg):
        frames = self._frame(account, token, wire.OT_ROUND_2, sid, msg)
        for ftype, _, _, body in frames:
            if ftype == wire.OT_ROUND_3:
                return body
        raise ClientError("log reply is missing the OT round")

    def totp_finish(self, account, token, sid, labels, ct, sig):
        frames = self._frame(account, token, wire.EVAL_LABELS_BACK, sid,
                             wire.labels_back_body(labels, ct, sig))
        for ftype, _, _, body in frames:
            if ftype == wire.LOG_OUTPUT_BITS:
                status, decode_map = wire.parse_output(body)
                if status != 0:
                    raise ServiceError("REJECT_INTEGRITY",
                                       "log refused to release the code")
                return decode_map
        raise ClientError("log reply is missing the output frame")


class LarchClient:
    def __init__(self, transport, vault):
        self.transport = transport
        self.vault = vault if isinstance(vault, Vault) else Vault(vault)
        self._alloc_lock = threading.Lock()

    # --- enrollment -------------------------------------------------------

    def enroll(self):
        if self.vault.enrolled():
            raise ClientError("vault is already enrolled")
        identity_sk, identity_pk = ecdsa.keygen()
        archive_k = rand_bytes(32)
        archive_r = rand_bytes(32)
        pw_x = rand_scalar(nonzero=True)
        pad_seed = rand_bytes(32)
        req = {
            "idempotency": secrets.token_urlsafe(16),
            "identity_pk": identity_pk.encode().hex(),
            "cm": fido2.archive_commitment(archive_k, archive_r).hex(),
            "pw_public": (G * pw_x).encode().hex(),
            "pad_seed": pad_seed.hex(),
        }
        resp = self.transport.enroll(req)
        with self.vault.update() as v:
            v["account_id"] = resp["account_id"]
            v["token"] = resp["token"]
            v["reps"] = resp["reps"]
            v["identity_sk"] = scalar_to_bytes(identity_sk).hex()
            v["archive_k"] = archive_k.hex()
            v["archive_r"] = archive_r.hex()
            v["pw"]["x"] = scalar_to_bytes(pw_x).hex()
            v["pw"]["eval_public"] = resp["pw_eval_public"]
            v["pw"]["pad_seed"] = pad_seed.hex()
        return resp["account_id"]

    def _creds(self):
        v = self.vault.data
        self.vault.require_enrolled()
        return v["account_id"], v["token"]

    def _reps(self):
        return self.vault.data["reps"]

    def _sign_record(self, mech, ts, ct):
        sk = scalar_from_bytes(bytes.fromhex(self.vault.data["identity_sk"]))
        dg = ecdsa.hash_message(record_sig_message(mech, ts, ct))
        return ecdsa.sig_to_bytes(ecdsa.sign_digest(sk, dg))

    # --- fido2 --------------------------------------------------------------

    def fido2_register(self, rp_name, presig_count=DEFAULT_PRESIG_COUNT):
        account, token = self._creds()
        if rp_name in self.vault.data["fido2"]["creds"]:
            raise ClientError("credential for %r already exists" % rp_name)
        x_share = rand_scalar(nonzero=True)
        y_share = rand_scalar(nonzero=True)
        pk = G * ((x_share + y_share) % Q)
        cred_id = secrets.token_hex(8)
        self.transport.call("fido2_register", account, token,
                            {"cred_id": cred_id, "y_share": scalar_to_bytes(y_share).hex()})
        with self.vault.update() as v:
            v["fido2"]["creds"][rp_name] = {
                "cred_id": cred_id,
                "x_share": scalar_to_bytes(x_share).hex(),
                "pk": pk.encode().hex(),
            }
        self.fido2_replenish(rp_name, presig_count)
        return pk

    def fido2_replenish(self, rp_name, count=DEFAULT_PRESIG_COUNT):
        """Generate and upload a fresh presignature batch."""
        account, token = self._creds()
        cred = self.vault.data["fido2"]["creds"].get(rp_name)
        if cred is None:
            raise ClientError("no credential for %r" % rp_name)
        start = self._next_presig_start()
        batch, ks = ecdsa2p.PresigBatch.generate(count, start_index=start)
        batch_id = secrets.token_hex(8)
        resp = self.transport.call("fido2_presign", account, token, {
            "cred_id": cred["cred_id"],
            "batch_id": batch_id,
            "deriv_seed": batch.deriv_seed.hex(),
            "file": base64.b64encode(batch.log_file(ks)).decode(),
        })
        with self.vault.update() as v:
            v["fido2"]["batches"][batch_id] = {
                "cred_id": cred["cred_id"],
                "batch_seed": batch.batch_seed.hex(),
                "deriv_seed": batch.deriv_seed.hex(),
                "start": start,
                "ts": [scalar_to_bytes(t).hex() for t in batch.ts],
                "next": 0,
                "active_at": resp["active_at"],
            }
        return batch_id

    def _next_presig_start(self):
        top = 0
        for b in self.vault.data["fido2"]["batches"].values():
            top = max(top, b["start"] + len(b["ts"]))
        return top

    def _allocate_presig(self, cred_id):
        """Reserve the next unused presignature index for this credential."""
        with self._alloc_lock:
            with self.vault.update() as v:
                now = int(time.time())
                for batch_id, b in sorted(v["fido2"]["batches"].items()):
                    if b["cred_id"] != cred_id or b["next"] >= len(b["ts"]):
                        continue
                    if now < b.get("active_at", 0):
                        continue
                    off = b["next"]
                    b["next"] = off + 1
                    index = b["start"] + off
                    presig = ecdsa2p.PresigBatch(
                        bytes.fromhex(b["batch_seed"]),
                        bytes.fromhex(b["deriv_seed"]),
                        [scalar_from_bytes(bytes.fromhex(t)) for t in b["ts"]],
                        b["start"],
                    ).client_presig(index)
                    return batch_id, index, presig
        raise ClientError("no active presignatures left; replenish first")

    def fido2_auth(self, rp_name, challenge, ts=None):
        """Returns (signature bytes, pk) after a full three-round exchange."""
        account, token = self._creds()
        v = self.vault.data
        cred = v["fido2"]["creds"].get(rp_name)
        if cred is None:
            raise ClientError("no credential for %r" % rp_name)
        if len(challenge) != fido2.CHAL_BYTES:
            raise ClientError("challenge must be %d bytes" % fido2.CHAL_BYTES)
        k = bytes.fromhex(v["archive_k"])
        r = bytes.fromhex(v["archive_r"])
        rp_id = fido2.rp_identifier(rp_name)
        batch_id, index, presig = self._allocate_presig(cred["cred_id"])
        ct, dgst, proof = fido2.prove_auth(k, r, rp_id, challenge, self._reps())
        if ts is None:
            ts = int(time.time())
        sig_rec = self._sign_record(1, ts, ct)
        signer = ecdsa2p.ClientSigning(
            presig, scalar_from_bytes(bytes.fromhex(cred["x_share"])),
            fido2.digest_scalar(dgst))
        d1, e1 = signer.round1_payload()
        r1 = self.transport.call("fido2_round1", account, token, {
            "cred_id": cred["cred_id"], "batch_id": batch_id, "index": index,
            "ts": ts, "dgst": dgst.hex(),
            "ct": base64.b64encode(ct).decode(),
            "proof": base64.b64encode(proof).decode(),
            "sig": base64.b64encode(sig_rec).decode(),
            "d1": scalar_to_bytes(d1).hex(), "e1": scalar_to_bytes(e1).hex(),
        })
        s, tag = signer.round2(
            scalar_from_bytes(bytes.fromhex(r1["d0"])),
            scalar_from_bytes(bytes.fromhex(r1["e0"])),
            scalar_from_bytes(bytes.fromhex(r1["s0"])),
        )
        r2 = self.transport.call("fido2_round2", account, token, {
            "sid": r1["sid"], "s": scalar_to_bytes(s).hex(), "commit": tag.hex(),
        })
        sig = signer.finish(
            scalar_from_bytes(bytes.fromhex(r2["sigma0"])),
            scalar_from_bytes(bytes.fromhex(r2["tau0"])),
        )
        sigma1, tau1, nonce = signer.round3_payload()
        self.transport.call("fido2_round3", account, token, {
            "sid": r1["sid"], "sigma1": scalar_to_bytes(sigma1).hex(),
            "tau1": scalar_to_bytes(tau1).hex(), "nonce": nonce.hex(),
        })
        pk = decode_point(bytes.fromhex(cred["pk"]))
        if not ecdsa.verify_digest(pk, fido2.digest_scalar(dgst), sig):
            raise ClientError("recombined signature failed local verification")
        return sig, pk

    # --- totp ------------------------------------------------------------------

    def totp_register(self, site_name, key):
        account, token = self._creds()
        if site_name in self.vault.data["totp"]["sites"]:
            raise ClientError("site %r already registered" % site_name)
        site_id = totp.site_identifier(site_name)
        kclient, klog = totp.split_key(key)
        self.transport.call("totp_register", account, token,
                            {"id": site_id.hex(), "klog": klog.hex()})
        with self.vault.update() as v:
            v["totp"]["sites"][site_name] = {
                "id": site_id.hex(), "kclient": kclient.hex(),
            }

    def totp_unregister(self, site_name):
        account, token = self._creds()
        site = self.vault.data["totp"]["sites"].get(site_name)
        if site is None:
            raise ClientError("site %r not registered" % site_name)
        self.transport.call("totp_unregister", account, token, {"id": site["id"]})
        with self.vault.update() as v:
            v["totp"]["sites"].pop(site_name, None)

    def totp_code(self, site_name, t=None):
        """Run the joint computation; returns the 6-digit code as int."""
        account, token = self._creds()
        v = self.vault.data
        site = v["totp"]["sites"].get(site_name)
        if site is None:
            raise ClientError("site %r not registered" % site_name)
        if t is None:
            t = totp.time_step(time.time())
        n = totp.pad_length_for(len(v["totp"]["sites"]))
        session = totp.ClientSession(
            bytes.fromhex(v["archive_k"]), bytes.fromhex(v["archive_r"]),
            bytes.fromhex(site["id"]), bytes.fromhex(site["kclient"]))
        sid = secrets.token_bytes(16).hex()
        n_srv, blob, log_labels, ot1 = self.transport.totp_open(account, token, sid, t, n)
        ot2 = session.ot_round2(ot1)
        ot3 = self.transport.totp_ot2(account, token, sid, ot2)
        labels_back = session.evaluate(n_srv, blob, log_labels, ot3)
        ct = session.record_ct()
        sig = self._sign_record(2, t * totp.STEP_SECS, ct)
        decode_map = self.transport.totp_finish(account, token, sid, labels_back, ct, sig)
        return session.decode_code(decode_map)

    # --- passwords ----------------------------------------------------------------

    def pw_register(self, site_name, legacy_secret=None):
        """Register a site; returns (password, pw element).

        With legacy_secret the site keeps its existing password: later
        authentications return that exact string instead of a rendering.
        """
        account, token = self._creds()
        v = self.vault.data
        if site_name in v["pw"]["sites"]:
            raise ClientError("site %r already registered" % site_name)
        point = password.register_point(site_name)
        resp = self.transport.call("pw_register", account, token,
                                   {"point": point.encode().hex()})
        gamma = decode_point(bytes.fromhex(resp["gamma"]))
        entry = {"slot": resp["slot"]}
        if legacy_secret is not None:
            pw_el = password.legacy_element(legacy_secret)
            k_id = password.legacy_kid(pw_el, gamma)
            entry["legacy"] = password.wrap_legacy(pw_el, legacy_secret).hex()
            shown = legacy_secret
        else:
            k_id = password.fresh_kid()
            pw_el = password.registered_pw(k_id, gamma)
            shown = password.render_password(pw_el)
        entry["k_id"] = k_id.encode().hex()
        with self.vault.update() as vv:
            vv["pw"]["sites"][site_name] = entry
        return shown, pw_el

    def pw_auth(self, site_name, ts=None):
        """Recover the site password; returns (rendered, element)."""
        account, token = self._creds()
        v = self.vault.data
        site = v["pw"]["sites"].get(site_name)
        if site is None:
            raise ClientError("site %r not registered" % site_name)
        x = scalar_from_bytes(bytes.fromhex(v["pw"]["x"]))
        X = G * x
        K = decode_point(bytes.fromhex(v["pw"]["eval_public"]))
        pad_seed = bytes.fromhex(v["pw"]["pad_seed"])
        slots = [None] * len(v["pw"]["sites"])
        for name, ent in v["pw"]["sites"].items():
            slots[ent["slot"]] = password.register_point(name)
        if any(p is None for p in slots):
            raise ClientError("vault slot table is inconsistent")
        version = len(slots)
        if ts is None:
            ts = int(time.time())
        context = b"larchkit-pw-auth" + bytes.fromhex(account) + struct.pack(">Q", ts)
        ct, pf1, pf2, r = password.make_auth(
            x, X, slots, pad_seed, version, site["slot"], context)
        sig = self._sign_record(3, ts, ct)
        resp = self.transport.call("pw_auth", account, token, {
            "ts": ts, "ct": ct.hex(),
            "proof1": base64.b64encode(pf1).decode(),
            "proof2": base64.b64encode(pf2).decode(),
            "sig": base64.b64encode(sig).decode(),
        })
        beta = decode_point(bytes.fromhex(resp["beta"]))
        k_id = decode_point(bytes.fromhex(site["k_id"]))
        pw_el = password.finish_auth(k_id, beta, K, x, r)
        if "legacy" in site:
            return password.unwrap_legacy(pw_el, bytes.fromhex(site["legacy"])), pw_el
        return password.render_password(pw_el), pw_el

    # --- audit -----------------------------------------------------------------

    def audit(self):
        """Fetch, verify, and decrypt this account's records.

        Returns dict with per-mechanism ordered entries and the presignature
        batch table. Every record's identity signature is re-checked here;
        a mismatch marks the entry tampered.
        """
        account, token = self._creds()
        v = self.vault.data
        resp = self.transport.audit(account, token)
        k = bytes.fromhex(v["archive_k"])
        pw_x = scalar_from_bytes(bytes.fromhex(v["pw"]["x"]))
        identity_pk = G * scalar_from_bytes(bytes.fromhex(v["identity_sk"]))

        rp_names = {fido2.rp_identifier(n).hex(): n for n in v["fido2"]["creds"]}
        totp_names = {s["id"]: n for n, s in v["totp"]["sites"].items()}
        pw_points = {password.register_point(n).encode().hex(): n
                     for n in v["pw"]["sites"]}

        out = {"fido2": [], "totp": [], "pw": [], "batches": resp["batches"],
               "tampered": []}
        ct_lens = {1: fido2.CT_BYTES, 2: totp.CT_BYTES, 3: password.CT_BYTES}
        for rec in resp["records"]:
            body = base64.b64decode(rec["body"])
            mech, ts = rec["mech"], rec["ts"]
            ct_len = ct_lens.get(mech)
            entry = {"seq": rec["seq"], "ts": ts}
            if ct_len is None or len(body) != ct_len + 64:
                out["tampered"].append(rec["seq"])
                continue
            ct, sig = body[:ct_len], body[ct_len:]
            dg = ecdsa.hash_message(record_sig_message(mech, ts, ct))
            if not ecdsa.verify_digest(identity_pk, dg, sig):
                out["tampered"].append(rec["seq"])
                continue
            if mech == 1:
                rp_id = fido2.decrypt_record(k, ct)
                entry["rp"] = rp_names.get(rp_id.hex(), "<unknown>")
                out["fido2"].append(entry)
            elif mech == 2:
                site_id = totp.decrypt_record(k, ct)
                entry["rp"] = totp_names.get(site_id.hex(), "<unknown>")
                out["totp"].append(entry)
            else:
                point = password.decrypt_record(pw_x, ct)
                entry["rp"] = pw_points.get(point.encode().hex(), "<unknown>")
                out["pw"].append(entry)
        return out
