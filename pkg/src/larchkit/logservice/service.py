"""The log service: account state, per-mechanism handlers, durability rules.

One instance owns a data directory: records.bin/.idx (append-only record
store), state.json (accounts, credentials, registration tables, presig
bookkeeping), and presigs/ (uploaded presignature halves). All responses
that release anything a client could use as a credential happen strictly
after the corresponding record and state change are fsynced.

Handlers raise ServiceError with a machine-readable code; the HTTP layer
maps codes to statuses. Failpoints let tests simulate a crash at the
worst moment (right after the durable append, before the response).
"""

import base64
import hashlib
import json
import os
import secrets
import struct
import threading
import time

from .. import ecdsa, ecdsa2p, fido2, password, totp, zkboo
from ..group import G, decode_point, scalar_from_bytes, scalar_to_bytes
from .store import MECH_FIDO2, MECH_PW, MECH_TOTP, RecordStore

ACCOUNT_BYTES = 16
SESSION_BYTES = 16
FIDO2_TS_SKEW_SECS = 300


class ServiceError(Exception):
    def __init__(self, code, detail=""):
        super().__init__(detail or code)
        self.code = code
        self.detail = detail


class Failpoint(Exception):
    """Raised by an armed failpoint; simulates dying before responding."""


def record_sig_message(mech, ts, ct):
    """What the client's identity key signs for each stored record."""
    return (
        b"larchkit-record"
        + bytes([mech])
        + struct.pack(">Q", ts)
        + struct.pack("<H", len(ct))
        + ct
    )


def _unhex(s, n=None, what="field"):
    try:
        b = bytes.fromhex(s)
    except (TypeError, ValueError):
        raise ServiceError("BAD_REQUEST", "malformed hex in %s" % what)
    if n is not None and len(b) != n:
        raise ServiceError("BAD_REQUEST", "%s must be %d bytes" % (what, n))
    return b


def _unb64(s, what="field"):
    try:
        return base64.b64decode(s, validate=True)
    except (TypeError, ValueError):
        raise ServiceError("BAD_REQUEST", "malformed base64 in %s" % what)


def _unpoint(s, what="point"):
    try:
        return decode_point(_unhex(s, 33, what))
    except ValueError:
        raise ServiceError("BAD_REQUEST", "%s is not a curve point" % what)


class LogService:
    def __init__(self, data_dir, reps=zkboo.REPS_TEST, objection_window=0,
                 totp_skew_steps=1, clock=time.time, failpoints=None):
        self.data_dir = data_dir
        self.reps = reps
        self.objection_window = objection_window
        self.totp_skew_steps = totp_skew_steps
        self.clock = clock
        self.failpoints = failpoints if failpoints is not None else set()
        os.makedirs(data_dir, exist_ok=True)
        self.store = RecordStore(data_dir)
        self.state_path = os.path.join(data_dir, "state.json")
        self.presig_dir = os.path.join(data_dir, "presigs")
        os.makedirs(self.presig_dir, exist_ok=True)
        self._lock = threading.RLock()
        self._sessions = {}
        self._state = self._load_state()

    # --- state persistence ------------------------------------------------

    def _load_state(self):
        if os.path.exists(self.state_path):
            with open(self.state_path) as f:
                return json.load(f)
        return {"version": 1, "accounts": {}, "idempotency": {}}

    def _save_state(self):
        tmp = self.state_path + ".tmp"
        with open(tmp, "w") as f:
            json.dump(self._state, f, indent=1, sort_keys=True)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, self.state_path)

    def _hit(self, name):
        if name in self.failpoints:
            raise Failpoint(name)

    # --- authentication of requests ----------------------------------------

    def _account(self, account_id, token):
        acct = self._state["accounts"].get(account_id)
        if acct is None:
            raise ServiceError("REJECT_UNKNOWN", "no such account")
        if hashlib.sha256(token.encode()).hexdigest() != acct["token_hash"]:
            raise ServiceError("UNAUTHORIZED", "bad bearer token")
        return acct

    def _authenticate(self, account_id, token):
        # Credentials are checked before any request field is parsed, so a
        # caller with a bad token sees UNAUTHORIZED, not a validation error.
        with self._lock:
            self._account(account_id, token)

    def _identity_pk(self, acct):
        return decode_point(_unhex(acct["identity_pk"], 33, "identity key"))

    def _check_record_sig(self, acct, mech, ts, ct, sig):
        msg = record_sig_message(mech, ts, ct)
        dg = ecdsa.hash_message(msg)
        if not ecdsa.verify_digest(self._identity_pk(acct), dg, sig):
            raise ServiceError("REJECT_INTEGRITY", "record signature invalid")

    # --- enroll -------------------------------------------------------------

    def enroll(self, req):
        idem = req.get("idempotency")
        if not isinstance(idem, str) or not (8 <= len(idem) <= 128):
            raise ServiceError("BAD_REQUEST", "idempotency token required")
        identity_pk = _unpoint(req.get("identity_pk", ""), "identity_pk").encode()
        cm = _unhex(req.get("cm", ""), 32, "cm")
        pw_X = _unpoint(req.get("pw_public", ""), "pw_public").encode()
        pad_seed = _unhex(req.get("pad_seed", ""), 32, "pad_seed")
        with self._lock:
            if idem in self._state["idempotency"]:
                raise ServiceError("ALREADY_ACTIVE", "enrollment already processed")
            account = secrets.token_bytes(ACCOUNT_BYTES).hex()
            token = secrets.token_urlsafe(32)
            k_pw = scalar_to_bytes(int.from_bytes(secrets.token_bytes(48), "big"))
            self._state["accounts"][account] = {
                "token_hash": hashlib.sha256(token.encode()).hexdigest(),
                "identity_pk": identity_pk.hex(),
                "cm": cm.hex(),
                "created": int(self.clock()),
                "fido2": {"creds": {}, "batches": {}},
                "totp": {"slots": []},
                "pw": {
                    "k": k_pw.hex(),
                    "public": pw_X.hex(),
                    "pad_seed": pad_seed.hex(),
                    "slots": [],
                },
            }
            self._state["idempotency"][idem] = account
            self._save_state()
            K = G * scalar_from_bytes(k_pw)
            return {
                "account_id": account,
                "token": token,
                "reps": self.reps,
                "pw_eval_public": K.encode().hex(),
            }

    # --- fido2 ---------------------------------------------------------------

    def fido2_register(self, account_id, token, req):
        self._authenticate(account_id, token)
        cred_id = req.get("cred_id", "")
        y_share = _unhex(req.get("y_share", ""), 32, "y_share")
        if not (8 <= len(cred_id) <= 64):
            raise ServiceError("BAD_REQUEST", "cred_id must be 8..64 chars")
        with self._lock:
            acct = self._account(account_id, token)
            creds = acct["fido2"]["creds"]
            if cred_id in creds:
                raise ServiceError("ALREADY_ACTIVE", "credential exists")
            creds[cred_id] = {"y_share": y_share.hex()}
            self._save_state()
        return {}

    def fido2_presign(self, account_id, token, req):
        self._authenticate(account_id, token)
        cred_id = req.get("cred_id", "")
        batch_id = req.get("batch_id", "")
        deriv_seed = _unhex(req.get("deriv_seed", ""), 32, "deriv_seed")
        blob = _unb64(req.get("file", ""), "file")
        if not (8 <= len(batch_id) <= 64):
            raise ServiceError("BAD_REQUEST", "batch_id must be 8..64 chars")
        try:
            start, halves = ecdsa2p.parse_log_file(blob)
        except ValueError as e:
            raise ServiceError("BAD_REQUEST", str(e))
        with self._lock:
            acct = self._account(account_id, token)
            if cred_id not in acct["fido2"]["creds"]:
                raise ServiceError("REJECT_UNKNOWN", "no such credential")
            batches = acct["fido2"]["batches"]
            if batch_id in batches:
                raise ServiceError("ALREADY_ACTIVE", "batch id already uploaded")
            path = os.path.join(self.presig_dir, "%s_%s.bin" % (account_id, batch_id))
            with open(path, "wb") as f:
                f.write(blob)
                f.flush()
                os.fsync(f.fileno())
            now = int(self.clock())
            batches[batch_id] = {
                "cred_id": cred_id,
                "deriv_seed": deriv_seed.hex(),
                "start": start,
                "count": len(halves),
                "uploaded": now,
                "active_at": now + self.objection_window,
                "used": [],
            }
            self._save_state()
            return {"active_at": batches[batch_id]["active_at"]}

    def fido2_object(self, account_id, token, req):
        """Cancel a pending batch inside its objection window."""
        self._authenticate(account_id, token)
        batch_id = req.get("batch_id", "")
        with self._lock:
            acct = self._account(account_id, token)
            batches = acct["fido2"]["batches"]
            if batch_id not in batches:
                raise ServiceError("REJECT_UNKNOWN", "no such batch")
            b = batches[batch_id]
            if int(self.clock()) >= b["active_at"]:
                raise ServiceError("REJECT_INACTIVE", "objection window has closed")
            if b["used"]:
                raise ServiceError("REJECT_REPLAY", "batch already in use")
            del batches[batch_id]
            path = os.path.join(self.presig_dir, "%s_%s.bin" % (account_id, batch_id))
            if os.path.exists(path):
                os.remove(path)
            self._save_state()
        return {"cancelled": batch_id}

    def fido2_round1(self, account_id, token, req):
        self._authenticate(account_id, token)
        cred_id = req.get("cred_id", "")
        batch_id = req.get("batch_id", "")
        index = req.get("index")
        ts = req.get("ts")
        if not isinstance(index, int) or not isinstance(ts, int):
            raise ServiceError("BAD_REQUEST", "index and ts must be integers")
        ct = _unb64(req.get("ct", ""), "ct")
        dgst = _unhex(req.get("dgst", ""), 32, "dgst")
        proof = _unb64(req.get("proof", ""), "proof")
        sig = _unb64(req.get("sig", ""), "sig")
        d1 = scalar_from_bytes(_unhex(req.get("d1", ""), 32, "d1"))
        e1 = scalar_from_bytes(_unhex(req.get("e1", ""), 32, "e1"))
        if len(ct) != fido2.CT_BYTES:
            raise ServiceError("BAD_REQUEST", "ct must be %d bytes" % fido2.CT_BYTES)

        with self._lock:
            acct = self._account(account_id, token)
            cm = _unhex(acct["cm"], 32, "cm")
            if cred_id not in acct["fido2"]["creds"]:
                raise ServiceError("REJECT_UNKNOWN", "no such credential")
            batch = acct["fido2"]["batches"].get(batch_id)
            if batch is None:
                raise ServiceError("REJECT_UNKNOWN", "no such batch")
            now = int(self.clock())
            if now < batch["active_at"]:
                raise ServiceError("REJECT_INACTIVE", "batch still in objection window")
            if abs(now - ts) > FIDO2_TS_SKEW_SECS:
                raise ServiceError("REJECT_TIME", "timestamp outside window")
            if not (batch["start"] <= index < batch["start"] + batch["count"]):
                raise ServiceError("REJECT_UNKNOWN", "presignature index out of range")
            if index in batch["used"]:
                raise ServiceError("REJECT_REPLAY", "presignature already consumed")
            self._check_record_sig(acct, MECH_FIDO2, ts, ct, sig)
            y_share = scalar_from_bytes(_unhex(acct["fido2"]["creds"][cred_id]["y_share"], 32, "y"))
            deriv_seed = _unhex(batch["deriv_seed"], 32, "deriv_seed")

        # Proof verification happens outside the lock; it is stateless.
        if not fido2.verify_auth(cm, ct, dgst, proof, self.reps):
            raise ServiceError("REJECT_PROOF", "statement proof rejected")

        with self._lock:
            acct = self._account(account_id, token)
            batch = acct["fido2"]["batches"].get(batch_id)
            if batch is None:
                raise ServiceError("REJECT_UNKNOWN", "batch vanished")
            if index in batch["used"]:
                raise ServiceError("REJECT_REPLAY", "presignature already consumed")
            path = os.path.join(self.presig_dir, "%s_%s.bin" % (account_id, batch_id))
            with open(path, "rb") as f:
                blob = f.read()
            start, halves = ecdsa2p.parse_log_file(blob)
            half = halves[index - start]
            batch["used"].append(index)
            self._save_state()
            # The record is durable before any share leaves this process.
            self.store.append(bytes.fromhex(account_id), MECH_FIDO2, ts, ct + sig)
            self._hit("fido2_after_append")
            presig = ecdsa2p.LogPresig(index, half, deriv_seed)
            signer = ecdsa2p.LogSigning(presig, y_share, fido2.digest_scalar(dgst), d1, e1)
            sid = secrets.token_bytes(SESSION_BYTES).hex()
            self._sessions[(account_id, sid)] = ("fido2", signer, self.clock())
            d0, e0, s0 = signer.round1_payload()
            return {
                "sid": sid,
                "d0": scalar_to_bytes(d0).hex(),
                "e0": scalar_to_bytes(e0).hex(),
                "s0": scalar_to_bytes(s0).hex(),
            }

    def _session(self, account_id, sid, kind):
        key = (account_id, sid)
        ent = self._sessions.get(key)
        if ent is None or ent[0] != kind:
            raise ServiceError("REJECT_UNKNOWN", "no such session")
        return ent[1]

    def fido2_round2(self, account_id, token, req):
        self._authenticate(account_id, token)
        sid = req.get("sid", "")
        s = scalar_from_bytes(_unhex(req.get("s", ""), 32, "s"))
        tag = _unhex(req.get("commit", ""), 32, "commit")
        with self._lock:
            self._account(account_id, token)
            signer = self._session(account_id, sid, "fido2")
            sigma0, tau0 = signer.round2(s, tag)
            return {
                "sigma0": scalar_to_bytes(sigma0).hex(),
                "tau0": scalar_to_bytes(tau0).hex(),
            }

    def fido2_round3(self, account_id, token, req):
        self._authenticate(account_id, token)
        sid = req.get("sid", "")
        sigma1 = scalar_from_bytes(_unhex(req.get("sigma1", ""), 32, "sigma1"))
        tau1 = scalar_from_bytes(_unhex(req.get("tau1", ""), 32, "tau1"))
        nonce = _unhex(req.get("nonce", ""), 32, "nonce")
        with self._lock:
            self._account(account_id, token)
            signer = self._session(account_id, sid, "fido2")
            try:
                signer.round3(sigma1, tau1, nonce)
            except ecdsa2p.TamperAbort as e:
                raise ServiceError("REJECT_INTEGRITY", str(e))
            finally:
                self._sessions.pop((account_id, sid), None)
            return {"ok": True}

    # --- totp -----------------------------------------------------------------

    def totp_register(self, account_id, token, req):
        self._authenticate(account_id, token)
        sid = _unhex(req.get("id", ""), totp.ID_BYTES, "id")
        klog = _unhex(req.get("klog", ""), totp.KEY_BYTES, "klog")
        with self._lock:
            acct = self._account(account_id, token)
            slots = acct["totp"]["slots"]
            if any(s["id"] == sid.hex() for s in slots):
                raise ServiceError("ALREADY_ACTIVE", "site already registered")
            slots.append({"id": sid.hex(), "klog": klog.hex()})
            self._save_state()
        return {"slots": len(slots)}

    def totp_unregister(self, account_id, token, req):
        self._authenticate(account_id, token)
        sid = _unhex(req.get("id", ""), totp.ID_BYTES, "id")
        with self._lock:
            acct = self._account(account_id, token)
            slots = acct["totp"]["slots"]
            keep = [s for s in slots if s["id"] != sid.hex()]
            if len(keep) == len(slots):
                raise ServiceError("REJECT_UNKNOWN", "site not registered")
            acct["totp"]["slots"] = keep
            self._save_state()
        return {"slots": len(keep)}

    def totp_open(self, account_id, token, sid, t, n):
        with self._lock:
            acct = self._account(account_id, token)
            slots = [
                (bytes.fromhex(s["id"]), bytes.fromhex(s["klog"]))
                for s in acct["totp"]["slots"]
            ]
            if not slots:
                raise ServiceError("REJECT_UNKNOWN", "no registered sites")
            now_step = totp.time_step(self.clock())
            if abs(t - now_step) > self.totp_skew_steps:
                raise ServiceError("REJECT_TIME", "time counter outside window")
            padded = totp.pad_slots(slots)
            if n != len(padded):
                raise ServiceError("REJECT_STALE", "table size is %d" % len(padded))
            cm = _unhex(acct["cm"], 32, "cm")
            if (account_id, sid) in self._sessions:
                raise ServiceError("ALREADY_ACTIVE", "session id in use")
        session = totp.LogSession(padded, cm, t)  # heavy garbling outside lock
        with self._lock:
            self._sessions[(account_id, sid)] = ("totp", (session, t), self.clock())
        return session.open_payload()

    def totp_ot2(self, account_id, token, sid, msg):
        with self._lock:
            self._account(account_id, token)
            session, _ = self._session(account_id, sid, "totp")
        return session.ot_round3(msg)

    def totp_finish(self, account_id, token, sid, labels_back, ct, sig):
        with self._lock:
            acct = self._account(account_id, token)
            session, t = self._session(account_id, sid, "totp")
        try:
            decoded_ct, valid = session.decode_back(labels_back)
        except Exception:
            raise ServiceError("REJECT_INTEGRITY", "output labels are not ours")
        if not valid:
            raise ServiceError("REJECT_UNKNOWN", "evaluation did not validate")
        if decoded_ct != ct:
            raise ServiceError("REJECT_INTEGRITY", "ciphertext mismatch")
        with self._lock:
            acct = self._account(account_id, token)
            ts = t * totp.STEP_SECS
            self._check_record_sig(acct, MECH_TOTP, ts, ct, sig)
            self.store.append(bytes.fromhex(account_id), MECH_TOTP, ts, ct + sig)
            self._hit("totp_after_append")
            self._sessions.pop((account_id, sid), None)
        return session.code_decode_map()

    # --- passwords ---------------------------------------------------------------

    def pw_register(self, account_id, token, req):
        self._authenticate(account_id, token)
        point = _unpoint(req.get("point", ""), "point")
        with self._lock:
            acct = self._account(account_id, token)
            pw_state = acct["pw"]
            enc = point.encode().hex()
            if enc in pw_state["slots"]:
                raise ServiceError("ALREADY_ACTIVE", "site already registered")
            k = scalar_from_bytes(bytes.fromhex(pw_state["k"]))
            gamma = password.register_eval(k, point)
            pw_state["slots"].append(enc)
            self._save_state()
            return {"gamma": gamma.encode().hex(), "slot": len(pw_state["slots"]) - 1,
                    "version": len(pw_state["slots"])}

    def pw_auth(self, account_id, token, req):
        self._authenticate(account_id, token)
        ts = req.get("ts")
        if not isinstance(ts, int):
            raise ServiceError("BAD_REQUEST", "ts must be an integer")
        ct = _unhex(req.get("ct", ""), password.CT_BYTES, "ct")
        pf1 = _unb64(req.get("proof1", ""), "proof1")
        pf2 = _unb64(req.get("proof2", ""), "proof2")
        sig = _unb64(req.get("sig", ""), "sig")
        with self._lock:
            acct = self._account(account_id, token)
            now = int(self.clock())
            if abs(now - ts) > FIDO2_TS_SKEW_SECS:
                raise ServiceError("REJECT_TIME", "timestamp outside window")
            self._check_record_sig(acct, MECH_PW, ts, ct, sig)
            pw_state = acct["pw"]
            k = scalar_from_bytes(bytes.fromhex(pw_state["k"]))
            X = decode_point(bytes.fromhex(pw_state["public"]))
            pad_seed = bytes.fromhex(pw_state["pad_seed"])
            slots = [decode_point(bytes.fromhex(p)) for p in pw_state["slots"]]
            version = len(slots)
        if not slots:
            raise ServiceError("REJECT_UNKNOWN", "no registered sites")
        context = self._pw_context(account_id, ts)
        try:
            beta = password.log_auth_eval(
                k, X, slots, pad_seed, version, ct, pf1, pf2, context
            )
        except password.PwError as e:
            raise ServiceError("REJECT_PROOF", str(e))
        with self._lock:
            self.store.append(bytes.fromhex(account_id), MECH_PW, ts, ct + sig)
            self._hit("pw_after_append")
        return {"beta": beta.encode().hex(), "version": version}

    @staticmethod
    def _pw_context(account_id, ts):
        return b"larchkit-pw-auth" + bytes.fromhex(account_id) + struct.pack(">Q", ts)

    # --- audit ----------------------------------------------------------------

    def audit(self, account_id, token):
        with self._lock:
            acct = self._account(account_id, token)
            batches = [
                dict(batch_id=bid, cred_id=b["cred_id"], start=b["start"],
                     count=b["count"], uploaded=b["uploaded"],
                     active_at=b["active_at"], used=sorted(b["used"]))
                for bid, b in acct["fido2"]["batches"].items()
            ]
        records = []
        for rec in self.store.records(account=bytes.fromhex(account_id)):
            records.append({
                "seq": rec.seq,
                "mech": rec.mech,
                "ts": rec.ts,
                "body": base64.b64encode(rec.body).decode(),
            })
        return {"records": records, "batches": batches, "reps": self.reps}

    def verify_integrity(self, account_id=None):
        """Check each stored record's framing and identity signature."""
        bad = []
        for rec in self.store.records():
            acct_hex = rec.account.hex()
            if account_id is not None and acct_hex != account_id:
                continue
            acct = self._state["accounts"].get(acct_hex)
            if acct is None:
                bad.append((rec.seq, "unknown account"))
                continue
            ct_len = {MECH_FIDO2: fido2.CT_BYTES, MECH_TOTP: totp.CT_BYTES,
                      MECH_PW: password.CT_BYTES}.get(rec.mech)
            if ct_len is None or len(rec.body) != ct_len + 64:
                bad.append((rec.seq, "bad framing"))
                continue
            ct, sig = rec.body[:ct_len], rec.body[ct_len:]
            try:
                dg = ecdsa.hash_message(record_sig_message(rec.mech, rec.ts, ct))
                ok = ecdsa.verify_digest(self._identity_pk(acct), dg, sig)
            except Exception:
                ok = False
            if not ok:
                bad.append((rec.seq, "signature check failed"))
        return bad
