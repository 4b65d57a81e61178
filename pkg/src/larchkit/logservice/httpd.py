"""HTTP front end for the log service.

JSON request/response for unary endpoints; the TOTP session endpoint
exchanges binary frames (see wire.py). Requests are authenticated by
bearer token plus an account id header; /enroll is the only open route.

    POST /enroll
    POST /fido2/register | /fido2/presign | /fido2/presign/object
    POST /fido2/auth/round1 | round2 | round3
    POST /totp/register | /totp/unregister
    POST /totp/session              (application/octet-stream frames)
    POST /pw/register | /pw/auth
    GET  /audit
"""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .. import wire
from .service import Failpoint, LogService, ServiceError

_STATUS = {
    "BAD_REQUEST": 400,
    "UNAUTHORIZED": 401,
    "REJECT_PROOF": 403,
    "REJECT_INTEGRITY": 403,
    "REJECT_INACTIVE": 403,
    "REJECT_TIME": 403,
    "REJECT_REPLAY": 409,
    "REJECT_STALE": 409,
    "ALREADY_ACTIVE": 409,
    "REJECT_UNKNOWN": 404,
}

_JSON_ROUTES = {
    "/fido2/register": "fido2_register",
    "/fido2/presign": "fido2_presign",
    "/fido2/presign/object": "fido2_object",
    "/fido2/auth/round1": "fido2_round1",
    "/fido2/auth/round2": "fido2_round2",
    "/fido2/auth/round3": "fido2_round3",
    "/totp/register": "totp_register",
    "/totp/unregister": "totp_unregister",
    "/pw/register": "pw_register",
    "/pw/auth": "pw_auth",
}

MAX_BODY = 64 * 1024 * 1024


class Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "larchd"

    def log_message(self, fmt, *args):  # quiet by default
        if self.server.verbose:
            super().log_message(fmt, *args)

    # --- plumbing -----------------------------------------------------------

    def _body(self):
        n = int(self.headers.get("Content-Length", 0))
        if n < 0 or n > MAX_BODY:
            raise ServiceError("BAD_REQUEST", "body too large")
        return self.rfile.read(n)

    def _json_body(self):
        try:
            return json.loads(self._body().decode())
        except (ValueError, UnicodeDecodeError):
            raise ServiceError("BAD_REQUEST", "body is not valid JSON")

    def _creds(self):
        auth = self.headers.get("Authorization", "")
        if not auth.startswith("Bearer "):
            raise ServiceError("UNAUTHORIZED", "missing bearer token")
        account = self.headers.get("X-Larch-Account", "")
        if not account:
            raise ServiceError("UNAUTHORIZED", "missing account header")
        return account, auth[len("Bearer ") :]

    def _send(self, status, content_type, payload):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, obj, status=200):
        self._send(status, "application/json", json.dumps(obj).encode())

    def _send_error_obj(self, exc):
        code = exc.code if isinstance(exc, ServiceError) else "INTERNAL"
        detail = exc.detail if isinstance(exc, ServiceError) else str(exc)
        self._send_json({"error": code, "detail": detail}, _STATUS.get(code, 500))

    # --- routing -----------------------------------------------------------

    def do_GET(self):
        try:
            if self.path != "/audit":
                raise ServiceError("REJECT_UNKNOWN", "no such endpoint")
            account, token = self._creds()
            self._send_json(self.server.service.audit(account, token))
        except ServiceError as e:
            self._send_error_obj(e)
        except Exception as e:  # pragma: no cover - defensive
            self._send_error_obj(e)

    def do_POST(self):
        try:
            if self.path == "/enroll":
                self._send_json(self.server.service.enroll(self._json_body()))
                return
            if self.path == "/totp/session":
                self._totp_session()
                return
            method = _JSON_ROUTES.get(self.path)
            if method is None:
                raise ServiceError("REJECT_UNKNOWN", "no such endpoint")
            account, token = self._creds()
            handler = getattr(self.server.service, method)
            self._send_json(handler(account, token, self._json_body()))
        except Failpoint:
            # Simulated crash: drop the connection without responding.
            self.close_connection = True
            try:
                self.connection.close()
            except OSError:
                pass
        except wire.WireError as e:
            self._send_error_obj(ServiceError("BAD_REQUEST", str(e)))
        except ServiceError as e:
            self._send_error_obj(e)
        except Exception as e:  # pragma: no cover - defensive
            self._send_error_obj(e)

    # --- totp frames ----------------------------------------------------------

    def _totp_session(self):
        account, token = self._creds()
        svc = self.server.service
        frames = wire.unpack_frames(self._body())
        if len(frames) != 1:
            raise ServiceError("BAD_REQUEST", "expected exactly one frame")
        ftype, sid, seq, body = frames[0]
        sid_hex = sid.hex()
        if ftype == wire.SESSION_OPEN:
            mech, t, n = wire.parse_open(body)
            if mech != wire.MECH_TOTP:
                raise ServiceError("BAD_REQUEST", "unsupported mechanism")
            n_srv, blob, labels, ot1 = svc.totp_open(account, token, sid_hex, t, n)
            out = wire.pack_frame(wire.GARBLE_BLOB, sid, seq,
                                  wire.garble_body(n_srv, blob, labels))
            out += wire.pack_frame(wire.OT_ROUND_1, sid, seq, ot1)
        elif ftype == wire.OT_ROUND_2:
            ot3 = svc.totp_ot2(account, token, sid_hex, body)
            out = wire.pack_frame(wire.OT_ROUND_3, sid, seq, ot3)
        elif ftype == wire.EVAL_LABELS_BACK:
            labels, ct, sig = wire.parse_labels_back(body)
            decode_map = svc.totp_finish(account, token, sid_hex, labels, ct, sig)
            out = wire.pack_frame(wire.LOG_OUTPUT_BITS, sid, seq,
                                  wire.output_body(0, decode_map))
        else:
            raise ServiceError("BAD_REQUEST", "unexpected frame type %d" % ftype)
        self._send(200, "application/octet-stream", out)


class LogHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, addr, service, verbose=False):
        super().__init__(addr, Handler)
        self.service = service
        self.verbose = verbose


def serve(addr, service, verbose=False):
    """Run a server until shut down from another thread; returns the server."""
    server = LogHTTPServer(addr, service, verbose)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
