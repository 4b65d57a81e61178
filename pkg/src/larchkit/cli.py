"""larchctl: drive the client side from a shell.

    larchctl enroll
    larchctl register --mech fido2 --rp github.com [--presigs 64]
    larchctl register --mech totp --rp aws --totp-key <hex, 1..32 bytes>
    larchctl register --mech pw --rp example.org [--import-pw SECRET]
    larchctl auth --mech fido2 --rp github.com [--challenge <64 hex chars>]
    larchctl auth --mech totp --rp aws [--time UNIX_SECONDS]
    larchctl auth --mech pw --rp example.org
    larchctl verify-sig --rp github.com --challenge HEX --signature HEX
    larchctl replenish --rp github.com [--presigs 64]
    larchctl unregister --mech totp --rp aws
    larchctl audit [--json]

The log URL comes from --log-url or LARCH_LOG_URL; the vault path from
--vault or LARCH_VAULT. Exit codes: 0 success, 1 the log or the protocol
refused, 2 audit saw records it cannot vouch for, 64 bad usage.
"""

import argparse
import json
import os
import sys

from . import ecdsa, fido2, totp
from .client import ClientError, HttpTransport, LarchClient, TransportError
from .group import decode_point
from .logservice.service import ServiceError
from .sym import rand_bytes
from .vault import VaultError

EX_PROTOCOL = 1
EX_AUDIT = 2
EX_USAGE = 64

DEFAULT_URL = "http://127.0.0.1:7700"
DEFAULT_VAULT = os.path.join(os.path.expanduser("~"), ".larch", "vault.json")


class UsageError(Exception):
    pass


def _fail(msg, code=EX_PROTOCOL):
    print("larchctl: %s" % msg, file=sys.stderr)
    return code


def _hex_arg(text, what, length=None):
    try:
        data = bytes.fromhex(text)
    except ValueError:
        raise UsageError("%s must be hex" % what)
    if length is not None and len(data) != length:
        raise UsageError("%s must be %d bytes of hex" % (what, length))
    return data


def cmd_enroll(cl, args):
    account = cl.enroll()
    print("enrolled account %s" % account)
    print("vault written to %s" % cl.vault.path)
    return 0


def cmd_register(cl, args):
    if args.mech == "fido2":
        pk = cl.fido2_register(args.rp, presig_count=args.presigs)
        print(pk.encode().hex())
    elif args.mech == "totp":
        if args.totp_key is None:
            raise UsageError("totp registration needs --totp-key")
        key = _hex_arg(args.totp_key, "--totp-key")
        if not (1 <= len(key) <= totp.KEY_BYTES):
            raise UsageError("--totp-key must be 1..%d bytes" % totp.KEY_BYTES)
        # HMAC zero-pads short keys, so extending here leaves the codes unchanged.
        cl.totp_register(args.rp, key.ljust(totp.KEY_BYTES, b"\x00"))
        print("registered %s" % args.rp)
    else:
        shown, _ = cl.pw_register(args.rp, legacy_secret=args.import_pw)
        print(shown)
    return 0


def cmd_auth(cl, args):
    if args.mech == "fido2":
        if args.challenge is not None:
            challenge = _hex_arg(args.challenge, "--challenge", fido2.CHAL_BYTES)
        else:
            challenge = rand_bytes(fido2.CHAL_BYTES)
            print("challenge %s" % challenge.hex())
        sig, pk = cl.fido2_auth(args.rp, challenge)
        print("signature %s" % sig.hex())
        print("public key %s" % pk.encode().hex())
    elif args.mech == "totp":
        t = None if args.time is None else totp.time_step(args.time)
        print("%06d" % cl.totp_code(args.rp, t=t))
    else:
        shown, _ = cl.pw_auth(args.rp)
        print(shown)
    return 0


def cmd_verify_sig(cl, args):
    """Offline check of a signature produced by `auth --mech fido2`."""
    challenge = _hex_arg(args.challenge, "--challenge", fido2.CHAL_BYTES)
    sig = _hex_arg(args.signature, "--signature", 64)
    cred = cl.vault.data["fido2"]["creds"].get(args.rp)
    if cred is None:
        return _fail("no credential for %r" % args.rp)
    pk = decode_point(bytes.fromhex(cred["pk"]))
    dgst = fido2.auth_digest(fido2.rp_identifier(args.rp), challenge)
    if ecdsa.verify_digest(pk, fido2.digest_scalar(dgst), sig):
        print("signature valid for %s" % args.rp)
        return 0
    return _fail("signature does not verify for %r" % args.rp)


def cmd_replenish(cl, args):
    batch_id = cl.fido2_replenish(args.rp, count=args.presigs)
    print("uploaded batch %s (%d presignatures)" % (batch_id, args.presigs))
    return 0


def cmd_unregister(cl, args):
    if args.mech != "totp":
        raise UsageError("only totp registrations can be removed")
    cl.totp_unregister(args.rp)
    print("unregistered %s" % args.rp)
    return 0


def cmd_audit(cl, args):
    report = cl.audit()
    if args.json:
        print(json.dumps(report, indent=1, sort_keys=True))
        return EX_AUDIT if report["tampered"] else 0
    print("%-6s %-5s %-12s %s" % ("mech", "seq", "time", "relying party"))
    rows = sorted(
        (ent["seq"], mech, ent) for mech in ("fido2", "totp", "pw")
        for ent in report[mech]
    )
    for seq, mech, ent in rows:
        print("%-6s %-5d %-12d %s" % (mech, seq, ent["ts"], ent["rp"]))
    for batch in report["batches"]:
        print("batch  %s used %d/%d" % (batch["batch_id"], len(batch["used"]),
                                        batch["count"]))
    if report["tampered"]:
        for seq in report["tampered"]:
            print("TAMPERED seq=%d: signature or framing check failed" % seq)
        return EX_AUDIT
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse, but usage mistakes exit with our usage code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, "larchctl: %s\n" % message)


def build_parser():
    p = _Parser(prog="larchctl")
    p.add_argument("--log-url", default=os.environ.get("LARCH_LOG_URL", DEFAULT_URL))
    p.add_argument("--vault", default=os.environ.get("LARCH_VAULT", DEFAULT_VAULT))
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("enroll").set_defaults(func=cmd_enroll)

    reg = sub.add_parser("register")
    reg.add_argument("--mech", choices=("fido2", "totp", "pw"), required=True)
    reg.add_argument("--rp", required=True)
    reg.add_argument("--presigs", type=int, default=64,
                     help="fido2: presignatures to upload")
    reg.add_argument("--totp-key", help="totp: shared secret as hex")
    reg.add_argument("--import-pw", metavar="SECRET",
                     help="pw: keep this existing password instead of minting one")
    reg.set_defaults(func=cmd_register)

    auth = sub.add_parser("auth")
    auth.add_argument("--mech", choices=("fido2", "totp", "pw"), required=True)
    auth.add_argument("--rp", required=True)
    auth.add_argument("--challenge", help="fido2: 32 bytes of hex; random if omitted")
    auth.add_argument("--time", type=int, help="totp: unix seconds (default: now)")
    auth.set_defaults(func=cmd_auth)

    ver = sub.add_parser("verify-sig")
    ver.add_argument("--rp", required=True)
    ver.add_argument("--challenge", required=True)
    ver.add_argument("--signature", required=True)
    ver.set_defaults(func=cmd_verify_sig)

    rep = sub.add_parser("replenish")
    rep.add_argument("--rp", required=True)
    rep.add_argument("--presigs", type=int, default=64)
    rep.set_defaults(func=cmd_replenish)

    unreg = sub.add_parser("unregister")
    unreg.add_argument("--mech", choices=("fido2", "totp", "pw"), required=True)
    unreg.add_argument("--rp", required=True)
    unreg.set_defaults(func=cmd_unregister)

    audit = sub.add_parser("audit")
    audit.add_argument("--json", action="store_true")
    audit.set_defaults(func=cmd_audit)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    client = LarchClient(HttpTransport(args.log_url), args.vault)
    try:
        return args.func(client, args)
    except UsageError as e:
        return _fail(str(e), EX_USAGE)
    except TransportError as e:
        return _fail(str(e))
    except ServiceError as e:
        return _fail("log refused: %s (%s)" % (e.code, e.detail))
    except (ClientError, VaultError) as e:
        return _fail(str(e))


if __name__ == "__main__":
    sys.exit(main())
