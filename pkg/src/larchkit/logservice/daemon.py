"""larchd: run the log service behind the HTTP front end.

Flags override environment, environment overrides defaults:

    LARCHD_BIND                   host:port            (default 127.0.0.1:7700)
    LARCHD_DATA_DIR               state directory      (default ./larchd-data)
    LARCHD_OBJECTION_WINDOW_SECS  presign hold period  (default 0)
    LARCHD_TOTP_SKEW_STEPS        accepted step drift  (default 1)
    LARCHD_REPS_PROFILE           test | prod          (default prod)
"""

import argparse
import os
import signal
import sys
import threading

from ..zkboo import REPS_PROD, REPS_TEST
from .httpd import LogHTTPServer
from .service import LogService

_PROFILES = {"test": REPS_TEST, "prod": REPS_PROD}


def _env(name, default):
    return os.environ.get(name, default)


def parse_bind(text):
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError("bind must look like host:port")
    return host or "127.0.0.1", int(port)


def build_parser():
    p = argparse.ArgumentParser(prog="larchd", description=__doc__.splitlines()[0])
    p.add_argument("--bind", type=parse_bind,
                   default=_env("LARCHD_BIND", "127.0.0.1:7700"))
    p.add_argument("--data-dir",
                   default=_env("LARCHD_DATA_DIR", "./larchd-data"))
    p.add_argument("--objection-window-secs", type=int,
                   default=int(_env("LARCHD_OBJECTION_WINDOW_SECS", "0")))
    p.add_argument("--totp-skew-steps", type=int,
                   default=int(_env("LARCHD_TOTP_SKEW_STEPS", "1")))
    p.add_argument("--reps-profile", choices=sorted(_PROFILES),
                   default=_env("LARCHD_REPS_PROFILE", "prod"))
    p.add_argument("--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if isinstance(args.bind, str):  # came from the environment default
        args.bind = parse_bind(args.bind)
    service = LogService(
        args.data_dir,
        reps=_PROFILES[args.reps_profile],
        objection_window=args.objection_window_secs,
        totp_skew_steps=args.totp_skew_steps,
    )
    server = LogHTTPServer(args.bind, service, verbose=args.verbose)
    host, port = server.server_address[:2]
    print("larchd listening on %s:%d (data in %s, %d zk repetitions)"
          % (host, port, args.data_dir, service.reps), flush=True)

    def stop(signum, frame):
        # shutdown() blocks until the serve loop notices, so it must not run
        # on the main thread while that loop owns it.
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGTERM, stop)
    signal.signal(signal.SIGINT, stop)
    try:
        server.serve_forever(poll_interval=0.2)
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
