"""Compare the compiled and pure-Python kernel backends.

    python3 -m larchkit.bench [--quick]

Times the gate-walk primitives both backends implement (plaintext lane
evaluation, MPC-in-the-head prove/verify, garbling plus garbled
evaluation). Prints one row per operation with the per-backend best time
and the pure/fast ratio when both are available.
"""

import argparse
import contextlib
import time

from . import garble as gc
from . import kernels, zkboo
from .bits import bytes_to_bits, pack_lanes
from .circuits.build import build_fido2, build_sha256_compress, build_totp
from .sym import rand_bytes


@contextlib.contextmanager
def _backend(mod):
    old = kernels.active
    kernels.active = mod
    try:
        yield
    finally:
        kernels.active = old


def _time(fn, min_s=0.4, max_iters=50):
    fn()  # warm caches before the timed runs
    best, iters, t_all = None, 0, 0.0
    while t_all < min_s and iters < max_iters:
        t0 = time.perf_counter()
        fn()
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
        t_all += dt
        iters += 1
    return best


def _fmt(seconds):
    if seconds >= 1:
        return "%8.2f s " % seconds
    return "%8.2f ms" % (seconds * 1e3)


def _eval_lanes_case(circ, limbs):
    bits = bytes_to_bits(rand_bytes((circ.n_in + 7) // 8))[: circ.n_in]
    lanes = pack_lanes(bits.reshape(-1, 1).repeat(limbs * 64, axis=1))

    def run(mod):
        mod.eval_lanes(circ.gates, circ.n_wires, circ.n_in, circ.n_out,
                       limbs, lanes)

    return run


def _garble_case(circ):
    seed = rand_bytes(32)

    def run(mod):
        with _backend(mod):
            g = gc.Garbling.generate(circ, seed)
            labels = b"".join(g.label(i, 0) for i in range(circ.n_in))
            mod.gc_eval(circ.gates, circ.n_wires, circ.n_in, labels, g.tables)

    return run


def _zk_case(circ, reps):
    n_wit, n_pub = circ.input_blocks
    witness = rand_bytes(n_wit // 8)
    publics = rand_bytes(n_pub // 8)
    expected = kernels.eval_circuit(circ, witness + publics)

    def run(mod):
        with _backend(mod):
            proof = zkboo.prove(circ, witness, publics, reps=reps,
                                expected_out=expected)
            if not zkboo.verify(circ, publics, proof, reps=reps,
                                expected_out=expected):
                raise AssertionError("bench proof rejected")

    return run


def main(argv=None):
    ap = argparse.ArgumentParser(prog="larchkit.bench")
    ap.add_argument("--quick", action="store_true",
                    help="fewer zk repetitions, skip the big circuits")
    args = ap.parse_args(argv)

    mods = kernels.backends()
    names = [kernels.backend_name(m) for m in mods]
    print("backends: %s (active: %s)" % (", ".join(names),
                                         kernels.backend_name()))
    sha = build_sha256_compress()
    reps = 4 if args.quick else 20

    cases = [
        ("sha256 block, 64 instances", _eval_lanes_case(sha, 1)),
        ("garble+eval sha256", _garble_case(sha)),
        ("zk prove+verify sha256, %d reps" % reps, _zk_case(sha, reps)),
    ]
    if not args.quick:
        cases.append(("garble+eval totp table n=4", _garble_case(build_totp(4))))

    rows = []
    for label, run in cases:
        rows.append((label, [_time(lambda m=mod: run(m)) for mod in mods]))

    width = max(len(r[0]) for r in rows)
    header = "%-*s" % (width, "operation")
    for n in names:
        header += "  %11s" % n
    if len(mods) == 2:
        header += "  %9s" % "pure/fast"
    print(header)
    print("-" * len(header))
    for label, times in rows:
        line = "%-*s" % (width, label)
        for t in times:
            line += "  %s" % _fmt(t)
        if len(times) == 2 and times[0] > 0:
            line += "  %8.1fx" % (times[1] / times[0])
        print(line)

    if not args.quick:
        fido2 = build_fido2()
        print("\nfido2 statement circuit: %d gates, %d AND"
              % (len(fido2.gates), fido2.n_and))


if __name__ == "__main__":
    main()
