"""Zero-knowledge proofs of boolean-circuit satisfiability, MPC-in-the-head.

The prover runs a (2,3)-decomposition of the circuit: each wire is XOR
shared among three simulated parties, AND gates consume correlated
randomness from per-party tapes, and the transcript ("view") of each
party is committed. A three-way challenge per repetition opens two views;
the verifier re-runs the opened pair and recomputes the challenge. Each
repetition a cheating prover survives with probability at most 2/3, so
137 repetitions push soundness error below 2^-80; tests and the latency
profile use 20.

Seeds derive everything ZKB++-style: a party's input share and tape come
from its 16-byte seed, party 2's witness share is the explicit correction,
and public inputs are not shared at all (party 0 carries the public bits,
parties 1 and 2 carry zeros, and the verifier reconstructs those shares
itself from the statement).

Proof wire format: version byte, repetition count (u16), then one
length-prefixed block per repetition:
    challenge (u8) || seed_e || seed_{e+1} || commitment_{e+2} (32 B) ||
    output share_{e+2} || AND stream_{e+1} || [witness share_2 if opened]
"""

import hashlib
import secrets
import struct

import numpy as np

from . import bits as bt

SEED_BYTES = 16
REPS_TEST = 20
REPS_PROD = 137

_VIEW_TAG = b"larchkit-zk-view"
_CHAL_TAG = b"larchkit-zk-chal"


class ProofError(ValueError):
    pass


def soundness_error(reps):
    """Upper bound on the cheating probability after `reps` repetitions."""
    return (2.0 / 3.0) ** reps


def _kernel():
    from . import kernels

    return kernels.active


def _prg_bits(seed, label, nbits):
    from .sym import prg_bytes

    return bt.bytes_to_bits(prg_bytes(seed, label, (nbits + 7) // 8))[:nbits]


def _commit_view(seed, stream_bytes, extra=b""):
    return hashlib.sha256(_VIEW_TAG + seed + extra + stream_bytes).digest()


def _challenge_trits(seed_material, count):
    """Derive `count` values in {0,1,2} by rejection sampling bit pairs."""
    out = []
    counter = 0
    while len(out) < count:
        block = hashlib.sha256(_CHAL_TAG + seed_material + struct.pack("<L", counter)).digest()
        for byte in block:
            for shift in (0, 2, 4, 6):
                v = (byte >> shift) & 3
                if v != 3:
                    out.append(v)
                    if len(out) == count:
                        return out
        counter += 1
    return out


def _challenge_seed(circ, publics, expected_out, reps, commits, outshares):
    h = hashlib.sha256()
    h.update(_CHAL_TAG)
    h.update(circ.digest())
    h.update(struct.pack("<HL", reps, len(publics)))
    h.update(publics)
    h.update(expected_out)
    for r in range(reps):
        for p in range(3):
            h.update(commits[r][p])
            h.update(outshares[r][p])
    return h.digest()


def _forced_public_shares(circ, publics, reps):
    """Input-share columns for the public block: party 0 real, others zero."""
    n_pub = circ.input_blocks[1]
    pub_bits = bt.bytes_to_bits(publics)[:n_pub]
    if len(pub_bits) != n_pub:
        raise ProofError("public input must supply %d bits" % n_pub)
    mat = np.repeat(pub_bits.reshape(-1, 1), reps, axis=1)
    return mat


def prove(circ, witness, publics, reps, expected_out=b"\x01"):
    """Prove knowledge of `witness` such that circ(witness, publics) = expected.

    Refuses to prove a false statement. Returns the serialized proof.
    """
    if len(circ.input_blocks) != 2:
        raise ProofError("statement circuits carry [witness, public] blocks")
    n_wit, n_pub = circ.input_blocks
    kern = _kernel()
    from . import kernels

    out = kernels.eval_circuit(circ, witness + publics)
    if out != expected_out:
        raise ProofError("witness does not satisfy the statement")

    n_limbs = bt.limbs_for(reps)
    wit_bits = bt.bytes_to_bits(witness)[:n_wit]
    seeds = [[secrets.token_bytes(SEED_BYTES) for _ in range(3)] for _ in range(reps)]

    share0 = np.empty((n_wit, reps), dtype=np.uint8)
    share1 = np.empty((n_wit, reps), dtype=np.uint8)
    tapes = [np.empty((circ.n_and, reps), dtype=np.uint8) for _ in range(3)]
    for r in range(reps):
        share0[:, r] = _prg_bits(seeds[r][0], b"wshare", n_wit)
        share1[:, r] = _prg_bits(seeds[r][1], b"wshare", n_wit)
        for p in range(3):
            tapes[p][:, r] = _prg_bits(seeds[r][p], b"tape", circ.n_and)
    share2 = share0 ^ share1 ^ wit_bits.reshape(-1, 1)

    pub0 = _forced_public_shares(circ, publics, reps)
    pub_zero = np.zeros_like(pub0)
    in0 = bt.pack_lanes(np.vstack([share0, pub0]), n_limbs)
    in1 = bt.pack_lanes(np.vstack([share1, pub_zero]), n_limbs)
    in2 = bt.pack_lanes(np.vstack([share2, pub_zero]), n_limbs)

    st0, st1, st2, y0, y1, y2 = kern.mpc_prove(
        circ.gates, circ.n_wires, circ.n_in, circ.n_and, circ.n_out, n_limbs,
        in0, in1, in2,
        bt.pack_lanes(tapes[0], n_limbs),
        bt.pack_lanes(tapes[1], n_limbs),
        bt.pack_lanes(tapes[2], n_limbs),
    )
    streams = [bt.unpack_lanes(s, circ.n_and, reps) for s in (st0, st1, st2)]
    ys = [bt.unpack_lanes(y, circ.n_out, reps) for y in (y0, y1, y2)]

    commits = []
    outshares = []
    stream_bytes = [[None] * 3 for _ in range(reps)]
    x2_bytes = []
    for r in range(reps):
        x2_bytes.append(bt.bits_to_bytes(share2[:, r]))
        row_c = []
        row_y = []
        for p in range(3):
            sb = bt.bits_to_bytes(streams[p][:, r])
            stream_bytes[r][p] = sb
            extra = x2_bytes[r] if p == 2 else b""
            row_c.append(_commit_view(seeds[r][p], sb, extra))
            row_y.append(bt.bits_to_bytes(ys[p][:, r]))
        commits.append(row_c)
        outshares.append(row_y)

    chal_seed = _challenge_seed(circ, publics, expected_out, reps, commits, outshares)
    es = _challenge_trits(chal_seed, reps)

    blob = bytearray()
    blob += b"\x01"
    blob += struct.pack("<H", reps)
    for r, e in enumerate(es):
        e1, e2 = (e + 1) % 3, (e + 2) % 3
        block = bytearray()
        block.append(e)
        block += seeds[r][e]
        block += seeds[r][e1]
        block += commits[r][e2]
        block += outshares[r][e2]
        block += stream_bytes[r][e1]
        if 2 in (e, e1):
            block += x2_bytes[r]
        blob += struct.pack("<L", len(block))
        blob += block
    return bytes(blob)


def verify(circ, publics, proof, reps, expected_out=b"\x01"):
    """Check a proof against the statement; False on any mismatch."""
    try:
        return _verify(circ, publics, proof, reps, expected_out)
    except (ProofError, ValueError, struct.error, IndexError):
        return False


def _verify(circ, publics, proof, reps, expected_out):
    n_wit, n_pub = circ.input_blocks
    wit_bytes = (n_wit + 7) // 8
    stream_len = (circ.n_and + 7) // 8
    out_len = (circ.n_out + 7) // 8

    if len(proof) < 3 or proof[0] != 1:
        raise ProofError("bad proof version")
    (n_reps,) = struct.unpack_from("<H", proof, 1)
    if n_reps != reps:
        raise ProofError("proof carries %d repetitions, wanted %d" % (n_reps, reps))
    off = 3
    recs = []
    for _ in range(reps):
        (blen,) = struct.unpack_from("<L", proof, off)
        off += 4
        block = proof[off : off + blen]
        if len(block) != blen:
            raise ProofError("truncated repetition block")
        off += blen
        e = block[0]
        if e > 2:
            raise ProofError("challenge out of range")
        pos = 1
        seed_e = block[pos : pos + SEED_BYTES]; pos += SEED_BYTES
        seed_e1 = block[pos : pos + SEED_BYTES]; pos += SEED_BYTES
        c_e2 = block[pos : pos + 32]; pos += 32
        y_e2 = block[pos : pos + out_len]; pos += out_len
        stream_e1 = block[pos : pos + stream_len]; pos += stream_len
        x2 = b""
        if 2 in (e, (e + 1) % 3):
            x2 = block[pos : pos + wit_bytes]; pos += wit_bytes
        if pos != blen:
            raise ProofError("repetition block length mismatch")
        recs.append((e, seed_e, seed_e1, c_e2, y_e2, stream_e1, x2))
    if off != len(proof):
        raise ProofError("trailing bytes after last repetition")

    pub_bits = bt.bytes_to_bits(publics)[:n_pub]
    if len(pub_bits) != n_pub:
        raise ProofError("public input must supply %d bits" % n_pub)
    kern = _kernel()

    commits = [[None] * 3 for _ in range(reps)]
    outshares = [[None] * 3 for _ in range(reps)]
    exp_bits = bt.bytes_to_bits(expected_out)[: circ.n_out]

    for e_val in (0, 1, 2):
        group = [r for r in range(reps) if recs[r][0] == e_val]
        if not group:
            continue
        g = len(group)
        n_limbs = bt.limbs_for(g)
        e1 = (e_val + 1) % 3
        in_a = np.zeros((circ.n_in, g), dtype=np.uint8)
        in_b = np.zeros((circ.n_in, g), dtype=np.uint8)
        tape_a = np.empty((circ.n_and, g), dtype=np.uint8)
        tape_b = np.empty((circ.n_and, g), dtype=np.uint8)
        stream_b = np.empty((circ.n_and, g), dtype=np.uint8)
        for col, r in enumerate(group):
            _, seed_e, seed_e1, _, _, st_e1, x2 = recs[r]
            for party, seed, dst in ((e_val, seed_e, in_a), (e1, seed_e1, in_b)):
                if party == 2:
                    if len(x2) != wit_bytes:
                        raise ProofError("missing witness share for opened party 2")
                    dst[:n_wit, col] = bt.bytes_to_bits(x2)[:n_wit]
                else:
                    dst[:n_wit, col] = _prg_bits(seed, b"wshare", n_wit)
                if party == 0:
                    dst[n_wit:, col] = pub_bits
            tape_a[:, col] = _prg_bits(seed_e, b"tape", circ.n_and)
            tape_b[:, col] = _prg_bits(seed_e1, b"tape", circ.n_and)
            stream_b[:, col] = bt.bytes_to_bits(st_e1)[: circ.n_and]
        st_a, y_a, y_b = kern.mpc_reeval(
            circ.gates, circ.n_wires, circ.n_in, circ.n_and, circ.n_out, n_limbs,
            bt.pack_lanes(in_a, n_limbs), bt.pack_lanes(in_b, n_limbs),
            bt.pack_lanes(tape_a, n_limbs), bt.pack_lanes(tape_b, n_limbs),
            bt.pack_lanes(stream_b, n_limbs),
            e_val == 0, e1 == 0,
        )
        st_a = bt.unpack_lanes(st_a, circ.n_and, g)
        y_a = bt.unpack_lanes(y_a, circ.n_out, g)
        y_b = bt.unpack_lanes(y_b, circ.n_out, g)
        for col, r in enumerate(group):
            _, seed_e, seed_e1, c_e2, y_e2, st_e1, x2 = recs[r]
            sa_bytes = bt.bits_to_bytes(st_a[:, col])
            commits[r][e_val] = _commit_view(seed_e, sa_bytes, x2 if e_val == 2 else b"")
            commits[r][e1] = _commit_view(seed_e1, st_e1, x2 if e1 == 2 else b"")
            commits[r][(e_val + 2) % 3] = c_e2
            outshares[r][e_val] = bt.bits_to_bytes(y_a[:, col])
            outshares[r][e1] = bt.bits_to_bytes(y_b[:, col])
            outshares[r][(e_val + 2) % 3] = y_e2
            total = y_a[:, col] ^ y_b[:, col] ^ bt.bytes_to_bits(y_e2)[: circ.n_out]
            if not np.array_equal(total, exp_bits):
                raise ProofError("reconstructed output does not match statement")

    chal_seed = _challenge_seed(circ, publics, expected_out, reps, commits, outshares)
    if _challenge_trits(chal_seed, reps) != [rec[0] for rec in recs]:
        raise ProofError("challenge recomputation failed")
    return True
