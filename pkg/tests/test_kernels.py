"""The compiled and pure backends must be bit-identical on every kernel."""

import numpy as np
import pytest

from larchkit import kernels
from larchkit.bits import bytes_to_bits, limbs_for, pack_lanes
from larchkit.circuits.build import build_chacha20_block, build_sha256_compress
from larchkit.sym import prg_bytes, rand_bytes

pytestmark = pytest.mark.skipif(
    len(kernels.backends()) < 2, reason="only one backend importable")


def _both():
    return kernels.backends()


def _rand_lanes(n_items, reps):
    limbs = limbs_for(reps)
    mat = np.frombuffer(rand_bytes(n_items * reps), dtype=np.uint8).reshape(
        n_items, reps) & 1
    return pack_lanes(mat, limbs)


def test_eval_lanes_parity():
    circ = build_sha256_compress()
    reps = 20
    lanes = _rand_lanes(circ.n_in, reps)
    outs = [
        mod.eval_lanes(circ.gates, circ.n_wires, circ.n_in, circ.n_out,
                       limbs_for(reps), lanes)
        for mod in _both()
    ]
    assert outs[0] == outs[1]


def test_mpc_prove_parity():
    circ = build_chacha20_block()
    reps = 3
    limbs = limbs_for(reps)
    ins = [_rand_lanes(circ.n_in, reps) for _ in range(3)]
    tapes = [_rand_lanes(circ.n_and, reps) for _ in range(3)]
    results = [
        mod.mpc_prove(circ.gates, circ.n_wires, circ.n_in, circ.n_and,
                      circ.n_out, limbs, *ins, *tapes)
        for mod in _both()
    ]
    assert results[0] == results[1]


def test_mpc_prove_shares_reconstruct():
    """XOR of the three parties' outputs equals the plaintext evaluation."""
    circ = build_chacha20_block()
    reps = 1
    limbs = limbs_for(reps)
    key, nonce = rand_bytes(32), rand_bytes(12)
    bits = bytes_to_bits(key + nonce)[: circ.n_in]
    in2 = bits.reshape(-1, 1)
    zero = np.zeros((circ.n_in, 1), dtype=np.uint8)
    tapes = [_rand_lanes(circ.n_and, reps) for _ in range(3)]
    for mod in _both():
        out = mod.mpc_prove(circ.gates, circ.n_wires, circ.n_in, circ.n_and,
                            circ.n_out, limbs,
                            pack_lanes(zero, limbs), pack_lanes(zero, limbs),
                            pack_lanes(in2, limbs), *tapes)
        _, _, _, y0, y1, y2 = out
        joined = bytes(a ^ b ^ c for a, b, c in zip(y0, y1, y2))
        got = kernels.eval_circuit(circ,  key + nonce)
        # joined lanes: one bit per output wire in limb form
        from larchkit.bits import bits_to_bytes, unpack_lanes

        bits_out = unpack_lanes(joined, circ.n_out, reps).reshape(-1)
        assert bits_to_bytes(bits_out) == got


def test_mpc_reeval_parity():
    circ = build_chacha20_block()
    reps = 2
    limbs = limbs_for(reps)
    ins = [_rand_lanes(circ.n_in, reps) for _ in range(2)]
    tapes = [_rand_lanes(circ.n_and, reps) for _ in range(2)]
    stream_b = _rand_lanes(circ.n_and, reps)
    for flips in ((1, 0), (0, 1), (0, 0)):
        results = [
            mod.mpc_reeval(circ.gates, circ.n_wires, circ.n_in, circ.n_and,
                           circ.n_out, limbs, *ins, *tapes, stream_b, *flips)
            for mod in _both()
        ]
        assert results[0] == results[1]


def test_garble_and_eval_parity():
    circ = build_chacha20_block()
    seed = rand_bytes(32)
    delta = bytearray(prg_bytes(seed, b"d", 16))
    delta[0] |= 1
    delta = bytes(delta)
    in_labels = prg_bytes(seed, b"in", circ.n_in * 16)
    garbled = [
        mod.garble(circ.gates, circ.n_wires, circ.n_in, in_labels, delta)
        for mod in _both()
    ]
    assert garbled[0] == garbled[1]
    labels0, tables = garbled[0]
    active = in_labels  # evaluate the all-zeros input
    evals = [
        mod.gc_eval(circ.gates, circ.n_wires, circ.n_in, active, tables)
        for mod in _both()
    ]
    assert evals[0] == evals[1]


def test_garble_requires_point_bit():
    circ = build_chacha20_block()
    for mod in _both():
        with pytest.raises(ValueError):
            mod.garble(circ.gates, circ.n_wires, circ.n_in,
                       b"\x00" * (circ.n_in * 16), b"\x00" * 16)
