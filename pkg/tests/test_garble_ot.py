import itertools

import pytest

from larchkit import garble, ot
from larchkit.bits import bits_to_bytes, bytes_to_bits
from larchkit.circuits.bristol import parse
from larchkit.kernels import eval_circuit
from larchkit.sym import rand_bytes

# Five-input test circuit mixing every gate type with fan-out.
_MIXED = parse("""\
6 11
2 2 3
1 1
2 1 0 1 5 AND
2 1 2 3 6 XOR
1 1 4 7 INV
2 1 5 6 8 XOR
2 1 8 7 9 AND
1 1 9 10 INV
""")


def _mixed_ref(bits):
    a, b, c, d, e = bits
    return 1 ^ (((a & b) ^ (c ^ d)) & (1 ^ e))


def _garbled_output(circ, input_bits):
    g = garble.Garbling.generate(circ)
    wires = list(range(circ.n_in))
    active = g.input_labels(wires, input_bits)
    tables = garble.parse_blob(circ, g.blob())
    out_labels = garble.evaluate(circ, tables, active)
    out_wires = list(circ.output_wires())
    labels = garble.wire_labels(out_labels, out_wires)
    return g.decode_bits(out_wires, labels)


def test_mixed_circuit_exhaustive():
    for bits in itertools.product((0, 1), repeat=5):
        got = _garbled_output(_MIXED, list(bits))
        assert got == [_mixed_ref(bits)], bits


def test_plaintext_matches_garbled_random_circuitless():
    # plaintext evaluator agrees with the reference too
    for bits in itertools.product((0, 1), repeat=5):
        packed = bits_to_bytes(list(bits))
        out = eval_circuit(_MIXED, packed)
        assert bytes_to_bits(out)[0] == _mixed_ref(bits)


def test_blob_roundtrip_and_validation():
    g = garble.Garbling.generate(_MIXED)
    blob = g.blob()
    tables = garble.parse_blob(_MIXED, blob)
    assert tables == g.tables
    with pytest.raises(garble.GarbleError):
        garble.parse_blob(_MIXED, b"XX" + blob[2:])       # magic
    with pytest.raises(garble.GarbleError):
        garble.parse_blob(_MIXED, blob[:-10])             # truncated
    other = parse("1 3\n1 2\n1 1\n2 1 0 1 2 XOR\n")
    with pytest.raises(garble.GarbleError):
        garble.parse_blob(other, blob)                    # wrong circuit


def test_decode_map_flags_foreign_labels():
    g = garble.Garbling.generate(_MIXED)
    out_wires = list(_MIXED.output_wires())
    dmap = g.decode_map(out_wires)
    lab = g.label(out_wires[0], 1)
    assert garble.decode_with_map(out_wires, lab, dmap) == [1]
    with pytest.raises(garble.IntegrityError):
        garble.decode_with_map(out_wires, rand_bytes(16), dmap)


def test_corrupted_tables_yield_foreign_labels():
    """Corrupt tables produce labels the garbler never issued.

    Seed pinned: with it, 30 of the 32 inputs route through at least one
    explicit table row (the other two ride only implicit GRR3 rows, which
    corruption cannot touch), so assert on the full population.
    """
    g = garble.Garbling.generate(_MIXED, bytes(range(32)))
    wires = list(range(_MIXED.n_in))
    out_wires = list(_MIXED.output_wires())
    tables = bytearray(g.tables)
    for i in range(len(tables)):
        tables[i] ^= 0xA5
    detected = 0
    for bits in itertools.product((0, 1), repeat=5):
        active = g.input_labels(wires, list(bits))
        out_labels = garble.evaluate(_MIXED, bytes(tables), active)
        labels = garble.wire_labels(out_labels, out_wires)
        try:
            g.decode_bits(out_wires, labels)
        except garble.IntegrityError:
            detected += 1
    assert detected == 30


# --- oblivious transfer ----------------------------------------------------


def test_ot_delivers_chosen_messages():
    pairs = [(rand_bytes(16), rand_bytes(16)) for _ in range(9)]
    choices = [1, 0, 1, 1, 0, 0, 1, 0, 1]
    snd = ot.Sender(pairs)
    rcv = ot.Receiver(choices)
    got = rcv.finish(snd.round3(rcv.round2(snd.round1())))
    assert got == [pairs[i][c] for i, c in enumerate(choices)]


def test_ot_other_branch_stays_hidden():
    pairs = [(b"\x00" * 16, b"\xff" * 16)]
    snd = ot.Sender(pairs)
    rcv = ot.Receiver([0])
    r3 = snd.round3(rcv.round2(snd.round1()))
    assert rcv.finish(r3) == [pairs[0][0]]
    # the unchosen slot is a one-time-pad ciphertext, not the plaintext
    assert r3[16:32] != pairs[0][1]


def test_ot_validates_points_and_lengths():
    snd = ot.Sender([(b"a" * 16, b"b" * 16)])
    rcv = ot.Receiver([1])
    with pytest.raises(ValueError):
        rcv.round2(b"\x02" + b"\x11" * 32)  # off curve
    with pytest.raises(ot.OTError):
        snd.round3(b"\x00" * 10)            # wrong length
    rcv2 = ot.Receiver([0])
    r2 = rcv2.round2(snd.round1())
    with pytest.raises(ot.OTError):
        rcv2.finish(b"\x00" * 8)            # wrong length
    with pytest.raises(ot.OTError):
        ot.Sender([(b"short", b"b" * 16)])


def test_ot_rejects_replayed_identity():
    snd = ot.Sender([(b"a" * 16, b"b" * 16)])
    rcv = ot.Receiver([0])
    rcv.round2(snd.round1())
    with pytest.raises(ot.OTError):
        ot.Receiver([0]).finish(b"\x00" * 32)  # finish before round 2
