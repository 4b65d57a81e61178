import pytest

from larchkit.circuits import bristol
from larchkit.circuits.bristol import Circuit, CircuitError, parse, serialize
from larchkit.kernels import eval_circuit

XOR_TEXT = """\
1 3
1 2
1 1
2 1 0 1 2 XOR
"""


def test_parse_minimal_xor():
    circ = parse(XOR_TEXT)
    assert circ.n_gates == 1
    assert circ.n_in == 2 and circ.n_out == 1
    assert circ.n_and == 0
    assert list(circ.output_wires()) == [2]


def test_parse_serialize_roundtrip():
    circ = parse(XOR_TEXT)
    again = parse(serialize(circ))
    assert again.gates == circ.gates
    assert again.input_blocks == circ.input_blocks
    assert again.output_blocks == circ.output_blocks
    assert again.digest() == circ.digest()


def test_all_gate_types_evaluate():
    text = """\
4 8
2 2 2
1 2
2 1 0 1 4 XOR
2 1 0 1 5 AND
1 1 2 6 INV
2 1 4 3 7 AND
"""
    circ = parse(text).validate()
    # inputs (a0,a1,b0,b1) -> outputs (INV(b0), AND(XOR(a0,a1), b1))
    for x in range(16):
        bits = [(x >> i) & 1 for i in range(4)]
        out = eval_circuit(circ, bytes([x & 0x0F]))
        got = out[0]
        want_inv = 1 - bits[2]
        want_and = (bits[0] ^ bits[1]) & bits[3]
        assert got & 1 == want_inv
        assert (got >> 1) & 1 == want_and


def test_validate_rejects_unwritten_read():
    bad = """\
1 3
1 2
1 1
2 1 0 2 2 XOR
"""
    with pytest.raises(CircuitError, match="unwritten"):
        parse(bad).validate()


def test_validate_rejects_double_write():
    bad = """\
2 4
1 2
1 1
2 1 0 1 3 XOR
2 1 0 1 3 AND
"""
    with pytest.raises(CircuitError):
        parse(bad).validate()


def test_parse_rejects_malformed():
    with pytest.raises(CircuitError):
        parse("1 2\n")
    with pytest.raises(CircuitError):
        parse("1 3\n1 2\n1 1\n2 1 0 1 2 NAND\n")
    with pytest.raises(CircuitError):
        parse("2 3\n1 2\n1 1\n2 1 0 1 2 XOR\n")  # gate count mismatch


def test_digest_tracks_structure():
    a = parse(XOR_TEXT)
    b_text = XOR_TEXT.replace("XOR", "AND")
    b = parse(b_text)
    assert a.digest() != b.digest()
    assert len(a.digest()) == 32


def test_output_blocks_define_output_wires():
    circ = parse("""\
2 6
2 2 2
2 1 1
2 1 0 2 4 XOR
2 1 1 3 5 AND
""")
    assert circ.output_blocks == [1, 1]
    assert list(circ.output_wires()) == [4, 5]
