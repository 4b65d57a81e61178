import hashlib
import os
import struct

from larchkit import sym
from larchkit.bits import bytes_to_bits, bits_to_bytes
from larchkit.circuits import bristol
from larchkit.circuits.build import (
    build_chacha20_block, build_fido2, build_sha256_compress, build_totp,
)
from larchkit.kernels import eval_circuit

_H0 = struct.pack(
    ">8L",
    0x6A09E667, 0xBB67AE85, 0x3C6EF372, 0xA54FF53A,
    0x510E527F, 0x9B05688C, 0x1F83D9AB, 0x5BE0CD19,
)


def _sha256_one_block(msg_block):
    """Digest of a message that fits one padded block, via the circuit."""
    circ = build_sha256_compress()
    out = eval_circuit(circ, msg_block + _H0)
    return out


def test_sha256_compress_abc_vector():
    # "abc" padded to one block; circuit output must equal hashlib's digest.
    block = b"abc" + b"\x80" + b"\x00" * 52 + struct.pack(">Q", 24)
    assert _sha256_one_block(block) == hashlib.sha256(b"abc").digest()


def test_sha256_compress_random_blocks():
    for _ in range(5):
        msg = sym.rand_bytes(20)
        pad = msg + b"\x80" + b"\x00" * (55 - len(msg)) + struct.pack(">Q", len(msg) * 8)
        assert _sha256_one_block(pad) == hashlib.sha256(msg).digest()


def test_sha256_vendored_file_matches_builder():
    here = os.path.dirname(bristol.__file__)
    with open(os.path.join(here, "data", "sha256_compress.txt")) as f:
        vendored = bristol.parse(f.read())
    built = build_sha256_compress()
    assert vendored.digest() == built.digest()


def test_chacha20_block_circuit_matches_reference():
    circ = build_chacha20_block()
    for _ in range(3):
        key = sym.rand_bytes(32)
        nonce = sym.rand_bytes(12)
        got = eval_circuit(circ, key + nonce)
        assert got == sym.chacha20_block(key, nonce, counter=0)


def test_fido2_circuit_shape():
    circ = build_fido2()
    assert circ.input_blocks == [1120, 864]
    assert circ.output_blocks == [1]
    circ.validate()


def test_totp_circuit_shape_scales_with_table():
    c2 = build_totp(2)
    c4 = build_totp(4)
    assert c2.input_blocks == [992, 320 + 384 * 2]
    assert c4.input_blocks == [992, 320 + 384 * 4]
    assert c2.output_blocks == [31, 225]
    assert c4.n_and > c2.n_and


def test_bits_roundtrip():
    data = sym.rand_bytes(17)
    assert bits_to_bytes(bytes_to_bits(data)) == data
    bits = bytes_to_bits(b"\x01\x80")
    assert bits[0] == 1 and bits[7] == 0    # LSB-first within each byte
    assert bits[8] == 0 and bits[15] == 1
