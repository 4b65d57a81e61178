"""Bit packing helpers shared by the circuit, proof and 2PC layers.

Byte strings map to wire vectors in little-endian bit order: bit i of a
message is bit (i % 8) of byte (i // 8). Lane buffers pack one uint64 limb
vector per item (wire, tape position, ...), bit j of a lane being
repetition j; limbs are little-endian and `n_limbs = ceil(reps / 64)`.
"""

import numpy as np


def bytes_to_bits(data):
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8), bitorder="little")


def bits_to_bytes(bits):
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def int_to_bits(value, width):
    return np.array([(value >> i) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits):
    v = 0
    for i, b in enumerate(bits):
        v |= int(b) << i
    return v


def limbs_for(reps):
    return (reps + 63) // 64


def pack_lanes(bitmat, n_limbs=None):
    """(n_items, reps) 0/1 matrix -> lane buffer bytes."""
    bitmat = np.asarray(bitmat, dtype=np.uint8)
    n_items, reps = bitmat.shape
    if n_limbs is None:
        n_limbs = limbs_for(reps)
    padded = np.zeros((n_items, n_limbs * 64), dtype=np.uint8)
    padded[:, :reps] = bitmat
    return np.packbits(padded, axis=1, bitorder="little").tobytes()

def unpack_lanes(data, n_items, reps):
    n_limbs = limbs_for(reps)
    mat = np.frombuffer(bytes(data), dtype=np.uint8).reshape(n_items, n_limbs * 8)
    return np.unpackbits(mat, axis=1, bitorder="little")[:, :reps]


def lane_buffer(n_items, reps):
    return bytearray(n_items * limbs_for(reps) * 8)
