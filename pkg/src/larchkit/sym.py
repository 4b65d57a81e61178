"""Symmetric primitives: hashing, commitments, ChaCha20, PRG expansion.

The stream cipher is ChaCha20 with a 32-byte key, 12-byte nonce and a
32-bit little-endian block counter starting at 0 (RFC 7539 layout). Bulk
keystream comes from the `cryptography` package; `chacha20_block` is an
independent pure-Python ARX reference used by tests and mirrored by the
boolean circuit builder.
"""

import hashlib
import secrets
import struct

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

from . import group

KEY_BYTES = 32
NONCE_BYTES = 12
COMMIT_BYTES = 32


def sha256(data):
    return hashlib.sha256(data).digest()


def commit(data, nonce):
    """Hash commitment SHA-256(data || nonce); nonce must be 32 bytes."""
    if len(nonce) != 32:
        raise ValueError("commitment nonce must be 32 bytes")
    return hashlib.sha256(bytes(data) + bytes(nonce)).digest()


def verify_commitment(cm, data, nonce):
    ok = len(cm) == COMMIT_BYTES and commit(data, nonce) == bytes(cm)
    return ok


def rand_bytes(n):
    return secrets.token_bytes(n)


# ---------------------------------------------------------------------------
# ChaCha20


def _rotl32(v, n):
    return ((v << n) | (v >> (32 - n))) & 0xFFFFFFFF


def _quarter(state, a, b, c, d):
    state[a] = (state[a] + state[b]) & 0xFFFFFFFF
    state[d] = _rotl32(state[d] ^ state[a], 16)
    state[c] = (state[c] + state[d]) & 0xFFFFFFFF
    state[b] = _rotl32(state[b] ^ state[c], 12)
    state[a] = (state[a] + state[b]) & 0xFFFFFFFF
    state[d] = _rotl32(state[d] ^ state[a], 8)
    state[c] = (state[c] + state[d]) & 0xFFFFFFFF
    state[b] = _rotl32(state[b] ^ state[c], 7)


CHACHA_CONSTANTS = (0x61707865, 0x3320646E, 0x79622D32, 0x6B206574)


def chacha20_block(key, nonce, counter=0):
    """One 64-byte ChaCha20 keystream block, pure Python."""
    if len(key) != KEY_BYTES or len(nonce) != NONCE_BYTES:
        raise ValueError("chacha20 wants a 32-byte key and 12-byte nonce")
    state = list(CHACHA_CONSTANTS)
    state += list(struct.unpack("<8L", key))
    state.append(counter & 0xFFFFFFFF)
    state += list(struct.unpack("<3L", nonce))
    working = state[:]
    for _ in range(10):
        _quarter(working, 0, 4, 8, 12)
        _quarter(working, 1, 5, 9, 13)
        _quarter(working, 2, 6, 10, 14)
        _quarter(working, 3, 7, 11, 15)
        _quarter(working, 0, 5, 10, 15)
        _quarter(working, 1, 6, 11, 12)
        _quarter(working, 2, 7, 8, 13)
        _quarter(working, 3, 4, 9, 14)
    out = [(working[i] + state[i]) & 0xFFFFFFFF for i in range(16)]
    return struct.pack("<16L", *out)


def keystream(key, nonce, length, counter=0):
    """ChaCha20 keystream bytes via the C implementation in `cryptography`."""
    full_nonce = struct.pack("<L", counter) + bytes(nonce)
    cipher = Cipher(algorithms.ChaCha20(bytes(key), full_nonce), mode=None)
    return cipher.encryptor().update(b"\x00" * length)


def stream_xor(key, nonce, data, counter=0):
    """Encrypt/decrypt by XOR with the ChaCha20 keystream."""
    ks = keystream(key, nonce, len(data), counter)
    return bytes(a ^ b for a, b in zip(data, ks))


def seal(key, plaintext):
    """Fresh-nonce encryption producing (12-byte nonce || body)."""
    nonce = secrets.token_bytes(NONCE_BYTES)
    return nonce + stream_xor(key, nonce, plaintext)


def open_ct(key, ct):
    if len(ct) < NONCE_BYTES:
        raise ValueError("ciphertext shorter than its nonce")
    return stream_xor(key, ct[:NONCE_BYTES], ct[NONCE_BYTES:])


# ---------------------------------------------------------------------------
# PRG expansion


def prg_bytes(seed, label, length, counter=0):
    """Deterministic byte expansion: ChaCha20 keyed by SHA-256(label || seed).

    The label keeps independent uses of one seed on independent streams.
    """
    key = hashlib.sha256(bytes(label) + bytes(seed)).digest()
    nonce = struct.pack("<Q", counter) + b"\x00" * 4
    return keystream(key, nonce, length)


def prg_expand(seed, counter, count):
    """Expand a 32-byte seed into `count` scalars mod the group order.

    Each candidate is a 32-byte big-endian keystream chunk; values >= Q are
    rejected and the stream continues, so results are uniform and
    deterministic in (seed, counter).
    """
    if len(seed) != 32:
        raise ValueError("prg seed must be 32 bytes")
    out = []
    block = 0
    while len(out) < count:
        # one nonce per refill keeps the mapping stateless
        chunk = keystream(seed, struct.pack("<Q", counter) + struct.pack("<L", block), 64 * 32)
        for i in range(0, len(chunk), 32):
            v = int.from_bytes(chunk[i : i + 32], "big")
            if v < group.Q:
                out.append(v)
                if len(out) == count:
                    break
        block += 1
    return out
