"""Single-party ECDSA over P-256.

Sign computes s = r^-1 (Hash(m) + f(R) * sk) for an ephemeral r, where
f(R) is the x-coordinate of R reduced mod the group order. A presignature
hitting f(R) = 0 or a signature with s = 0 is invalid; the random-nonce
path resamples, the explicit-nonce path raises. Signatures serialize as
the 64 bytes f(R) || s, both big-endian.
"""

import hashlib

from .group import G, Q, Point, rand_scalar

SIG_BYTES = 64


def conv(point):
    """f: the x-coordinate of a point as a scalar mod Q."""
    if point.is_identity():
        raise ValueError("f is undefined on the identity")
    return point.x % Q


def hash_message(message):
    """Hash arbitrary bytes into a scalar."""
    return int.from_bytes(hashlib.sha256(message).digest(), "big") % Q


def keygen():
    sk = rand_scalar(nonzero=True)
    return sk, sk * G


def sign_digest(sk, digest_scalar, nonce=None):
    """Sign an already-hashed message scalar; returns (c, s)."""
    if nonce is not None:
        r = nonce % Q
        if r == 0:
            raise ValueError("nonce must be nonzero")
        c = conv(r * G)
        s = pow(r, -1, Q) * (digest_scalar + c * sk) % Q
        if c == 0 or s == 0:
            raise ValueError("degenerate signature for this nonce")
        return c, s
    while True:
        r = rand_scalar(nonzero=True)
        c = conv(r * G)
        if c == 0:
            continue
        s = pow(r, -1, Q) * (digest_scalar + c * sk) % Q
        if s != 0:
            return c, s


def sign(sk, message, nonce=None):
    return sign_digest(sk, hash_message(message), nonce)


def verify_digest(pk, digest_scalar, sig):
    if isinstance(sig, (bytes, bytearray)):
        sig = sig_from_bytes(sig)
    c, s = sig
    if not (0 < c < Q and 0 < s < Q):
        return False
    sinv = pow(s, -1, Q)
    rprime = (digest_scalar * sinv % Q) * G + (c * sinv % Q) * pk
    if rprime.is_identity():
        return False
    return conv(rprime) == c


def verify(pk, message, sig):
    return verify_digest(pk, hash_message(message), sig)


def sig_to_bytes(sig):
    c, s = sig
    return c.to_bytes(32, "big") + s.to_bytes(32, "big")


def sig_from_bytes(data):
    if len(data) != SIG_BYTES:
        raise ValueError("signature must be 64 bytes")
    return int.from_bytes(data[:32], "big"), int.from_bytes(data[32:], "big")
