"""Batch 1-of-2 oblivious transfer over P-256 (three-message DH pattern).

The sender holds pairs of 16-byte messages (wire labels), the receiver a
choice bit per pair. One curve point from the sender keys the whole batch:

    round 1  sender   -> receiver : A = a*G
    round 2  receiver -> sender   : B_i = b_i*G + c_i*A        (per pair)
    round 3  sender   -> receiver : E_i^m = H(i, a*B_i - m*aA) xor msg_i^m

The receiver can form H(i, b_i*A) for exactly its chosen branch. Security
is against semi-honest parties, matching the garbled-circuit engine this
feeds; every received point is validated and anything malformed aborts.
"""

import hashlib
import struct

from .group import G, POINT_BYTES, decode_point, rand_scalar

MSG_BYTES = 16


class OTError(ValueError):
    pass


def _mask(A_enc, index, point):
    if point.is_identity():
        raise OTError("degenerate OT point")
    h = hashlib.sha256(b"larchkit-ot" + A_enc + struct.pack("<L", index) + point.encode())
    return h.digest()[:MSG_BYTES]


def _xor(a, b):
    return bytes(x ^ y for x, y in zip(a, b))


class Sender:
    """Holds the message pairs; drives rounds 1 and 3."""

    def __init__(self, pairs):
        for m0, m1 in pairs:
            if len(m0) != MSG_BYTES or len(m1) != MSG_BYTES:
                raise OTError("OT messages must be %d bytes" % MSG_BYTES)
        self.pairs = list(pairs)
        self._a = rand_scalar(nonzero=True)
        self._A = G * self._a
        self._aA = self._A * self._a

    def round1(self):
        return self._A.encode()

    def round3(self, round2_msg):
        n = len(self.pairs)
        if len(round2_msg) != n * POINT_BYTES:
            raise OTError("round 2 carries %d bytes, expected %d" % (len(round2_msg), n * POINT_BYTES))
        A_enc = self._A.encode()
        out = bytearray()
        for i, (m0, m1) in enumerate(self.pairs):
            B = decode_point(round2_msg[i * POINT_BYTES : (i + 1) * POINT_BYTES])
            k0 = B * self._a
            k1 = k0 - self._aA
            out += _xor(m0, _mask(A_enc, i, k0))
            out += _xor(m1, _mask(A_enc, i, k1))
        return bytes(out)


class Receiver:
    """Holds the choice bits; drives round 2 and the final decryption."""

    def __init__(self, choices):
        self.choices = [1 if c else 0 for c in choices]
        self._bs = None
        self._A = None

    def round2(self, round1_msg):
        self._A = decode_point(round1_msg)
        if self._A.is_identity():
            raise OTError("sender point is the identity")
        self._bs = []
        out = bytearray()
        for c in self.choices:
            b = rand_scalar(nonzero=True)
            self._bs.append(b)
            B = G * b
            if c:
                B = B + self._A
            out += B.encode()
        return bytes(out)

    def finish(self, round3_msg):
        if self._bs is None:
            raise OTError("round 2 has not run")
        n = len(self.choices)
        if len(round3_msg) != n * 2 * MSG_BYTES:
            raise OTError("round 3 carries %d bytes, expected %d" % (len(round3_msg), n * 2 * MSG_BYTES))
        A_enc = self._A.encode()
        msgs = []
        for i, (c, b) in enumerate(zip(self.choices, self._bs)):
            mask = _mask(A_enc, i, self._A * b)
            off = (2 * i + c) * MSG_BYTES
            msgs.append(_xor(round3_msg[off : off + MSG_BYTES], mask))
        return msgs
