"""P-256 group arithmetic.

Everything in the package that touches the curve goes through this module:
scalars are plain ints reduced mod the group order Q, points are `Point`
instances. Scalar multiplication runs in Jacobian coordinates; points are
serialized in 33-byte SEC1 compressed form and deserialization rejects
anything that is not a valid on-curve point.
"""

import hashlib
import secrets

# NIST P-256 (secp256r1) domain parameters.
P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
A = P - 3
B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
Q = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5

SCALAR_BYTES = 32
POINT_BYTES = 33


class Point:
    """Affine P-256 point; x is None for the identity."""

    __slots__ = ("x", "y")

    def __init__(self, x, y):
        self.x = x
        self.y = y

    def is_identity(self):
        return self.x is None

    def __eq__(self, other):
        return isinstance(other, Point) and self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash((self.x, self.y))

    def __repr__(self):
        if self.is_identity():
            return "Point(identity)"
        return "Point(%064x)" % self.x

    def __add__(self, other):
        return _add(self, other)

    def __sub__(self, other):
        return _add(self, other.neg())

    def __mul__(self, k):
        return _mul(self, k % Q)

    __rmul__ = __mul__

    def neg(self):
        if self.is_identity():
            return IDENTITY
        return Point(self.x, (-self.y) % P)

    def encode(self):
        """33-byte compressed encoding. The identity has none by design."""
        if self.is_identity():
            raise ValueError("cannot encode the identity point")
        prefix = 2 + (self.y & 1)
        return bytes([prefix]) + self.x.to_bytes(32, "big")


IDENTITY = Point(None, None)
G = Point(GX, GY)


def on_curve(x, y):
    return (y * y - (x * x * x + A * x + B)) % P == 0


def _add(p1, p2):
    if p1.is_identity():
        return p2
    if p2.is_identity():
        return p1
    if p1.x == p2.x:
        if (p1.y + p2.y) % P == 0:
            return IDENTITY
        return _double(p1)
    lam = (p2.y - p1.y) * pow(p2.x - p1.x, -1, P) % P
    x3 = (lam * lam - p1.x - p2.x) % P
    y3 = (lam * (p1.x - x3) - p1.y) % P
    return Point(x3, y3)


def _double(p):
    if p.is_identity() or p.y == 0:
        return IDENTITY
    lam = (3 * p.x * p.x + A) * pow(2 * p.y, -1, P) % P
    x3 = (lam * lam - 2 * p.x) % P
    y3 = (lam * (p.x - x3) - p.y) % P
    return Point(x3, y3)


# Jacobian (X, Y, Z) with x = X/Z^2, y = Y/Z^3; identity is Z == 0.


def _jac_double(X1, Y1, Z1):
    if Z1 == 0 or Y1 == 0:
        return 0, 1, 0
    delta = Z1 * Z1 % P
    gamma = Y1 * Y1 % P
    beta = X1 * gamma % P
    alpha = 3 * (X1 - delta) * (X1 + delta) % P
    X3 = (alpha * alpha - 8 * beta) % P
    Z3 = ((Y1 + Z1) * (Y1 + Z1) - gamma - delta) % P
    Y3 = (alpha * (4 * beta - X3) - 8 * gamma * gamma) % P
    return X3, Y3, Z3


def _jac_add_affine(X1, Y1, Z1, x2, y2):
    # Mixed addition with an affine second operand.
    if Z1 == 0:
        return x2, y2, 1
    Z1Z1 = Z1 * Z1 % P
    U2 = x2 * Z1Z1 % P
    S2 = y2 * Z1 * Z1Z1 % P
    H = (U2 - X1) % P
    R = (S2 - Y1) % P
    if H == 0:
        if R == 0:
            return _jac_double(X1, Y1, Z1)
        return 0, 1, 0
    HH = H * H % P
    HHH = H * HH % P
    V = X1 * HH % P
    X3 = (R * R - HHH - 2 * V) % P
    Y3 = (R * (V - X3) - Y1 * HHH) % P
    Z3 = Z1 * H % P
    return X3, Y3, Z3


_G_TABLES = None


def _g_tables():
    # 64 windows of 4 bits each: table[w][v] = v * 2^{4w} * G in affine form.
    # Built once, ~1k additions; thereafter any k*G costs ~60 mixed adds and
    # zero doublings, which matters because almost every fixed-base operation
    # in the package (keygen, nonces, OT round 2, Pedersen blinding) hits it.
    global _G_TABLES
    if _G_TABLES is None:
        tabs = []
        base = G
        for _ in range(64):
            row = [None] * 16
            row[1] = (base.x, base.y)
            acc = base
            for v in range(2, 16):
                acc = _add(acc, base)
                row[v] = (acc.x, acc.y)
            tabs.append(row)
            base = _add(acc, base)
        _G_TABLES = tabs
    return _G_TABLES


def mul_g(k):
    """k*G via the precomputed comb."""
    k %= Q
    if k == 0:
        return IDENTITY
    X, Y, Z = 0, 1, 0
    for tab in _g_tables():
        nib = k & 0xF
        k >>= 4
        if nib:
            X, Y, Z = _jac_add_affine(X, Y, Z, *tab[nib])
        if not k:
            break
    if Z == 0:
        return IDENTITY
    zinv = pow(Z, -1, P)
    z2 = zinv * zinv % P
    return Point(X * z2 % P, Y * z2 * zinv % P)


def _mul(p, k):
    if k == 0 or p.is_identity():
        return IDENTITY
    if p.x == GX and p.y == GY:
        return mul_g(k)
    # 4-bit fixed window over Jacobian doubling with mixed additions.
    table = [None] * 16
    table[1] = (p.x, p.y)
    acc = p
    for i in range(2, 16):
        acc = _add(acc, p)
        table[i] = (acc.x, acc.y)
    X, Y, Z = 0, 1, 0
    started = False
    for shift in range(252, -4, -4):
        if started:
            for _ in range(4):
                X, Y, Z = _jac_double(X, Y, Z)
        nib = (k >> shift) & 0xF
        if nib:
            started = True
            X, Y, Z = _jac_add_affine(X, Y, Z, *table[nib])
    if Z == 0:
        return IDENTITY
    zinv = pow(Z, -1, P)
    z2 = zinv * zinv % P
    return Point(X * z2 % P, Y * z2 * zinv % P)


class FixedBases:
    """Precomputed 4-bit window tables for a fixed list of base points.

    Building the tables costs ~14 additions per point; reusing them across
    several multiexp calls over the same bases (the membership proof does
    one per polynomial degree) amortizes that away.
    """

    __slots__ = ("points", "_tables")

    def __init__(self, points):
        self.points = list(points)
        self._tables = []
        for p in self.points:
            if p.is_identity():
                self._tables.append(None)
                continue
            table = [None] * 16
            table[1] = (p.x, p.y)
            acc = p
            for i in range(2, 16):
                acc = _add(acc, p)
                table[i] = (acc.x, acc.y)
            self._tables.append(table)

    def multiexp(self, scalars, extra=()):
        """sum(k_i * P_i) + sum(k_j * E_j) for (E_j, k_j) in `extra`."""
        if len(scalars) != len(self.points):
            raise ValueError("scalar count does not match base count")
        work = [
            (t, k % Q)
            for t, k in zip(self._tables, scalars)
            if t is not None and k % Q != 0
        ]
        for p, k in extra:
            k %= Q
            if k == 0 or p.is_identity():
                continue
            table = [None] * 16
            table[1] = (p.x, p.y)
            acc = p
            for i in range(2, 16):
                acc = _add(acc, p)
                table[i] = (acc.x, acc.y)
            work.append((table, k))
        X, Y, Z = 0, 1, 0
        for shift in range(252, -4, -4):
            if Z != 0:
                for _ in range(4):
                    X, Y, Z = _jac_double(X, Y, Z)
            for table, k in work:
                nib = (k >> shift) & 0xF
                if nib:
                    X, Y, Z = _jac_add_affine(X, Y, Z, *table[nib])
        if Z == 0:
            return IDENTITY
        zinv = pow(Z, -1, P)
        z2 = zinv * zinv % P
        return Point(X * z2 % P, Y * z2 * zinv % P)


def multiexp(terms):
    """Compute sum(k_i * P_i) with shared doublings (Straus, 4-bit windows).

    `terms` is an iterable of (Point, scalar) pairs. Much faster than adding
    up individual multiplications when there are many terms, as in the
    membership-proof inner products.
    """
    terms = list(terms)
    bases = FixedBases([p for p, _ in terms])
    return bases.multiexp([k for _, k in terms])


def decode_point(data):
    """Parse a 33-byte compressed point; reject malformed or off-curve input."""
    if not isinstance(data, (bytes, bytearray)) or len(data) != POINT_BYTES:
        raise ValueError("compressed point must be 33 bytes")
    prefix = data[0]
    if prefix not in (2, 3):
        raise ValueError("bad compression prefix 0x%02x" % prefix)
    x = int.from_bytes(data[1:], "big")
    if x >= P:
        raise ValueError("x coordinate out of range")
    rhs = (x * x * x + A * x + B) % P
    y = pow(rhs, (P + 1) // 4, P)
    if y * y % P != rhs:
        raise ValueError("point not on curve")
    if y & 1 != prefix & 1:
        y = P - y
    return Point(x, y)


def scalar_to_bytes(k):
    return (k % Q).to_bytes(SCALAR_BYTES, "big")


def scalar_from_bytes(data):
    if len(data) != SCALAR_BYTES:
        raise ValueError("scalar must be 32 bytes")
    return int.from_bytes(data, "big") % Q


def rand_scalar(nonzero=False):
    while True:
        k = secrets.randbelow(Q)
        if k or not nonzero:
            return k


def hash_to_group(data, tag=b"larchkit/h2g/v1"):
    """Map bytes to a curve point by try-and-increment.

    Candidate x-coordinates are SHA-256(tag || data || counter); the first
    one landing on the curve wins and the even-y root is taken. Expected
    two attempts; the counter is one byte because failure of 256 straight
    candidates is beyond negligible.
    """
    for ctr in range(256):
        h = hashlib.sha256(tag + data + bytes([ctr])).digest()
        x = int.from_bytes(h, "big")
        if x >= P:
            continue
        rhs = (x * x * x + A * x + B) % P
        y = pow(rhs, (P + 1) // 4, P)
        if y * y % P == rhs:
            if y & 1:
                y = P - y
            return Point(x, y)
    raise RuntimeError("hash_to_group exhausted its counter")
