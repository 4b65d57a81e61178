"""One-out-of-many discrete-log proofs (log-size ring membership).

Proves knowledge of an index idx and scalar w such that cms[idx] = w*base,
revealing neither. The commitment list length must be a power of two; the
proof grows by one constant step (4 points + 3 scalars) per doubling.

Construction: commit to each bit of idx with Pedersen commitments
Com(m; p) = m*U + p*base, where U is hashed from the base so nobody knows
their relative discrete log. For challenge x each bit commitment opens to
f_j = l_j*x + a_j; the products prod_j f_{j, i_j} form degree-m polynomials
in x whose leading coefficient selects exactly the committed index, and the
G_k points cancel every lower-order term. The final check collapses to one
multiexponentiation over the whole list.

The challenge is derived from the base, the list, all commitments, and a
caller-supplied context string, so a proof cannot be replayed against a
different list or session.
"""

import hashlib
import struct

from .group import (
    FixedBases,
    POINT_BYTES,
    Q,
    decode_point,
    hash_to_group,
    multiexp,
    rand_scalar,
    scalar_from_bytes,
    scalar_to_bytes,
)

_U_TAG = b"larchkit-oom-u"
_CHAL_TAG = b"larchkit-oom-chal"
VERSION = 1


class MembershipError(ValueError):
    pass


def _commit_base(base):
    return hash_to_group(base.encode() + _U_TAG)


def _levels(n):
    m = n.bit_length() - 1
    if n <= 1 or (1 << m) != n:
        raise MembershipError("list length must be a power of two >= 2")
    return m


def _challenge(base, u, cms, points, context):
    h = hashlib.sha256()
    h.update(_CHAL_TAG)
    h.update(base.encode())
    h.update(u.encode())
    h.update(struct.pack("<L", len(cms)))
    for p in cms:
        h.update(p.encode())
    for p in points:
        h.update(p.encode())
    h.update(struct.pack("<L", len(context)))
    h.update(context)
    return int.from_bytes(h.digest(), "big") % Q


def _poly_coeffs(index, m, ls, as_):
    """p_i(x) = prod_j f_{j, bit_j(i)} as coefficient lists, degree <= m."""
    n = 1 << m
    coeffs = []
    for i in range(n):
        poly = [1]
        for j in range(m):
            bit = (i >> j) & 1
            if bit:
                lin = (as_[j], ls[j])          # a_j + l_j x
            else:
                lin = (-as_[j] % Q, (1 - ls[j]) % Q)   # -a_j + (1-l_j) x
            nxt = [0] * (len(poly) + 1)
            for d, c in enumerate(poly):
                nxt[d] = (nxt[d] + c * lin[0]) % Q
                nxt[d + 1] = (nxt[d + 1] + c * lin[1]) % Q
            poly = nxt
        coeffs.append(poly)
    return coeffs


def prove(base, cms, index, wit, context=b""):
    """Membership proof for cms[index] = wit*base."""
    m = _levels(len(cms))
    if not (0 <= index < len(cms)):
        raise MembershipError("index out of range")
    if any(p.is_identity() for p in cms) or base.is_identity():
        raise MembershipError("identity points are not allowed in the statement")
    if cms[index] != base * wit:
        raise MembershipError("witness does not open the committed element")
    u = _commit_base(base)

    ls = [(index >> j) & 1 for j in range(m)]
    rs = [rand_scalar() for _ in range(m)]
    aa = [rand_scalar() for _ in range(m)]
    ss = [rand_scalar() for _ in range(m)]
    ts = [rand_scalar() for _ in range(m)]
    rhos = [rand_scalar() for _ in range(m)]

    B = [multiexp([(u, ls[j]), (base, rs[j])]) for j in range(m)]
    A = [multiexp([(u, aa[j]), (base, ss[j])]) for j in range(m)]
    C = [multiexp([(u, ls[j] * aa[j]), (base, ts[j])]) for j in range(m)]

    coeffs = _poly_coeffs(index, m, ls, aa)
    bases = FixedBases(cms)
    Gk = []
    for k in range(m):
        scalars = [coeffs[i][k] for i in range(len(cms))]
        Gk.append(bases.multiexp(scalars, extra=[(base, rhos[k])]))

    x = _challenge(base, u, cms, B + A + C + Gk, context)

    fs = [(ls[j] * x + aa[j]) % Q for j in range(m)]
    zas = [(rs[j] * x + ss[j]) % Q for j in range(m)]
    zbs = [(rs[j] * (x - fs[j]) + ts[j]) % Q for j in range(m)]
    zd = (wit * pow(x, m, Q) - sum(rhos[k] * pow(x, k, Q) for k in range(m))) % Q

    out = bytearray()
    out += struct.pack("<BB", VERSION, m)
    for p in B + A + C + Gk:
        out += p.encode()
    for v in fs + zas + zbs + [zd]:
        out += scalar_to_bytes(v)
    return bytes(out)


def proof_size(n):
    m = _levels(n)
    return 2 + 4 * m * POINT_BYTES + (3 * m + 1) * 32


def verify(base, cms, proof, context=b""):
    try:
        return _verify(base, cms, proof, context)
    except (MembershipError, ValueError, struct.error, IndexError):
        return False


def _verify(base, cms, proof, context):
    m = _levels(len(cms))
    if base.is_identity() or any(p.is_identity() for p in cms):
        raise MembershipError("identity points are not allowed in the statement")
    if len(proof) != proof_size(len(cms)):
        raise MembershipError("proof size does not match list length")
    if proof[0] != VERSION or proof[1] != m:
        raise MembershipError("bad proof header")
    off = 2
    pts = []
    for _ in range(4 * m):
        pts.append(decode_point(proof[off : off + POINT_BYTES]))
        off += POINT_BYTES
    sc = []
    for _ in range(3 * m + 1):
        sc.append(scalar_from_bytes(proof[off : off + 32]))
        off += 32
    B, A, C, Gk = pts[:m], pts[m : 2 * m], pts[2 * m : 3 * m], pts[3 * m :]
    fs, zas, zbs, zd = sc[:m], sc[m : 2 * m], sc[2 * m : 3 * m], sc[3 * m]

    u = _commit_base(base)
    x = _challenge(base, u, cms, pts, context)

    for j in range(m):
        # B_j^x * A_j == Com(f_j; za_j)
        lhs = multiexp([(B[j], x)]) + A[j]
        rhs = multiexp([(u, fs[j]), (base, zas[j])])
        if lhs != rhs:
            raise MembershipError("bit commitment check failed at level %d" % j)
        # B_j^{x-f_j} * C_j == Com(0; zb_j)
        lhs = multiexp([(B[j], (x - fs[j]) % Q)]) + C[j]
        rhs = multiexp([(base, zbs[j])])
        if lhs != rhs:
            raise MembershipError("bit product check failed at level %d" % j)

    exps = []
    for i in range(len(cms)):
        e = 1
        for j in range(m):
            e = e * (fs[j] if (i >> j) & 1 else (x - fs[j])) % Q
        exps.append(e)
    terms = [(cms[i], exps[i]) for i in range(len(cms))]
    terms += [(Gk[k], (-pow(x, k, Q)) % Q) for k in range(m)]
    terms += [(base, (-zd) % Q)]
    if multiexp(terms) != multiexp([]):
        raise MembershipError("aggregate membership check failed")
    return True
