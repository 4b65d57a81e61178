"""Split-trust password manager protocol.

Per account the log holds an evaluation key k and the client's ElGamal
public key X; the client holds the ElGamal secret x and, per site, a vault
element k_id. A site's stored secret is the group element

    pw = k_id * H(id)^k

so neither side can produce it alone: the client lacks k, the log lacks
k_id (and never sees which site an authentication targets).

Authentication sends c1 = r*G, c2 = H(id) + r*X, an ElGamal encryption of
the site point under the client's own key, which doubles as the audit
record. Dividing c2 by every registered site point turns "c2 encrypts a
registered site" into "one of h_i has discrete log r to base X", proven
with a one-out-of-many membership proof; a second proof over base c1 and
witness x shows the ciphertext is honestly formed under the account's X.
The log then returns beta = k*c2, which the client unblinds:

    pw = k_id * beta - x*r*K        (K = k*G, handed out at enrollment)

The registered-site list is padded to a power of two with pseudo-site
points derived from a shared pad seed, keyed by list version and slot, so
proof sizes only leak log2 of the list length.

Legacy import picks k_id = pw - H(id)^k for an existing secret's element
so later authentications reproduce that exact element; fresh registrations
pick k_id at random. `render_password` turns either into login characters.
"""

import hashlib
import hmac
import struct

from .group import G, POINT_BYTES, Q, decode_point, hash_to_group, rand_scalar
from . import dlproof
from .sym import open_ct, prg_bytes, seal

CT_BYTES = 2 * POINT_BYTES  # c1 || c2
_ID_TAG = b"larchkit-pw-id"
_PAD_TAG = b"larchkit-pw-pad"
_LEGACY_TAG = b"larchkit-pw-legacy"
_RENDER_TAG = b"larchkit-pw-render"
_WRAP_TAG = b"larchkit-pw-wrap"
_WRAP_MAC = 16

_ALPHABET = "abcdefghijkmnpqrstuvwxyzABCDEFGHJKLMNPQRSTUVWXYZ23456789"


class PwError(ValueError):
    pass


def hash_id(site_id):
    if isinstance(site_id, str):
        site_id = site_id.encode()
    return hash_to_group(_ID_TAG + site_id)


def legacy_element(secret):
    """Deterministic group element standing in for an imported secret."""
    if isinstance(secret, str):
        secret = secret.encode()
    return hash_to_group(_LEGACY_TAG + secret)


def wrap_legacy(pw_element, secret):
    """Encrypt an imported password under a key only a full auth rebuilds.

    The vault keeps only this blob; the element (and so the plaintext)
    stays unrecoverable without the log's evaluation share.
    """
    if isinstance(secret, str):
        secret = secret.encode()
    key = hashlib.sha256(_WRAP_TAG + pw_element.encode()).digest()
    blob = seal(key, secret)
    mac = hmac.new(key, _WRAP_TAG + blob, hashlib.sha256).digest()[:_WRAP_MAC]
    return blob + mac


def unwrap_legacy(pw_element, blob):
    if len(blob) <= _WRAP_MAC:
        raise PwError("legacy wrapper too short")
    body, mac = blob[:-_WRAP_MAC], blob[-_WRAP_MAC:]
    key = hashlib.sha256(_WRAP_TAG + pw_element.encode()).digest()
    want = hmac.new(key, _WRAP_TAG + body, hashlib.sha256).digest()[:_WRAP_MAC]
    if not hmac.compare_digest(mac, want):
        raise PwError("legacy wrapper does not open under this element")
    return open_ct(key, body).decode()


def pad_length(count):
    n = 2
    while n < count:
        n *= 2
    return n


def padded_slots(points, pad_seed, version):
    """Extend the registered-site points to a power of two with dummies."""
    n = pad_length(len(points))
    out = list(points)
    for slot in range(len(points), n):
        material = prg_bytes(pad_seed, _PAD_TAG, 32, counter=(version << 20) | slot)
        out.append(hash_to_group(_PAD_TAG + material))
    return out


# --- registration -------------------------------------------------------


def register_point(site_id):
    return hash_id(site_id)


def register_eval(k, point):
    """Log side: gamma = k * H(id) for a newly registered site."""
    if point.is_identity():
        raise PwError("site point cannot be the identity")
    return point * k


def fresh_kid():
    return G * rand_scalar(nonzero=True)


def legacy_kid(pw_element, gamma):
    """k_id so that k_id + gamma reproduces pw_element exactly."""
    return pw_element - gamma


def registered_pw(k_id, gamma):
    return k_id + gamma


# --- authentication ------------------------------------------------------


def make_auth(x, X, slots, pad_seed, version, index, context):
    """Client side: build (ct, proof1, proof2, r) for site at `index`."""
    if not (0 <= index < len(slots)):
        raise PwError("site index out of range")
    padded = padded_slots(slots, pad_seed, version)
    r = rand_scalar(nonzero=True)
    c1 = G * r
    c2 = padded[index] + X * r
    hs = [c2 - p for p in padded]
    ct = c1.encode() + c2.encode()
    ctx = _proof_context(context, ct, version, len(padded))
    pf1 = dlproof.prove(X, hs, index, r, context=ctx)
    pf2 = dlproof.prove(c1, hs, index, x, context=ctx)
    return ct, pf1, pf2, r


def log_auth_eval(k, X, slots, pad_seed, version, ct, pf1, pf2, context):
    """Log side: verify both proofs, return beta = k * c2."""
    if len(ct) != CT_BYTES:
        raise PwError("ciphertext must be %d bytes" % CT_BYTES)
    c1 = decode_point(ct[:POINT_BYTES])
    c2 = decode_point(ct[POINT_BYTES:])
    padded = padded_slots(slots, pad_seed, version)
    hs = [c2 - p for p in padded]
    ctx = _proof_context(context, ct, version, len(padded))
    if not dlproof.verify(X, hs, pf1, context=ctx):
        raise PwError("membership proof over the account key failed")
    if not dlproof.verify(c1, hs, pf2, context=ctx):
        raise PwError("ciphertext well-formedness proof failed")
    return c2 * k


def finish_auth(k_id, beta, K, x, r):
    """Client side: unblind beta into the site's pw element."""
    return k_id + beta - K * (x * r % Q)


def decrypt_record(x, ct):
    """Audit: recover the site point from a stored ciphertext."""
    if len(ct) != CT_BYTES:
        raise PwError("ciphertext must be %d bytes" % CT_BYTES)
    c1 = decode_point(ct[:POINT_BYTES])
    c2 = decode_point(ct[POINT_BYTES:])
    return c2 - c1 * x


def _proof_context(context, ct, version, n):
    return hashlib.sha256(
        b"larchkit-pw-ctx" + struct.pack("<LL", version, n) + ct + context
    ).digest()


def render_password(pw_element, length=20):
    """Map a pw element to login characters (letters, digits; no lookalikes)."""
    if length < 8 or length > 64:
        raise PwError("rendered length out of range")
    material = hashlib.sha256(_RENDER_TAG + pw_element.encode()).digest()
    while len(material) < length * 2:
        material += hashlib.sha256(_RENDER_TAG + material[-32:]).digest()
    return "".join(_ALPHABET[b % len(_ALPHABET)] for b in material[:length])
