"""FIDO2-style authentication statements and record ciphertexts.

An authentication must convince the log of three things at once, without
revealing the relying party: the client knows the archive key behind its
enrolled commitment, the submitted record ciphertext really encrypts the
relying-party identifier under that key, and the digest about to be signed
is the hash of that same identifier plus the challenge. All three are one
circuit satisfiability statement proven in zero knowledge.

Layout (matches the circuit's two input blocks):
    witness: k (32) || r (32) || rp_id (32) || challenge (32) || nonce (12)
    public:  cm (32) || nonce (12) || ct_body (32) || digest (32)

The record ciphertext stored by the log is nonce || ct_body (44 bytes);
the client decrypts it during audit with the archive key alone.
"""

import hashlib

from . import zkboo
from .circuits import build
from .group import Q
from .sym import stream_xor, rand_bytes

RP_BYTES = 32
CHAL_BYTES = 32
NONCE_BYTES = 12
CT_BYTES = NONCE_BYTES + RP_BYTES  # 44


class Fido2Error(ValueError):
    pass


def circuit():
    return build.build_fido2()


def rp_identifier(rp_name):
    """Fixed-width identifier for a relying party name."""
    if isinstance(rp_name, str):
        rp_name = rp_name.encode()
    return hashlib.sha256(b"larchkit-rp-id" + rp_name).digest()


def archive_commitment(k, r):
    return hashlib.sha256(k + r).digest()


def encrypt_rp(k, rp_id, nonce=None):
    """Record ciphertext: nonce || rp_id xor keystream."""
    if nonce is None:
        nonce = rand_bytes(NONCE_BYTES)
    body = stream_xor(k, nonce, rp_id)
    return nonce + body


def decrypt_record(k, ct):
    if len(ct) != CT_BYTES:
        raise Fido2Error("record ciphertext must be %d bytes" % CT_BYTES)
    return stream_xor(k, ct[:NONCE_BYTES], ct[NONCE_BYTES:])


def auth_digest(rp_id, challenge):
    """The hash the split signature is issued over."""
    return hashlib.sha256(rp_id + challenge).digest()


def digest_scalar(dgst):
    return int.from_bytes(dgst, "big") % Q


def statement_publics(cm, ct, dgst):
    if len(cm) != 32 or len(ct) != CT_BYTES or len(dgst) != 32:
        raise Fido2Error("malformed statement")
    return cm + ct + dgst


def prove_auth(k, r, rp_id, challenge, reps, nonce=None):
    """Client side: returns (ct, dgst, proof) for one authentication."""
    if len(rp_id) != RP_BYTES or len(challenge) != CHAL_BYTES:
        raise Fido2Error("rp identifier and challenge must be 32 bytes each")
    ct = encrypt_rp(k, rp_id, nonce)
    dgst = auth_digest(rp_id, challenge)
    witness = k + r + rp_id + challenge + ct[:NONCE_BYTES]
    publics = statement_publics(archive_commitment(k, r), ct, dgst)
    proof = zkboo.prove(circuit(), witness, publics, reps)
    return ct, dgst, proof


def verify_auth(cm, ct, dgst, proof, reps):
    """Log side: check the statement before lending its signature share."""
    try:
        publics = statement_publics(cm, ct, dgst)
    except Fido2Error:
        return False
    return zkboo.verify(circuit(), publics, proof, reps)
