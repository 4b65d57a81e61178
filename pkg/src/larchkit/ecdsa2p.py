"""Two-party ECDSA signing from client-generated presignatures.

The signing key is additively split: the client holds x, the log holds y,
signatures verify under pk = (x + y) * G. At enrollment the client
generates a batch of one-time presignatures. Each one fixes a nonce k and
shares r = k^-1, a Beaver triple (a, b, c = a*b) to multiply r by the key,
and information-theoretic MACs (hat values are alpha times the value, with
alpha additively shared) so that either party shifting an opened share is
caught except with probability 1/q.

Online signing on digest h with conversion value t = x(R) mod q:
    open d = r - a and e = key - b
    z_i    = [i == 0]*d*e + d*b_i + e*a_i + c_i          (shares of r*key)
    s_i    = h*r_i + t*z_i                               (shares of s)
    zhat_i = d*e*alpha_i + d*g_i + e*f_i + hh_i          (shares of alpha*z)
    shat_i = h*rhat_i + t*zhat_i                         (shares of alpha*s)
then s is opened and each side checks the other's MAC tag over a
commit-then-reveal exchange: sigma_i = shat_i - alpha_i*s must sum to zero,
and likewise tau_i = dhat_i - alpha_i*d for the opened d. A party that
shifted d or s cannot produce a matching tag because it does not know alpha.

Only e (the key-share opening) is unauthenticated: shifting it by w yields
a signature under pk + w*G, which no relying party accepts, so it hurts
only the cheater.

Storage split per presignature: the log's half is exactly six scalars
(t, r0, rhat0, c0, g0, hh0; 192 bytes), with its remaining four
(alpha0, a0, b0, f0) expanded from a per-batch derivation seed it was
handed. The client stores only the two batch seeds plus t per index and
recomputes everything else, including the correction f1 = alpha*a - f0.
"""

import hashlib
import secrets
import struct

from .group import G, Q, scalar_from_bytes, scalar_to_bytes
from .ecdsa import conv, sig_to_bytes
from .sym import commit, prg_expand, rand_bytes, verify_commitment

PRESIG_BYTES = 192
BATCH_MAGIC = b"PS1\x00"
SEED_BYTES = 32


class TamperAbort(Exception):
    """A MAC or commitment check failed; the run is discarded."""


class DegenerateSignature(Exception):
    """t or s came out zero; the presignature is burned, retry with the next."""


def _client_scalars(batch_seed, index):
    # r1, rhat1, alpha1, a1, b1, c1, g1, hh1
    return prg_expand(batch_seed, index, 8)


def _log_scalars(deriv_seed, index):
    # alpha0, a0, b0, f0
    return prg_expand(deriv_seed, index, 4)


class ClientPresig:
    """Everything the client needs to run its side of one signing."""

    __slots__ = (
        "index", "t", "r1", "rhat1", "alpha1", "a1", "b1", "c1", "g1", "hh1", "f1",
    )

    def __init__(self, index, t, batch_seed, deriv_seed):
        self.index = index
        self.t = t
        (self.r1, self.rhat1, self.alpha1, self.a1,
         self.b1, self.c1, self.g1, self.hh1) = _client_scalars(batch_seed, index)
        alpha0, a0, b0, f0 = _log_scalars(deriv_seed, index)
        alpha = (alpha0 + self.alpha1) % Q
        a = (a0 + self.a1) % Q
        self.f1 = (alpha * a - f0) % Q


class LogPresig:
    """The log's half: six stored scalars plus four seed-derived ones."""

    __slots__ = ("index", "t", "r0", "rhat0", "c0", "g0", "hh0",
                 "alpha0", "a0", "b0", "f0")

    def __init__(self, index, stored, deriv_seed):
        if len(stored) != PRESIG_BYTES:
            raise ValueError("stored presignature half must be %d bytes" % PRESIG_BYTES)
        vals = [scalar_from_bytes(stored[i * 32 : (i + 1) * 32]) for i in range(6)]
        self.index = index
        self.t, self.r0, self.rhat0, self.c0, self.g0, self.hh0 = vals
        self.alpha0, self.a0, self.b0, self.f0 = _log_scalars(deriv_seed, index)


class PresigBatch:
    """Client-side presignature batch; generation and both serializations."""

    def __init__(self, batch_seed, deriv_seed, ts, start_index=0):
        self.batch_seed = batch_seed
        self.deriv_seed = deriv_seed
        self.ts = list(ts)
        self.start_index = start_index

    @classmethod
    def generate(cls, count, start_index=0, batch_seed=None, deriv_seed=None):
        if batch_seed is None:
            batch_seed = rand_bytes(SEED_BYTES)
        if deriv_seed is None:
            deriv_seed = rand_bytes(SEED_BYTES)
        ts = []
        for i in range(start_index, start_index + count):
            while True:
                k = secrets.randbelow(Q - 1) + 1
                t = conv(G * k)
                if t != 0:
                    break
            ts.append((t, k))
        return cls(batch_seed, deriv_seed, [t for t, _ in ts], start_index), [k for _, k in ts]

    @classmethod
    def generate_batch(cls, count, start_index=0):
        batch, _ = cls.generate(count, start_index)
        return batch

    def __len__(self):
        return len(self.ts)

    def client_presig(self, index):
        t = self.ts[index - self.start_index]
        return ClientPresig(index, t, self.batch_seed, self.deriv_seed)

    def log_half(self, index, k):
        """Serialize the log's 192-byte half for one presignature."""
        cp = self.client_presig(index)
        alpha0, a0, b0, f0 = _log_scalars(self.deriv_seed, index)
        alpha = (alpha0 + cp.alpha1) % Q
        a = (a0 + cp.a1) % Q
        b = (b0 + cp.b1) % Q
        r = pow(k, -1, Q)
        r0 = (r - cp.r1) % Q
        rhat0 = (alpha * r - cp.rhat1) % Q
        c0 = (a * b - cp.c1) % Q
        g0 = (alpha * b - cp.g1) % Q
        hh0 = (alpha * (a * b % Q) - cp.hh1) % Q
        return b"".join(scalar_to_bytes(v) for v in (cp.t, r0, rhat0, c0, g0, hh0))

    def log_file(self, ks):
        """The full upload: magic, start index, count, then 192-byte halves."""
        if len(ks) != len(self.ts):
            raise ValueError("nonce count mismatch")
        out = bytearray()
        out += BATCH_MAGIC
        out += struct.pack("<LL", self.start_index, len(self.ts))
        for off, k in enumerate(ks):
            out += self.log_half(self.start_index + off, k)
        return bytes(out)


def parse_log_file(data):
    """-> (start_index, [bytes halves]); validates framing."""
    if len(data) < 12 or data[:4] != BATCH_MAGIC:
        raise ValueError("bad presignature file header")
    start, count = struct.unpack_from("<LL", data, 4)
    body = data[12:]
    if len(body) != count * PRESIG_BYTES:
        raise ValueError("presignature file body has wrong size")
    return start, [body[i * PRESIG_BYTES : (i + 1) * PRESIG_BYTES] for i in range(count)]


# --- online protocol ---------------------------------------------------
#
# round 1: client -> log: d1, e1          log -> client: d0, e0, s0
# round 2: client -> log: s, commit       log -> client: sigma0, tau0
# round 3: client -> log: sigma1, tau1, nonce (commitment opening)
#
# The client can already assemble the signature after round 2's MAC check;
# round 3 lets the log run the symmetric check on the client's tags.


class ClientSigning:
    def __init__(self, presig, x_share, digest_scalar):
        self.p = presig
        self.x = x_share % Q
        self.h = digest_scalar % Q
        self.d1 = (presig.r1 - presig.a1) % Q
        self.e1 = (self.x - presig.b1) % Q

    def round1_payload(self):
        return self.d1, self.e1

    def round2(self, d0, e0, s0):
        p = self.p
        d = (d0 + self.d1) % Q
        e = (e0 + self.e1) % Q
        z1 = (d * p.b1 + e * p.a1 + p.c1) % Q
        s1 = (self.h * p.r1 + p.t * z1) % Q
        zhat1 = (d * e % Q * p.alpha1 + d * p.g1 + e * p.f1 + p.hh1) % Q
        shat1 = (self.h * p.rhat1 + p.t * zhat1) % Q
        dhat1 = (p.rhat1 - p.f1) % Q
        self.d = d
        self.s = (s0 + s1) % Q
        self.sigma1 = (shat1 - p.alpha1 * self.s) % Q
        self.tau1 = (dhat1 - p.alpha1 * d) % Q
        self._nonce = rand_bytes(32)
        tag = commit(scalar_to_bytes(self.sigma1) + scalar_to_bytes(self.tau1), self._nonce)
        return self.s, tag

    def finish(self, sigma0, tau0):
        """Check the log's tags; returns the 64-byte signature."""
        if (sigma0 + self.sigma1) % Q != 0 or (tau0 + self.tau1) % Q != 0:
            raise TamperAbort("log share failed MAC open")
        if self.s == 0 or self.p.t == 0:
            raise DegenerateSignature("zero signature component")
        return sig_to_bytes((self.p.t, self.s))

    def round3_payload(self):
        return self.sigma1, self.tau1, self._nonce


class LogSigning:
    def __init__(self, presig, y_share, digest_scalar, d1, e1):
        p = presig
        self.p = p
        self.h = digest_scalar % Q
        self.d0 = (p.r0 - p.a0) % Q
        self.e0 = (y_share - p.b0) % Q
        d = (self.d0 + d1) % Q
        e = (self.e0 + e1) % Q
        de = d * e % Q
        z0 = (de + d * p.b0 + e * p.a0 + p.c0) % Q
        self.s0 = (self.h * p.r0 + p.t * z0) % Q
        zhat0 = (de * p.alpha0 + d * p.g0 + e * p.f0 + p.hh0) % Q
        self.shat0 = (self.h * p.rhat0 + p.t * zhat0) % Q
        self.dhat0 = (p.rhat0 - p.f0) % Q
        self.d = d

    def round1_payload(self):
        return self.d0, self.e0, self.s0

    def round2(self, s, client_commit):
        self.s = s % Q
        self.client_commit = client_commit
        self.sigma0 = (self.shat0 - self.p.alpha0 * self.s) % Q
        self.tau0 = (self.dhat0 - self.p.alpha0 * self.d) % Q
        return self.sigma0, self.tau0

    def round3(self, sigma1, tau1, nonce):
        """Verify the client's commitment opening and MAC tags."""
        body = scalar_to_bytes(sigma1) + scalar_to_bytes(tau1)
        if not verify_commitment(self.client_commit, body, nonce):
            raise TamperAbort("client commitment does not open")
        if (self.sigma0 + sigma1) % Q != 0 or (self.tau0 + tau1) % Q != 0:
            raise TamperAbort("client share failed MAC open")
        return True


def sign_with_presig(cp, lp, x_share, y_share, digest_scalar):
    """Run the whole exchange in-process; returns the 64-byte signature."""
    cl = ClientSigning(cp, x_share, digest_scalar)
    d1, e1 = cl.round1_payload()
    lg = LogSigning(lp, y_share, digest_scalar, d1, e1)
    d0, e0, s0 = lg.round1_payload()
    s, tag = cl.round2(d0, e0, s0)
    sigma0, tau0 = lg.round2(s, tag)
    sig = cl.finish(sigma0, tau0)
    lg.round3(*cl.round3_payload())
    return sig
