"""Programmatic circuit construction.

All byte-valued circuit inputs and outputs use the package-wide wire
convention (little-endian bit order over the byte stream, see
`larchkit.bits`). Word-oriented primitives handle their own byte order
internally: SHA-256 words are big-endian over the stream, ChaCha20 words
little-endian.

A builder wire is just an int. Constants are synthesized from a zero wire
(x XOR x) so the gate alphabet stays XOR/AND/INV.
"""

import functools
from array import array

from .bristol import OP_AND, OP_INV, OP_XOR, Circuit

SHA_IV = (
    0x6A09E667, 0xBB67AE85, 0x3C6EF372, 0xA54FF53A,
    0x510E527F, 0x9B05688C, 0x1F83D9AB, 0x5BE0CD19,
)

SHA_K = (
    0x428A2F98, 0x71374491, 0xB5C0FBCF, 0xE9B5DBA5, 0x3956C25B, 0x59F111F1,
    0x923F82A4, 0xAB1C5ED5, 0xD807AA98, 0x12835B01, 0x243185BE, 0x550C7DC3,
    0x72BE5D74, 0x80DEB1FE, 0x9BDC06A7, 0xC19BF174, 0xE49B69C1, 0xEFBE4786,
    0x0FC19DC6, 0x240CA1CC, 0x2DE92C6F, 0x4A7484AA, 0x5CB0A9DC, 0x76F988DA,
    0x983E5152, 0xA831C66D, 0xB00327C8, 0xBF597FC7, 0xC6E00BF3, 0xD5A79147,
    0x06CA6351, 0x14292967, 0x27B70A85, 0x2E1B2138, 0x4D2C6DFC, 0x53380D13,
    0x650A7354, 0x766A0ABB, 0x81C2C92E, 0x92722C85, 0xA2BFE8A1, 0xA81A664B,
    0xC24B8B70, 0xC76C51A3, 0xD192E819, 0xD6990624, 0xF40E3585, 0x106AA070,
    0x19A4C116, 0x1E376C08, 0x2748774C, 0x34B0BCB5, 0x391C0CB3, 0x4ED8AA4A,
    0x5B9CCA4F, 0x682E6FF3, 0x748F82EE, 0x78A5636F, 0x84C87814, 0x8CC70208,
    0x90BEFFFA, 0xA4506CEB, 0xBEF9A3F7, 0xC67178F2,
)

CHACHA_CONSTANTS = (0x61707865, 0x3320646E, 0x79622D32, 0x6B206574)


class Builder:
    def __init__(self, input_blocks):
        self.input_blocks = list(input_blocks)
        self.n_in = sum(input_blocks)
        self._ops = []
        self._next = self.n_in
        self._zero = None
        self._one = None

    def _emit(self, op, a, b):
        self._ops.append((op, a, b))
        w = self._next
        self._next += 1
        return w

    def xor(self, a, b):
        return self._emit(OP_XOR, a, b)

    def and_(self, a, b):
        return self._emit(OP_AND, a, b)

    def inv(self, a):
        return self._emit(OP_INV, a, a)

    def zero(self):
        if self._zero is None:
            self._zero = self.xor(0, 0)
        return self._zero

    def one(self):
        if self._one is None:
            self._one = self.inv(self.zero())
        return self._one

    def const_bit(self, v):
        return self.one() if v else self.zero()

    def const_bits(self, value, width):
        return [self.const_bit((value >> i) & 1) for i in range(width)]

    def xor_bits(self, xs, ys):
        return [self.xor(a, b) for a, b in zip(xs, ys)]

    def xor_const(self, xs, value):
        return [self.inv(x) if (value >> i) & 1 else x for i, x in enumerate(xs)]

    def and_reduce(self, wires):
        wires = list(wires)
        while len(wires) > 1:
            nxt = [self.and_(wires[i], wires[i + 1]) for i in range(0, len(wires) - 1, 2)]
            if len(wires) % 2:
                nxt.append(wires[-1])
            wires = nxt
        return wires[0]

    def xor_reduce(self, wires):
        acc = wires[0]
        for w in wires[1:]:
            acc = self.xor(acc, w)
        return acc

    def eq(self, xs, ys):
        return self.and_reduce([self.inv(self.xor(a, b)) for a, b in zip(xs, ys)])

    def eq_const(self, xs, value):
        lits = []
        for i, x in enumerate(xs):
            lits.append(x if (value >> i) & 1 else self.inv(x))
        return self.and_reduce(lits)

    # -- 32-bit words: lists of 32 wires, bit 0 = LSB ----------------------

    def add_w(self, xs, ys):
        # Ripple-carry, one AND per bit: carry' = y ^ ((x^y) & (c^y)).
        out = []
        t = self.xor(xs[0], ys[0])
        out.append(t)
        carry = self.and_(xs[0], ys[0])
        for i in range(1, 32):
            t1 = self.xor(xs[i], ys[i])
            out.append(self.xor(t1, carry))
            if i < 31:
                t2 = self.xor(carry, ys[i])
                carry = self.xor(ys[i], self.and_(t1, t2))
        return out

    def rotr_w(self, xs, n):
        return [xs[(i + n) % 32] for i in range(32)]

    def rotl_w(self, xs, n):
        return self.rotr_w(xs, 32 - n)

    def shr_w(self, xs, n):
        z = self.zero()
        return [xs[i + n] if i + n < 32 else z for i in range(32)]

    def xor_w(self, *words):
        acc = list(words[0])
        for w in words[1:]:
            acc = self.xor_bits(acc, w)
        return acc

    def finish(self, output_wires, output_blocks):
        # Copy every output through XOR-with-zero so outputs are the last
        # wires of the file, as the format requires.
        z = self.zero()
        copies = [self.xor(w, z) for w in output_wires]
        assert copies[-1] == self._next - 1
        gates = array("i", bytes(16 * len(self._ops)))
        for i, (op, a, b) in enumerate(self._ops):
            gates[4 * i] = op
            gates[4 * i + 1] = a
            gates[4 * i + 2] = b
            gates[4 * i + 3] = self.n_in + i
        circ = Circuit(gates, self._next, self.input_blocks, output_blocks)
        assert circ.n_out == len(output_wires)
        return circ.validate()


# ---------------------------------------------------------------------------
# SHA-256


def words_from_bytes_be(bits):
    """Byte-stream wire list -> big-endian 32-bit word wire lists."""
    assert len(bits) % 32 == 0
    words = []
    for w in range(len(bits) // 32):
        word = []
        for j in range(32):
            byte_index = 4 * w + 3 - j // 8
            word.append(bits[8 * byte_index + j % 8])
        words.append(word)
    return words


def bytes_from_words_be(words):
    bits = []
    for word in words:
        for byte in range(4):
            src = 3 - byte
            bits.extend(word[8 * src : 8 * src + 8])
    return bits


def sha_compress(bld, block_words, state_words):
    """One SHA-256 compression: 16 message words + 8 state words -> 8 words."""
    w = list(block_words)
    for t in range(16, 64):
        s0 = bld.xor_w(bld.rotr_w(w[t - 15], 7), bld.rotr_w(w[t - 15], 18), bld.shr_w(w[t - 15], 3))
        s1 = bld.xor_w(bld.rotr_w(w[t - 2], 17), bld.rotr_w(w[t - 2], 19), bld.shr_w(w[t - 2], 10))
        w.append(bld.add_w(bld.add_w(s1, w[t - 7]), bld.add_w(s0, w[t - 16])))
    a, b, c, d, e, f, g, h = state_words
    for t in range(64):
        big_s1 = bld.xor_w(bld.rotr_w(e, 6), bld.rotr_w(e, 11), bld.rotr_w(e, 25))
        # Ch(e,f,g) = g ^ (e & (f^g))
        ch = bld.xor_bits(g, [bld.and_(e[i], bld.xor(f[i], g[i])) for i in range(32)])
        t1 = bld.add_w(bld.add_w(h, big_s1), bld.add_w(ch, bld.add_w(bld.const_bits(SHA_K[t], 32), w[t])))
        big_s0 = bld.xor_w(bld.rotr_w(a, 2), bld.rotr_w(a, 13), bld.rotr_w(a, 22))
        # Maj(a,b,c) = b ^ ((a^b) & (c^b))
        maj = bld.xor_bits(b, [bld.and_(bld.xor(a[i], b[i]), bld.xor(c[i], b[i])) for i in range(32)])
        t2 = bld.add_w(big_s0, maj)
        h, g, f, e, d, c, b, a = g, f, e, bld.add_w(d, t1), c, b, a, bld.add_w(t1, t2)
    final = [a, b, c, d, e, f, g, h]
    return [bld.add_w(s, f_) for s, f_ in zip(state_words, final)]


def sha256_message(bld, msg_bits):
    """Full SHA-256 over a static-length wire message; returns 256 digest bits."""
    nbytes = len(msg_bits) // 8
    assert len(msg_bits) % 8 == 0
    padded = list(msg_bits)
    padded.extend(bld.const_bits(0x80, 8))
    while (len(padded) + 64) % 512:
        padded.extend([bld.zero()] * 8)
    length_bits = []
    bitlen = nbytes * 8
    for byte in reversed(range(8)):  # big-endian length
        length_bits.extend(bld.const_bits((bitlen >> (8 * byte)) & 0xFF, 8))
    padded.extend(length_bits)
    state = [bld.const_bits(v, 32) for v in SHA_IV]
    for off in range(0, len(padded), 512):
        block = words_from_bytes_be(padded[off : off + 512])
        state = sha_compress(bld, block, state)
    return bytes_from_words_be(state)


def hmac_sha256(bld, key_bits256, msg_bits):
    """HMAC-SHA-256 with a 32-byte key over a static-length message."""
    zeros = [bld.zero()] * 256
    inner_key = bld.xor_const(list(key_bits256) + zeros, int.from_bytes(b"\x36" * 64, "little"))
    outer_key = bld.xor_const(list(key_bits256) + zeros, int.from_bytes(b"\x5c" * 64, "little"))
    inner = sha256_message(bld, inner_key + list(msg_bits))
    return sha256_message(bld, outer_key + inner)


# ---------------------------------------------------------------------------
# ChaCha20


def chacha_quarter(bld, st, a, b, c, d):
    st[a] = bld.add_w(st[a], st[b])
    st[d] = bld.rotl_w(bld.xor_w(st[d], st[a]), 16)
    st[c] = bld.add_w(st[c], st[d])
    st[b] = bld.rotl_w(bld.xor_w(st[b], st[c]), 12)
    st[a] = bld.add_w(st[a], st[b])
    st[d] = bld.rotl_w(bld.xor_w(st[d], st[a]), 8)
    st[c] = bld.add_w(st[c], st[d])
    st[b] = bld.rotl_w(bld.xor_w(st[b], st[c]), 7)


def chacha20_block(bld, key_bits, nonce_bits, counter=0):
    """One ChaCha20 block; returns 512 keystream bits (LE byte stream)."""
    state = [bld.const_bits(v, 32) for v in CHACHA_CONSTANTS]
    state += [list(key_bits[32 * i : 32 * i + 32]) for i in range(8)]
    state.append(bld.const_bits(counter, 32))
    state += [list(nonce_bits[32 * i : 32 * i + 32]) for i in range(3)]
    working = [list(w) for w in state]
    for _ in range(10):
        chacha_quarter(bld, working, 0, 4, 8, 12)
        chacha_quarter(bld, working, 1, 5, 9, 13)
        chacha_quarter(bld, working, 2, 6, 10, 14)
        chacha_quarter(bld, working, 3, 7, 11, 15)
        chacha_quarter(bld, working, 0, 5, 10, 15)
        chacha_quarter(bld, working, 1, 6, 11, 12)
        chacha_quarter(bld, working, 2, 7, 8, 13)
        chacha_quarter(bld, working, 3, 4, 9, 14)
    out_bits = []
    for i in range(16):
        out_bits.extend(bld.add_w(working[i], state[i]))
    return out_bits


# ---------------------------------------------------------------------------
# Deliverable circuits


@functools.lru_cache(maxsize=None)
def build_sha256_compress():
    """Standalone compression circuit: [512-bit block, 256-bit state] -> 256."""
    bld = Builder([512, 256])
    block = words_from_bytes_be(list(range(512)))
    state = words_from_bytes_be(list(range(512, 768)))
    out = sha_compress(bld, block, state)
    return bld.finish(bytes_from_words_be(out), [256])


@functools.lru_cache(maxsize=None)
def build_chacha20_block():
    """Standalone keystream block: [256-bit key, 96-bit nonce] -> 512 bits."""
    bld = Builder([256, 96])
    out = chacha20_block(bld, list(range(256)), list(range(256, 352)), counter=0)
    return bld.finish(out, [512])


@functools.lru_cache(maxsize=None)
def build_fido2():
    """Credential-proof circuit.

    Witness block (1120): k(32B) r(32B) id(32B) chal(32B) nonce(12B).
    Public block (864):   cm(32B) ct = nonce||body(44B) dgst(32B).
    One output bit: commitment opens, ciphertext encrypts id under k with
    the stated nonce, and dgst = SHA-256(id || chal).
    """
    bld = Builder([1120, 864])
    w = iter(range(1120 + 864))
    k = [next(w) for _ in range(256)]
    r = [next(w) for _ in range(256)]
    rp_id = [next(w) for _ in range(256)]
    chal = [next(w) for _ in range(256)]
    nonce = [next(w) for _ in range(96)]
    cm = [next(w) for _ in range(256)]
    ct_nonce = [next(w) for _ in range(96)]
    ct_body = [next(w) for _ in range(256)]
    dgst = [next(w) for _ in range(256)]

    cm_calc = sha256_message(bld, k + r)
    ok_cm = bld.eq(cm_calc, cm)

    ks = chacha20_block(bld, k, nonce)[:256]
    body_calc = bld.xor_bits(rp_id, ks)
    ok_ct = bld.eq(nonce + body_calc, ct_nonce + ct_body)

    dgst_calc = sha256_message(bld, rp_id + chal)
    ok_dgst = bld.eq(dgst_calc, dgst)

    out = bld.and_reduce([ok_cm, ok_ct, ok_dgst])
    return bld.finish([out], [1])


@functools.lru_cache(maxsize=None)
def build_totp(n):
    """Joint TOTP evaluation over an n-entry registration list.

    Client block (992): k(32B) r(32B) id(16B) kclient(32B) nonce(12B).
    Log block (320 + 384n): cm(32B) t(8B, big-endian counter) then n times
    id_j(16B), then n times klog_j(32B).
    Outputs: client 31-bit truncated HMAC word; log block nonce(12B) ||
    ct_body(16B) || valid(1).
    """
    if n < 1 or n & (n - 1):
        raise ValueError("registration list size must be a power of two")
    bld = Builder([992, 320 + 384 * n])
    w = iter(range(992 + 320 + 384 * n))
    k = [next(w) for _ in range(256)]
    r = [next(w) for _ in range(256)]
    ident = [next(w) for _ in range(128)]
    kclient = [next(w) for _ in range(256)]
    nonce = [next(w) for _ in range(96)]
    cm = [next(w) for _ in range(256)]
    t_bits = [next(w) for _ in range(64)]
    ids = [[next(w) for _ in range(128)] for _ in range(n)]
    klogs = [[next(w) for _ in range(256)] for _ in range(n)]

    sel = [bld.eq(ident, ids[j]) for j in range(n)]
    valid_match = bld.xor_reduce(sel)
    klog_sel = []
    for b in range(256):
        klog_sel.append(bld.xor_reduce([bld.and_(sel[j], klogs[j][b]) for j in range(n)]))
    k_id = bld.xor_bits(kclient, klog_sel)

    digest = hmac_sha256(bld, k_id, t_bits)

    # RFC 4226 dynamic truncation: low nibble of the last byte picks a
    # 4-byte window, of which the top bit is dropped.
    offset = digest[31 * 8 : 31 * 8 + 4]
    off_sel = [bld.eq_const(offset, o) for o in range(16)]
    code = []
    for i in range(31):
        terms = []
        for o in range(16):
            byte_index = o + 3 - i // 8
            terms.append(bld.and_(off_sel[o], digest[8 * byte_index + i % 8]))
        code.append(bld.xor_reduce(terms))

    ks = chacha20_block(bld, k, nonce)[:128]
    ct_body = bld.xor_bits(ident, ks)

    cm_calc = sha256_message(bld, k + r)
    valid = bld.and_(valid_match, bld.eq(cm_calc, cm))

    outputs = code + nonce + ct_body + [valid]
    return bld.finish(outputs, [31, 96 + 128 + 1])
