# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled gate kernels: same interface as larchkit._purecore.

Lane buffers are little-endian uint64 limb vectors per item. Labels are
16 bytes. The SHA-256 used for garbled-row key derivation is implemented
here so the per-gate hashing stays inside the C loop; it must (and does,
see the parity tests) match hashlib exactly.
"""

from libc.stdlib cimport calloc, free
from libc.string cimport memcpy, memset

from .circuits.bristol import OP_XOR as _OP_XOR, OP_AND as _OP_AND, OP_INV as _OP_INV

cdef int OP_XOR = _OP_XOR
cdef int OP_AND = _OP_AND
cdef int OP_INV = _OP_INV

ctypedef unsigned long long u64
ctypedef unsigned int u32
ctypedef unsigned char u8


cdef inline u64 load64(const u8* p) nogil:
    cdef u64 v
    memcpy(&v, p, 8)
    return v


cdef inline void store64(u8* p, u64 v) nogil:
    memcpy(p, &v, 8)


# ---------------------------------------------------------------------------
# SHA-256 (single short block, for garbled-row keys)

cdef u32[64] SHA_K
SHA_K[0:64] = [
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
]


cdef inline u32 rotr(u32 x, int n) nogil:
    return (x >> n) | (x << (32 - n))


cdef void sha_compress(u32* st, const u8* block) nogil:
    cdef u32 w[64]
    cdef u32 a, b, c, d, e, f, g, h, t1, t2
    cdef int i
    for i in range(16):
        w[i] = (<u32>block[4*i] << 24) | (<u32>block[4*i+1] << 16) | (<u32>block[4*i+2] << 8) | <u32>block[4*i+3]
    for i in range(16, 64):
        w[i] = (rotr(w[i-2], 17) ^ rotr(w[i-2], 19) ^ (w[i-2] >> 10)) + w[i-7] \
             + (rotr(w[i-15], 7) ^ rotr(w[i-15], 18) ^ (w[i-15] >> 3)) + w[i-16]
    a = st[0]; b = st[1]; c = st[2]; d = st[3]
    e = st[4]; f = st[5]; g = st[6]; h = st[7]
    for i in range(64):
        t1 = h + (rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25)) + (g ^ (e & (f ^ g))) + SHA_K[i] + w[i]
        t2 = (rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22)) + ((a & b) | (c & (a | b)))
        h = g; g = f; f = e; e = d + t1
        d = c; c = b; b = a; a = t1 + t2
    st[0] += a; st[1] += b; st[2] += c; st[3] += d
    st[4] += e; st[5] += f; st[6] += g; st[7] += h


cdef void sha256_short(const u8* data, int n, u8* out32) nogil:
    # Single-block SHA-256 for messages up to 55 bytes.
    cdef u8 block[64]
    cdef u32 st[8]
    cdef int i
    memset(block, 0, 64)
    memcpy(block, data, n)
    block[n] = 0x80
    cdef u64 bits = <u64>n * 8
    for i in range(8):
        block[56 + i] = <u8>(bits >> (56 - 8 * i))
    st[0] = 0x6a09e667; st[1] = 0xbb67ae85; st[2] = 0x3c6ef372; st[3] = 0xa54ff53a
    st[4] = 0x510e527f; st[5] = 0x9b05688c; st[6] = 0x1f83d9ab; st[7] = 0x5be0cd19
    sha_compress(st, block)
    for i in range(8):
        out32[4*i]   = <u8>(st[i] >> 24)
        out32[4*i+1] = <u8>(st[i] >> 16)
        out32[4*i+2] = <u8>(st[i] >> 8)
        out32[4*i+3] = <u8>(st[i])


ROW_PREFIX = b"larchkit-gc-row"
cdef u8[15] ROW_PREFIX_C
memcpy(ROW_PREFIX_C, <const u8*><const char*>ROW_PREFIX, 15)


cdef void row_key(const u8* a_label, const u8* b_label, u64 gid, u8* out16) nogil:
    cdef u8 buf[55]
    cdef u8 digest[32]
    cdef int i
    memcpy(buf, ROW_PREFIX_C, 15)
    memcpy(buf + 15, a_label, 16)
    memcpy(buf + 31, b_label, 16)
    for i in range(8):
        buf[47 + i] = <u8>(gid >> (56 - 8 * i))
    sha256_short(buf, 55, digest)
    memcpy(out16, digest, 16)


# ---------------------------------------------------------------------------
# Lane kernels


def eval_lanes(gates_obj, int wire_count, int n_in, int n_out, int n_limbs, in_lanes_obj):
    cdef const int[::1] gates = gates_obj
    cdef const u8[::1] in_lanes = in_lanes_obj
    cdef int n_gates = gates.shape[0] // 4
    cdef int lane_bytes = 8 * n_limbs
    cdef u64* W = <u64*>calloc(<size_t>wire_count * n_limbs, 8)
    if W == NULL:
        raise MemoryError
    cdef int i, l, op, ia, ib, io
    cdef bytes result
    try:
        with nogil:
            for i in range(n_in):
                for l in range(n_limbs):
                    W[i * n_limbs + l] = load64(&in_lanes[i * lane_bytes + 8 * l])
            for i in range(n_gates):
                op = gates[4*i]; ia = gates[4*i+1]; ib = gates[4*i+2]; io = gates[4*i+3]
                if op == OP_XOR:
                    for l in range(n_limbs):
                        W[io * n_limbs + l] = W[ia * n_limbs + l] ^ W[ib * n_limbs + l]
                elif op == OP_AND:
                    for l in range(n_limbs):
                        W[io * n_limbs + l] = W[ia * n_limbs + l] & W[ib * n_limbs + l]
                else:
                    for l in range(n_limbs):
                        W[io * n_limbs + l] = ~W[ia * n_limbs + l]
        out = bytearray(n_out * lane_bytes)
        _copy_lanes_out(out, W, wire_count - n_out, n_out, n_limbs)
        result = bytes(out)
    finally:
        free(W)
    return result


cdef void _copy_lanes_out(u8[::1] out, const u64* W, int start, int count, int n_limbs):
    cdef int i, l
    for i in range(count):
        for l in range(n_limbs):
            store64(&out[i * 8 * n_limbs + 8 * l], W[(start + i) * n_limbs + l])


def mpc_prove(gates_obj, int wire_count, int n_in, int n_and, int n_out, int n_limbs,
              in0, in1, in2, tape0, tape1, tape2):
    cdef const int[::1] gates = gates_obj
    cdef const u8[::1] b_in0 = in0, b_in1 = in1, b_in2 = in2
    cdef const u8[::1] b_t0 = tape0, b_t1 = tape1, b_t2 = tape2
    cdef int n_gates = gates.shape[0] // 4
    cdef int lane_bytes = 8 * n_limbs
    cdef size_t plane = <size_t>wire_count * n_limbs
    cdef u64* W = <u64*>calloc(3 * plane, 8)
    cdef u64* T = <u64*>calloc(<size_t>3 * n_and * n_limbs + 1, 8)
    cdef u64* S = <u64*>calloc(<size_t>3 * n_and * n_limbs + 1, 8)
    if W == NULL or T == NULL or S == NULL:
        free(W); free(T); free(S)
        raise MemoryError
    cdef int i, l, op, ia, ib, io, gi
    cdef u64 a0, a1, a2, b0, b1, b2, c0, c1, c2
    cdef size_t sa, sb, so, tbase
    try:
        with nogil:
            for i in range(n_in):
                for l in range(n_limbs):
                    W[0 * plane + i * n_limbs + l] = load64(&b_in0[i * lane_bytes + 8 * l])
                    W[1 * plane + i * n_limbs + l] = load64(&b_in1[i * lane_bytes + 8 * l])
                    W[2 * plane + i * n_limbs + l] = load64(&b_in2[i * lane_bytes + 8 * l])
            for i in range(n_and):
                for l in range(n_limbs):
                    T[(0 * n_and + i) * n_limbs + l] = load64(&b_t0[i * lane_bytes + 8 * l])
                    T[(1 * n_and + i) * n_limbs + l] = load64(&b_t1[i * lane_bytes + 8 * l])
                    T[(2 * n_and + i) * n_limbs + l] = load64(&b_t2[i * lane_bytes + 8 * l])
            gi = 0
            for i in range(n_gates):
                op = gates[4*i]; ia = gates[4*i+1]; ib = gates[4*i+2]; io = gates[4*i+3]
                sa = <size_t>ia * n_limbs; sb = <size_t>ib * n_limbs; so = <size_t>io * n_limbs
                if op == OP_XOR:
                    for l in range(n_limbs):
                        W[so + l] = W[sa + l] ^ W[sb + l]
                        W[plane + so + l] = W[plane + sa + l] ^ W[plane + sb + l]
                        W[2 * plane + so + l] = W[2 * plane + sa + l] ^ W[2 * plane + sb + l]
                elif op == OP_AND:
                    tbase = <size_t>gi * n_limbs
                    for l in range(n_limbs):
                        a0 = W[sa + l]; a1 = W[plane + sa + l]; a2 = W[2 * plane + sa + l]
                        b0 = W[sb + l]; b1 = W[plane + sb + l]; b2 = W[2 * plane + sb + l]
                        c0 = (a0 & b0) ^ (a0 & b1) ^ (a1 & b0) ^ T[tbase + l] ^ T[(<size_t>n_and) * n_limbs + tbase + l]
                        c1 = (a1 & b1) ^ (a1 & b2) ^ (a2 & b1) ^ T[(<size_t>n_and) * n_limbs + tbase + l] ^ T[(<size_t>2 * n_and) * n_limbs + tbase + l]
                        c2 = (a2 & b2) ^ (a2 & b0) ^ (a0 & b2) ^ T[(<size_t>2 * n_and) * n_limbs + tbase + l] ^ T[tbase + l]
                        W[so + l] = c0
                        W[plane + so + l] = c1
                        W[2 * plane + so + l] = c2
                        S[tbase + l] = c0
                        S[(<size_t>n_and) * n_limbs + tbase + l] = c1
                        S[(<size_t>2 * n_and) * n_limbs + tbase + l] = c2
                    gi += 1
                else:
                    for l in range(n_limbs):
                        W[so + l] = ~W[sa + l]
                        W[plane + so + l] = W[plane + sa + l]
                        W[2 * plane + so + l] = W[2 * plane + sa + l]
        streams = []
        outs = []
        for p in range(3):
            sbuf = bytearray(n_and * lane_bytes)
            _copy_lanes_out(sbuf, S + <size_t>p * n_and * n_limbs, 0, n_and, n_limbs)
            streams.append(bytes(sbuf))
            obuf = bytearray(n_out * lane_bytes)
            _copy_lanes_out(obuf, W + <size_t>p * plane, wire_count - n_out, n_out, n_limbs)
            outs.append(bytes(obuf))
        result = (streams[0], streams[1], streams[2], outs[0], outs[1], outs[2])
    finally:
        free(W); free(T); free(S)
    return result


def mpc_reeval(gates_obj, int wire_count, int n_in, int n_and, int n_out, int n_limbs,
               in_a, in_b, tape_a, tape_b, stream_b, bint flip_a, bint flip_b):
    cdef const int[::1] gates = gates_obj
    cdef const u8[::1] b_ina = in_a, b_inb = in_b
    cdef const u8[::1] b_ta = tape_a, b_tb = tape_b, b_sb = stream_b
    cdef int n_gates = gates.shape[0] // 4
    cdef int lane_bytes = 8 * n_limbs
    cdef size_t plane = <size_t>wire_count * n_limbs
    cdef u64* WA = <u64*>calloc(plane, 8)
    cdef u64* WB = <u64*>calloc(plane, 8)
    cdef u64* SA = <u64*>calloc(<size_t>n_and * n_limbs + 1, 8)
    if WA == NULL or WB == NULL or SA == NULL:
        free(WA); free(WB); free(SA)
        raise MemoryError
    cdef int i, l, op, ia, ib, io, gi
    cdef u64 aa, ab, ba, bb, ca
    cdef size_t sa, sb, so
    try:
        with nogil:
            for i in range(n_in):
                for l in range(n_limbs):
                    WA[i * n_limbs + l] = load64(&b_ina[i * lane_bytes + 8 * l])
                    WB[i * n_limbs + l] = load64(&b_inb[i * lane_bytes + 8 * l])
            gi = 0
            for i in range(n_gates):
                op = gates[4*i]; ia = gates[4*i+1]; ib = gates[4*i+2]; io = gates[4*i+3]
                sa = <size_t>ia * n_limbs; sb = <size_t>ib * n_limbs; so = <size_t>io * n_limbs
                if op == OP_XOR:
                    for l in range(n_limbs):
                        WA[so + l] = WA[sa + l] ^ WA[sb + l]
                        WB[so + l] = WB[sa + l] ^ WB[sb + l]
                elif op == OP_AND:
                    for l in range(n_limbs):
                        aa = WA[sa + l]; ba = WA[sb + l]
                        ab = WB[sa + l]; bb = WB[sb + l]
                        ca = (aa & ba) ^ (aa & bb) ^ (ab & ba) \
                           ^ load64(&b_ta[gi * lane_bytes + 8 * l]) ^ load64(&b_tb[gi * lane_bytes + 8 * l])
                        SA[<size_t>gi * n_limbs + l] = ca
                        WA[so + l] = ca
                        WB[so + l] = load64(&b_sb[gi * lane_bytes + 8 * l])
                    gi += 1
                else:
                    for l in range(n_limbs):
                        WA[so + l] = (~WA[sa + l]) if flip_a else WA[sa + l]
                        WB[so + l] = (~WB[sa + l]) if flip_b else WB[sa + l]
        sbuf = bytearray(n_and * lane_bytes)
        _copy_lanes_out(sbuf, SA, 0, n_and, n_limbs)
        abuf = bytearray(n_out * lane_bytes)
        _copy_lanes_out(abuf, WA, wire_count - n_out, n_out, n_limbs)
        bbuf = bytearray(n_out * lane_bytes)
        _copy_lanes_out(bbuf, WB, wire_count - n_out, n_out, n_limbs)
        result = (bytes(sbuf), bytes(abuf), bytes(bbuf))
    finally:
        free(WA); free(WB); free(SA)
    return result


# ---------------------------------------------------------------------------
# Garbled circuits


def garble(gates_obj, int wire_count, int n_in, in_labels0, delta):
    cdef const int[::1] gates = gates_obj
    cdef const u8[::1] b_in = in_labels0
    cdef const u8[::1] b_delta = delta
    cdef int n_gates = gates.shape[0] // 4
    cdef u64 dlo = load64(&b_delta[0])
    cdef u64 dhi = load64(&b_delta[8])
    if not dlo & 1:
        raise ValueError("free-XOR offset must have its point bit set")
    cdef u64* L = <u64*>calloc(<size_t>wire_count * 2, 8)
    if L == NULL:
        raise MemoryError
    cdef int n_and = 0
    cdef int i
    for i in range(n_gates):
        if gates[4*i] == OP_AND:
            n_and += 1
    table = bytearray(48 * n_and)
    cdef u8[::1] tview = table
    labels = bytearray(16 * wire_count)
    cdef u8[::1] lview = labels
    cdef int op, ia, ib, io, gi, xa, yb, i_ext, j_ext, row
    cdef u64 alo, ahi, blo, bhi, out_lo, out_hi, klo, khi
    cdef u8 la[16]
    cdef u8 lb[16]
    cdef u8 key[16]
    cdef u8 keys[4][16]
    cdef int zs[4]
    try:
        with nogil:
            for i in range(n_in):
                L[2*i] = load64(&b_in[16*i])
                L[2*i+1] = load64(&b_in[16*i+8])
            gi = 0
            for i in range(n_gates):
                op = gates[4*i]; ia = gates[4*i+1]; ib = gates[4*i+2]; io = gates[4*i+3]
                if op == OP_XOR:
                    L[2*io] = L[2*ia] ^ L[2*ib]
                    L[2*io+1] = L[2*ia+1] ^ L[2*ib+1]
                elif op == OP_INV:
                    L[2*io] = L[2*ia] ^ dlo
                    L[2*io+1] = L[2*ia+1] ^ dhi
                else:
                    for i_ext in range(2):
                        for j_ext in range(2):
                            xa = i_ext ^ <int>(L[2*ia] & 1)
                            yb = j_ext ^ <int>(L[2*ib] & 1)
                            alo = L[2*ia] ^ (dlo if xa else 0)
                            ahi = L[2*ia+1] ^ (dhi if xa else 0)
                            blo = L[2*ib] ^ (dlo if yb else 0)
                            bhi = L[2*ib+1] ^ (dhi if yb else 0)
                            store64(la, alo); store64(la+8, ahi)
                            store64(lb, blo); store64(lb+8, bhi)
                            row_key(la, lb, <u64>gi, keys[2*i_ext + j_ext])
                            zs[2*i_ext + j_ext] = xa & yb
                    out_lo = load64(keys[0]) ^ (dlo if zs[0] else 0)
                    out_hi = load64(keys[0]+8) ^ (dhi if zs[0] else 0)
                    L[2*io] = out_lo
                    L[2*io+1] = out_hi
                    for row in range(1, 4):
                        klo = load64(keys[row]) ^ out_lo ^ (dlo if zs[row] else 0)
                        khi = load64(keys[row]+8) ^ out_hi ^ (dhi if zs[row] else 0)
                        store64(&tview[48*gi + 16*(row-1)], klo)
                        store64(&tview[48*gi + 16*(row-1) + 8], khi)
                    gi += 1
            for i in range(wire_count):
                store64(&lview[16*i], L[2*i])
                store64(&lview[16*i+8], L[2*i+1])
    finally:
        free(L)
    return bytes(labels), bytes(table)


def gc_eval(gates_obj, int wire_count, int n_in, in_labels, tables):
    cdef const int[::1] gates = gates_obj
    cdef const u8[::1] b_in = in_labels
    cdef const u8[::1] tview = tables
    cdef int n_gates = gates.shape[0] // 4
    cdef u64* L = <u64*>calloc(<size_t>wire_count * 2, 8)
    if L == NULL:
        raise MemoryError
    labels = bytearray(16 * wire_count)
    cdef u8[::1] lview = labels
    cdef int i, op, ia, ib, io, gi, i_ext, j_ext, row
    cdef u64 klo, khi
    cdef u8 la[16]
    cdef u8 lb[16]
    cdef u8 key[16]
    try:
        with nogil:
            for i in range(n_in):
                L[2*i] = load64(&b_in[16*i])
                L[2*i+1] = load64(&b_in[16*i+8])
            gi = 0
            for i in range(n_gates):
                op = gates[4*i]; ia = gates[4*i+1]; ib = gates[4*i+2]; io = gates[4*i+3]
                if op == OP_XOR:
                    L[2*io] = L[2*ia] ^ L[2*ib]
                    L[2*io+1] = L[2*ia+1] ^ L[2*ib+1]
                elif op == OP_INV:
                    L[2*io] = L[2*ia]
                    L[2*io+1] = L[2*ia+1]
                else:
                    store64(la, L[2*ia]); store64(la+8, L[2*ia+1])
                    store64(lb, L[2*ib]); store64(lb+8, L[2*ib+1])
                    row_key(la, lb, <u64>gi, key)
                    klo = load64(key)
                    khi = load64(key+8)
                    i_ext = <int>(L[2*ia] & 1)
                    j_ext = <int>(L[2*ib] & 1)
                    if i_ext or j_ext:
                        row = 2*i_ext + j_ext - 1
                        klo ^= load64(&tview[48*gi + 16*row])
                        khi ^= load64(&tview[48*gi + 16*row + 8])
                    L[2*io] = klo
                    L[2*io+1] = khi
                    gi += 1
            for i in range(wire_count):
                store64(&lview[16*i], L[2*i])
                store64(&lview[16*i+8], L[2*i+1])
    finally:
        free(L)
    return bytes(labels)
