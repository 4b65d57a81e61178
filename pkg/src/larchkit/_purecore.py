"""Pure-Python gate kernels.

Same interface as the compiled `_fastcore` module; selected as a fallback
when the extension is unavailable (or forced via LARCHKIT_BACKEND=pure).
Lane buffers hold one little-endian uint64 limb vector per item; bit j of
a lane is instance/repetition j. Wire values, MPC shares and garbled
labels all travel as plain `bytes`.
"""

import hashlib
import struct

from .circuits.bristol import OP_AND, OP_INV, OP_XOR

LABEL_BYTES = 16


def _read_lanes(buf, n_items, lane_bytes):
    return [
        int.from_bytes(buf[i * lane_bytes : (i + 1) * lane_bytes], "little")
        for i in range(n_items)
    ]


def _write_lanes(vals, lane_bytes):
    return b"".join(v.to_bytes(lane_bytes, "little") for v in vals)


def eval_lanes(gates, wire_count, n_in, n_out, n_limbs, in_lanes):
    lane_bytes = 8 * n_limbs
    mask = (1 << (64 * n_limbs)) - 1
    wires = [0] * wire_count
    wires[:n_in] = _read_lanes(in_lanes, n_in, lane_bytes)
    n_gates = len(gates) // 4
    for i in range(n_gates):
        op = gates[4 * i]
        a = wires[gates[4 * i + 1]]
        if op == OP_XOR:
            wires[gates[4 * i + 3]] = a ^ wires[gates[4 * i + 2]]
        elif op == OP_AND:
            wires[gates[4 * i + 3]] = a & wires[gates[4 * i + 2]]
        else:
            wires[gates[4 * i + 3]] = a ^ mask
    return _write_lanes(wires[wire_count - n_out :], lane_bytes)


def mpc_prove(gates, wire_count, n_in, n_and, n_out, n_limbs, in0, in1, in2, tape0, tape1, tape2):
    lane_bytes = 8 * n_limbs
    mask = (1 << (64 * n_limbs)) - 1
    w = [[0] * wire_count for _ in range(3)]
    for p, buf in enumerate((in0, in1, in2)):
        w[p][:n_in] = _read_lanes(buf, n_in, lane_bytes)
    tapes = [_read_lanes(t, n_and, lane_bytes) for t in (tape0, tape1, tape2)]
    streams = [[0] * n_and for _ in range(3)]
    n_gates = len(gates) // 4
    gi = 0
    for i in range(n_gates):
        op = gates[4 * i]
        ia, ib, iout = gates[4 * i + 1], gates[4 * i + 2], gates[4 * i + 3]
        if op == OP_XOR:
            for p in range(3):
                w[p][iout] = w[p][ia] ^ w[p][ib]
        elif op == OP_AND:
            a0, a1, a2 = w[0][ia], w[1][ia], w[2][ia]
            b0, b1, b2 = w[0][ib], w[1][ib], w[2][ib]
            r0, r1, r2 = tapes[0][gi], tapes[1][gi], tapes[2][gi]
            c0 = (a0 & b0) ^ (a0 & b1) ^ (a1 & b0) ^ r0 ^ r1
            c1 = (a1 & b1) ^ (a1 & b2) ^ (a2 & b1) ^ r1 ^ r2
            c2 = (a2 & b2) ^ (a2 & b0) ^ (a0 & b2) ^ r2 ^ r0
            w[0][iout], w[1][iout], w[2][iout] = c0, c1, c2
            streams[0][gi], streams[1][gi], streams[2][gi] = c0, c1, c2
            gi += 1
        else:
            # Only party 0 flips, so the reconstructed value flips.
            w[0][iout] = w[0][ia] ^ mask
            w[1][iout] = w[1][ia]
            w[2][iout] = w[2][ia]
    outs = [w[p][wire_count - n_out :] for p in range(3)]
    return tuple(_write_lanes(s, lane_bytes) for s in streams) + tuple(
        _write_lanes(o, lane_bytes) for o in outs
    )


def mpc_reeval(
    gates, wire_count, n_in, n_and, n_out, n_limbs,
    in_a, in_b, tape_a, tape_b, stream_b, flip_a, flip_b,
):
    """Re-run party a's view given party b's recorded AND outputs.

    (a, b) are adjacent parties (b = a+1 mod 3); flip_* mark which of the
    two, if either, is absolute party 0 for INV handling.
    """
    lane_bytes = 8 * n_limbs
    mask = (1 << (64 * n_limbs)) - 1
    wa = [0] * wire_count
    wb = [0] * wire_count
    wa[:n_in] = _read_lanes(in_a, n_in, lane_bytes)
    wb[:n_in] = _read_lanes(in_b, n_in, lane_bytes)
    ta = _read_lanes(tape_a, n_and, lane_bytes)
    tb = _read_lanes(tape_b, n_and, lane_bytes)
    sb = _read_lanes(stream_b, n_and, lane_bytes)
    sa = [0] * n_and
    n_gates = len(gates) // 4
    gi = 0
    for i in range(n_gates):
        op = gates[4 * i]
        ia, ib, iout = gates[4 * i + 1], gates[4 * i + 2], gates[4 * i + 3]
        if op == OP_XOR:
            wa[iout] = wa[ia] ^ wa[ib]
            wb[iout] = wb[ia] ^ wb[ib]
        elif op == OP_AND:
            ca = (wa[ia] & wa[ib]) ^ (wa[ia] & wb[ib]) ^ (wb[ia] & wa[ib]) ^ ta[gi] ^ tb[gi]
            sa[gi] = ca
            wa[iout] = ca
            wb[iout] = sb[gi]
            gi += 1
        else:
            wa[iout] = wa[ia] ^ mask if flip_a else wa[ia]
            wb[iout] = wb[ia] ^ mask if flip_b else wb[ia]
    return (
        _write_lanes(sa, lane_bytes),
        _write_lanes(wa[wire_count - n_out :], lane_bytes),
        _write_lanes(wb[wire_count - n_out :], lane_bytes),
    )


# ---------------------------------------------------------------------------
# Garbled circuits (free-XOR, point-and-permute, 3-row AND tables)


def _row_key(a_label, b_label, gid):
    material = b"larchkit-gc-row" + a_label + b_label + struct.pack(">Q", gid)
    return hashlib.sha256(material).digest()[:LABEL_BYTES]


def garble(gates, wire_count, n_in, in_labels0, delta):
    """Garble a circuit given false-labels for the inputs and the global offset.

    Returns (labels0 for every wire, concatenated 48-byte AND tables). The
    caller is responsible for delta having its point bit set.
    """
    d = int.from_bytes(delta, "little")
    if not d & 1:
        raise ValueError("free-XOR offset must have its point bit set")
    labels = [0] * wire_count
    for i in range(n_in):
        labels[i] = int.from_bytes(in_labels0[16 * i : 16 * (i + 1)], "little")
    tables = bytearray()
    n_gates = len(gates) // 4
    gid = 0
    for i in range(n_gates):
        op = gates[4 * i]
        ia, ib, iout = gates[4 * i + 1], gates[4 * i + 2], gates[4 * i + 3]
        if op == OP_XOR:
            labels[iout] = labels[ia] ^ labels[ib]
        elif op == OP_INV:
            labels[iout] = labels[ia] ^ d
        else:
            a0, b0 = labels[ia], labels[ib]
            pa, pb = a0 & 1, b0 & 1
            rows = {}
            for i_ext in (0, 1):
                for j_ext in (0, 1):
                    xa = i_ext ^ pa
                    yb = j_ext ^ pb
                    key = _row_key(
                        (a0 ^ (d if xa else 0)).to_bytes(16, "little"),
                        (b0 ^ (d if yb else 0)).to_bytes(16, "little"),
                        gid,
                    )
                    rows[(i_ext, j_ext)] = (int.from_bytes(key, "little"), xa & yb)
            k00, z00 = rows[(0, 0)]
            out0 = k00 ^ (d if z00 else 0)
            labels[iout] = out0
            for i_ext, j_ext in ((0, 1), (1, 0), (1, 1)):
                kij, zij = rows[(i_ext, j_ext)]
                entry = kij ^ out0 ^ (d if zij else 0)
                tables += entry.to_bytes(16, "little")
            gid += 1
    return b"".join(v.to_bytes(16, "little") for v in labels), bytes(tables)


def gc_eval(gates, wire_count, n_in, in_labels, tables):
    labels = [0] * wire_count
    for i in range(n_in):
        labels[i] = int.from_bytes(in_labels[16 * i : 16 * (i + 1)], "little")
    n_gates = len(gates) // 4
    gid = 0
    for i in range(n_gates):
        op = gates[4 * i]
        ia, ib, iout = gates[4 * i + 1], gates[4 * i + 2], gates[4 * i + 3]
        if op == OP_XOR:
            labels[iout] = labels[ia] ^ labels[ib]
        elif op == OP_INV:
            labels[iout] = labels[ia]
        else:
            la, lb = labels[ia], labels[ib]
            key = int.from_bytes(
                _row_key(la.to_bytes(16, "little"), lb.to_bytes(16, "little"), gid), "little"
            )
            i_ext, j_ext = la & 1, lb & 1
            if i_ext or j_ext:
                row = 2 * i_ext + j_ext - 1
                entry = int.from_bytes(tables[48 * gid + 16 * row : 48 * gid + 16 * (row + 1)], "little")
                key ^= entry
            labels[iout] = key
            gid += 1
    return b"".join(v.to_bytes(16, "little") for v in labels)
