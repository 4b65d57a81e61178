"""Binary frame codec for streaming sessions (the TOTP exchange).

Frame layout, little-endian:
    u32 length of everything after this field
    u8  type
    16B session id (client-chosen, random)
    u32 sequence number
    body

Types and bodies:
    SESSION_OPEN      u8 mechanism || u64 time counter || u32 table size
    GARBLE_BLOB       u32 table size || u32 blob length || blob || input labels
    OT_ROUND_1        sender point (33)
    OT_ROUND_2        receiver points (33 each)
    OT_ROUND_3        masked label pairs (32 per transfer)
    EVAL_LABELS_BACK  u32 label bytes || labels || u32 ct bytes || ct || sig (64)
    LOG_OUTPUT_BITS   u8 status || code decode map

A response message may carry several frames back to back (opening a
session returns GARBLE_BLOB then OT_ROUND_1).
"""

import struct

SESSION_OPEN = 1
GARBLE_BLOB = 2
OT_ROUND_1 = 3
OT_ROUND_2 = 4
OT_ROUND_3 = 5
EVAL_LABELS_BACK = 6
LOG_OUTPUT_BITS = 7

MECH_TOTP = 2
SESSION_ID_BYTES = 16

_HDR = struct.Struct("<LB16sL")


class WireError(ValueError):
    pass


def pack_frame(ftype, sid, seq, body):
    if len(sid) != SESSION_ID_BYTES:
        raise WireError("session id must be %d bytes" % SESSION_ID_BYTES)
    return _HDR.pack(1 + SESSION_ID_BYTES + 4 + len(body), ftype, sid, seq) + body


def unpack_frames(data):
    """Parse a byte string into [(type, sid, seq, body)]; rejects torn frames."""
    out = []
    pos = 0
    while pos < len(data):
        if pos + _HDR.size > len(data):
            raise WireError("truncated frame header")
        length, ftype, sid, seq = _HDR.unpack_from(data, pos)
        body_len = length - (1 + SESSION_ID_BYTES + 4)
        if body_len < 0 or pos + 4 + length > len(data):
            raise WireError("truncated frame body")
        body = data[pos + _HDR.size : pos + _HDR.size + body_len]
        out.append((ftype, sid, seq, bytes(body)))
        pos += 4 + length
    return out


def open_body(mech, t, n):
    return struct.pack("<BQL", mech, t, n)


def parse_open(body):
    if len(body) != 13:
        raise WireError("bad SESSION_OPEN body")
    return struct.unpack("<BQL", body)


def garble_body(n, blob, labels):
    return struct.pack("<LL", n, len(blob)) + blob + labels


def parse_garble(body):
    if len(body) < 8:
        raise WireError("bad GARBLE_BLOB body")
    n, blob_len = struct.unpack_from("<LL", body)
    if 8 + blob_len > len(body):
        raise WireError("bad GARBLE_BLOB body")
    return n, body[8 : 8 + blob_len], body[8 + blob_len :]


def labels_back_body(labels, ct, sig):
    return (
        struct.pack("<L", len(labels)) + labels
        + struct.pack("<L", len(ct)) + ct + sig
    )


def parse_labels_back(body):
    if len(body) < 4:
        raise WireError("bad EVAL_LABELS_BACK body")
    (nlab,) = struct.unpack_from("<L", body)
    pos = 4 + nlab
    if pos + 4 > len(body):
        raise WireError("bad EVAL_LABELS_BACK body")
    (nct,) = struct.unpack_from("<L", body, pos)
    ct = body[pos + 4 : pos + 4 + nct]
    sig = body[pos + 4 + nct :]
    if len(ct) != nct or len(sig) != 64:
        raise WireError("bad EVAL_LABELS_BACK body")
    return body[4 : 4 + nlab], ct, sig


def output_body(status, decode_map=b""):
    return bytes([status]) + decode_map


def parse_output(body):
    if len(body) < 1:
        raise WireError("bad LOG_OUTPUT_BITS body")
    return body[0], body[1:]
