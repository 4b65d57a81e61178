"""Joint TOTP code computation over a garbled circuit.

The site's HMAC key is XOR-split at registration: the client keeps one
half, the log keeps the other beside a 16-byte site identifier. To get a
code the two parties evaluate one circuit: the log garbles it and feeds
its own block (archive commitment, time counter, and the whole padded
registration table) directly; the client obtains labels for its block
(archive key material, site id, key half, record nonce) by oblivious
transfer and evaluates. Inside the circuit the site id selects the
matching log key half, the recombined key runs HMAC-SHA256 with dynamic
truncation, and the record ciphertext is produced under the archive key.

The split of outputs enforces the exchange: the client learns the 31-bit
code only after returning the log's output labels (nonce, ciphertext,
valid flag). The log checks valid = "commitment opens and the id is
registered", stores the record, and only then releases the code decode
map. Neither side learns which table row matched.
"""

import hmac as _hmac
import hashlib
import secrets
import struct

import numpy as np

from . import garble, ot
from .bits import bits_to_bytes, bytes_to_bits
from .circuits import build
from .sym import rand_bytes, stream_xor

ID_BYTES = 16
KEY_BYTES = 32
NONCE_BYTES = 12
CT_BYTES = NONCE_BYTES + ID_BYTES  # 28
STEP_SECS = 30
DIGITS = 6

CLIENT_BITS = 992
CODE_BITS = 31
LOG_OUT_BITS = 96 + 128 + 1


class TotpError(ValueError):
    pass


def totp_code(key, t):
    """Reference HMAC-SHA256 TOTP computation for counter value t."""
    mac = _hmac.new(key, struct.pack(">Q", t), hashlib.sha256).digest()
    off = mac[-1] & 0x0F
    word = int.from_bytes(mac[off : off + 4], "big") & 0x7FFFFFFF
    return word % (10 ** DIGITS)


def time_step(unix_seconds):
    return int(unix_seconds) // STEP_SECS


def split_key(key):
    """-> (client half, log half) with half XOR half = key."""
    if len(key) != KEY_BYTES:
        raise TotpError("TOTP keys are %d bytes" % KEY_BYTES)
    half = rand_bytes(KEY_BYTES)
    return half, bytes(a ^ b for a, b in zip(key, half))


def site_identifier(site_name):
    if isinstance(site_name, str):
        site_name = site_name.encode()
    return hashlib.sha256(b"larchkit-totp-id" + site_name).digest()[:ID_BYTES]


def encrypt_site(k_archive, site_id, nonce):
    return stream_xor(k_archive, nonce, site_id)


def decrypt_record(k_archive, ct):
    if len(ct) != CT_BYTES:
        raise TotpError("record ciphertext must be %d bytes" % CT_BYTES)
    return stream_xor(k_archive, ct[:NONCE_BYTES], ct[NONCE_BYTES:])


def pad_length_for(count):
    """Table size used for a given number of real registrations."""
    n = 1
    while n < count:
        n *= 2
    return n


def pad_slots(slots):
    """Round the registration table up to a power of two with dummy rows."""
    n = pad_length_for(len(slots))
    out = list(slots)
    while len(out) < n:
        out.append((secrets.token_bytes(ID_BYTES), secrets.token_bytes(KEY_BYTES)))
    return out


def _bits(data):
    return bytes_to_bits(data)


def client_input_bits(k, r, site_id, kclient, nonce):
    if len(k) != 32 or len(r) != 32 or len(site_id) != ID_BYTES:
        raise TotpError("bad client block")
    if len(kclient) != KEY_BYTES or len(nonce) != NONCE_BYTES:
        raise TotpError("bad client block")
    return np.concatenate([_bits(k), _bits(r), _bits(site_id), _bits(kclient), _bits(nonce)])


def log_input_bits(cm, t, slots):
    if len(cm) != 32:
        raise TotpError("bad commitment")
    parts = [_bits(cm), _bits(struct.pack(">Q", t))]
    parts += [_bits(sid) for sid, _ in slots]
    parts += [_bits(kl) for _, kl in slots]
    return np.concatenate(parts)


class LogSession:
    """Log side of one code computation: garbler and OT sender."""

    def __init__(self, slots, cm, t, seed=None):
        n = len(slots)
        if n < 1 or n & (n - 1):
            raise TotpError("slot table must be a power of two; pad first")
        for sid, kl in slots:
            if len(sid) != ID_BYTES or len(kl) != KEY_BYTES:
                raise TotpError("bad slot entry")
        self.n = n
        self.circ = build.build_totp(n)
        self.gb = garble.Garbling.generate(self.circ, seed)
        log_wires = list(range(CLIENT_BITS, self.circ.n_in))
        bits = log_input_bits(cm, t, slots)
        self.log_labels = self.gb.input_labels(log_wires, list(bits))
        self._ot = ot.Sender(self.gb.label_pairs(list(range(CLIENT_BITS))))
        out = list(self.circ.output_wires())
        self._code_wires = out[:CODE_BITS]
        self._log_wires = out[CODE_BITS:]

    def open_payload(self):
        return self.n, self.gb.blob(), self.log_labels, self._ot.round1()

    def ot_round3(self, round2_msg):
        return self._ot.round3(round2_msg)

    def decode_back(self, labels_back):
        """-> (record ct 28 bytes, valid flag) from the evaluator's labels."""
        bits = self.gb.decode_bits(self._log_wires, labels_back)
        arr = np.array(bits, dtype=np.uint8)
        nonce = bits_to_bytes(arr[:96])
        body = bits_to_bytes(arr[96:224])
        return nonce + body, bool(bits[224])

    def code_decode_map(self):
        return self.gb.decode_map(self._code_wires)


class ClientSession:
    """Client side: OT receiver and circuit evaluator."""

    def __init__(self, k, r, site_id, kclient, nonce=None):
        if nonce is None:
            nonce = rand_bytes(NONCE_BYTES)
        self.nonce = nonce
        self.k = k
        self.site_id = site_id
        bits = client_input_bits(k, r, site_id, kclient, nonce)
        self._ot = ot.Receiver(list(bits))
        self._code_labels = None

    def ot_round2(self, round1_msg):
        return self._ot.round2(round1_msg)

    def record_ct(self):
        """The ciphertext this session will leave at the log."""
        return self.nonce + encrypt_site(self.k, self.site_id, self.nonce)

    def evaluate(self, n, blob, log_labels, ot_round3_msg):
        """Run the circuit; returns the log's output labels to send back."""
        circ = build.build_totp(n)
        tables = garble.parse_blob(circ, blob)
        if len(log_labels) != (circ.n_in - CLIENT_BITS) * garble.LABEL_BYTES:
            raise TotpError("bad log input label payload")
        own = b"".join(self._ot.finish(ot_round3_msg))
        active = garble.evaluate(circ, tables, own + log_labels)
        out = list(circ.output_wires())
        self._code_wires = out[:CODE_BITS]
        self._code_labels = garble.wire_labels(active, self._code_wires)
        return garble.wire_labels(active, out[CODE_BITS:])

    def decode_code(self, decode_map):
        if self._code_labels is None:
            raise TotpError("evaluate first")
        bits = garble.decode_with_map(self._code_wires, self._code_labels, decode_map)
        word = 0
        for i, b in enumerate(bits):
            word |= b << i
        return word % (10 ** DIGITS)
