"""Garbled-circuit sessions: wire labels, garbling, evaluation, decoding.

Semi-honest Yao with free XOR and point-and-permute. Labels are 16 bytes;
the global offset `delta` has its low bit forced to 1 so a label's low bit
doubles as the permute bit. AND gates are reduced to three ciphertext rows
(the all-zero-permute row is derivable), so a garbled circuit costs
48 bytes per AND gate on the wire and XOR gates cost nothing.

The garbler keeps `Garbling` (all zero-labels plus delta); the evaluator
works from the table blob and one active label per input wire. Outputs are
decoded either by the garbler directly (it knows the labels) or by the
evaluator through a decode map of per-wire truncated label hashes, which
reveals designated output bits and nothing else.
"""

import hashlib
import secrets
import struct

from .sym import prg_bytes

LABEL_BYTES = 16
ROW_BYTES = 3 * LABEL_BYTES

_OUT_TAG = b"larchkit-gc-out"
_BLOB_MAGIC = b"GC1\x00"


class GarbleError(ValueError):
    pass


class IntegrityError(GarbleError):
    """An active label matched neither entry of a decode map."""


def _out_tag(wire, label):
    return hashlib.sha256(_OUT_TAG + struct.pack("<L", wire) + label).digest()[:8]


class Garbling:
    """Garbler-side state for one circuit instance."""

    __slots__ = ("circ", "delta", "labels0", "tables")

    def __init__(self, circ, delta, labels0, tables):
        self.circ = circ
        self.delta = delta
        self.labels0 = labels0
        self.tables = tables

    @classmethod
    def generate(cls, circ, seed=None):
        from . import kernels

        if seed is None:
            seed = secrets.token_bytes(32)
        delta = bytearray(prg_bytes(seed, b"gc-delta", LABEL_BYTES))
        delta[0] |= 1
        delta = bytes(delta)
        in_labels = prg_bytes(seed, b"gc-in", circ.n_in * LABEL_BYTES)
        labels0, tables = kernels.active.garble(
            circ.gates, circ.n_wires, circ.n_in, in_labels, delta
        )
        return cls(circ, delta, labels0, tables)

    def label0(self, wire):
        return bytes(self.labels0[wire * LABEL_BYTES : (wire + 1) * LABEL_BYTES])

    def label(self, wire, bit):
        l0 = self.label0(wire)
        if not bit:
            return l0
        return bytes(a ^ b for a, b in zip(l0, self.delta))

    def input_labels(self, wires, bits):
        """Active labels for the garbler's own input bits, concatenated."""
        if len(wires) != len(bits):
            raise GarbleError("wire/bit count mismatch")
        return b"".join(self.label(w, b) for w, b in zip(wires, bits))

    def label_pairs(self, wires):
        """(label0, label1) per wire; feeds the OT sender for peer inputs."""
        return [(self.label(w, 0), self.label(w, 1)) for w in wires]

    def blob(self):
        return _BLOB_MAGIC + self.circ.digest() + struct.pack("<L", self.circ.n_and) + self.tables

    def decode_map(self, wires):
        out = bytearray()
        for w in wires:
            out += _out_tag(w, self.label(w, 0))
            out += _out_tag(w, self.label(w, 1))
        return bytes(out)

    def decode_bits(self, wires, active_labels):
        """Decode active labels the evaluator sent back for our output wires."""
        if len(active_labels) != len(wires) * LABEL_BYTES:
            raise GarbleError("bad label payload length")
        bits = []
        for i, w in enumerate(wires):
            lab = bytes(active_labels[i * LABEL_BYTES : (i + 1) * LABEL_BYTES])
            if lab == self.label(w, 0):
                bits.append(0)
            elif lab == self.label(w, 1):
                bits.append(1)
            else:
                raise IntegrityError("label on wire %d is not one we issued" % w)
        return bits


def parse_blob(circ, blob):
    """Validate a garbled-table blob against the circuit we expect to run."""
    if len(blob) < len(_BLOB_MAGIC) + 36 or blob[:4] != _BLOB_MAGIC:
        raise GarbleError("bad garbled blob header")
    digest = blob[4:36]
    if digest != circ.digest():
        raise GarbleError("garbled blob is for a different circuit")
    (n_and,) = struct.unpack_from("<L", blob, 36)
    tables = blob[40:]
    if n_and != circ.n_and or len(tables) != n_and * ROW_BYTES:
        raise GarbleError("garbled blob table section has wrong size")
    return tables


def evaluate(circ, tables, active_inputs):
    """Run the evaluator; returns the active label of every wire."""
    from . import kernels

    if len(active_inputs) != circ.n_in * LABEL_BYTES:
        raise GarbleError("need one active label per input wire")
    if len(tables) != circ.n_and * ROW_BYTES:
        raise GarbleError("garbled table section has wrong size")
    return kernels.active.gc_eval(
        circ.gates, circ.n_wires, circ.n_in, active_inputs, tables
    )


def wire_labels(all_labels, wires):
    return b"".join(
        bytes(all_labels[w * LABEL_BYTES : (w + 1) * LABEL_BYTES]) for w in wires
    )


def decode_with_map(wires, active_labels, decode_map):
    """Evaluator-side decode: match each active label against its tag pair."""
    if len(decode_map) != len(wires) * 16:
        raise GarbleError("decode map length mismatch")
    if len(active_labels) != len(wires) * LABEL_BYTES:
        raise GarbleError("bad label payload length")
    bits = []
    for i, w in enumerate(wires):
        lab = bytes(active_labels[i * LABEL_BYTES : (i + 1) * LABEL_BYTES])
        tag = _out_tag(w, lab)
        t0 = decode_map[i * 16 : i * 16 + 8]
        t1 = decode_map[i * 16 + 8 : i * 16 + 16]
        if tag == t0:
            bits.append(0)
        elif tag == t1:
            bits.append(1)
        else:
            raise IntegrityError("wire %d label matches neither decode tag" % w)
    return bits
