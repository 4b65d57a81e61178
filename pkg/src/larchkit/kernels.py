"""Kernel backend selection.

The hot gate-walk loops (plaintext evaluation, MPC-in-the-head simulation
and re-evaluation, garbling and garbled evaluation) exist twice: compiled
Cython in `larchkit._fastcore` and plain Python in `larchkit._purecore`.
The compiled module wins when importable; LARCHKIT_BACKEND=pure|fast
forces a choice. `python -m larchkit.bench` compares the two.
"""

import os

from . import _purecore

try:
    from . import _fastcore
except ImportError:
    _fastcore = None

_FORCED = os.environ.get("LARCHKIT_BACKEND", "")
if _FORCED == "pure":
    active = _purecore
elif _FORCED == "fast":
    if _fastcore is None:
        raise ImportError("LARCHKIT_BACKEND=fast but larchkit._fastcore is not built")
    active = _fastcore
else:
    active = _fastcore if _fastcore is not None else _purecore


def backend_name(module=None):
    mod = module or active
    return "fast" if mod.__name__.endswith("_fastcore") else "pure"


def backends():
    """All importable backends, compiled one first."""
    return [m for m in (_fastcore, _purecore) if m is not None]


def eval_circuit(circ, input_bits, module=None):
    """Single-instance plaintext evaluation; bits in and out as bytes."""
    from .bits import bits_to_bytes, bytes_to_bits, pack_lanes, unpack_lanes

    mod = module or active
    bits = bytes_to_bits(input_bits)[: circ.n_in]
    if len(bits) != circ.n_in:
        raise ValueError("expected %d input bits, got %d" % (circ.n_in, len(bits)))
    lanes = pack_lanes(bits.reshape(-1, 1))
    out = mod.eval_lanes(circ.gates, circ.n_wires, circ.n_in, circ.n_out, 1, lanes)
    outbits = unpack_lanes(out, circ.n_out, 1).reshape(-1)
    return bits_to_bytes(outbits)
