"""Bristol-fashion boolean circuit files.

Format:
    line 1: "<ngates> <nwires>"
    line 2: "<k> <size_1> ... <size_k>"   input blocks
    line 3: "<k> <size_1> ... <size_k>"   output blocks
    then one gate per line: "<nin> <nout> <in...> <out> OP" with OP one of
    XOR, AND, INV.

Wires 0..n_in-1 are the inputs; every other wire must be written exactly
once before it is read, and the output blocks occupy the last wires of the
file. Parse errors name the offending line.
"""

from array import array

OP_XOR = 0
OP_AND = 1
OP_INV = 2

_OP_NAMES = {"XOR": OP_XOR, "AND": OP_AND, "INV": OP_INV}
_OP_TEXT = {OP_XOR: "XOR", OP_AND: "AND", OP_INV: "INV"}


class CircuitError(ValueError):
    pass


class Circuit:
    """A parsed circuit: flat gate array plus block structure.

    `gates` is an array('i') of (op, in0, in1, out) quads in file order;
    INV gates carry in1 == in0. `n_and` counts AND gates, which is what
    proof sizes and garbled-table sizes scale with.
    """

    def __init__(self, gates, n_wires, input_blocks, output_blocks):
        self.gates = gates
        self.n_gates = len(gates) // 4
        self.n_wires = n_wires
        self.input_blocks = list(input_blocks)
        self.output_blocks = list(output_blocks)
        self.n_in = sum(input_blocks)
        self.n_out = sum(output_blocks)
        self.n_and = sum(1 for i in range(self.n_gates) if gates[4 * i] == OP_AND)
        self._digest = None

    def output_wires(self):
        return range(self.n_wires - self.n_out, self.n_wires)

    def digest(self):
        import hashlib

        if self._digest is None:
            self._digest = hashlib.sha256(serialize(self).encode()).digest()
        return self._digest

    def validate(self):
        written = bytearray(self.n_wires)
        for w in range(self.n_in):
            written[w] = 1
        g = self.gates
        for i in range(self.n_gates):
            op, a, b, out = g[4 * i], g[4 * i + 1], g[4 * i + 2], g[4 * i + 3]
            for w in (a, b) if op != OP_INV else (a,):
                if not 0 <= w < self.n_wires or not written[w]:
                    raise CircuitError("gate %d reads unwritten wire %d" % (i, w))
            if not 0 <= out < self.n_wires:
                raise CircuitError("gate %d writes out-of-range wire %d" % (i, out))
            if written[out]:
                raise CircuitError("gate %d double-writes wire %d" % (i, out))
            written[out] = 1
        if not all(written):
            raise CircuitError("circuit leaves %d wires unwritten" % (self.n_wires - sum(written)))
        return self


def parse(text):
    lines = text.splitlines()
    stripped = [(idx + 1, ln.strip()) for idx, ln in enumerate(lines) if ln.strip()]
    if len(stripped) < 3:
        raise CircuitError("truncated circuit: fewer than 3 header lines")

    def ints(lineno, line, expect=None):
        parts = line.split()
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise CircuitError("line %d: expected integers, got %r" % (lineno, line))
        if expect is not None and len(vals) != expect:
            raise CircuitError("line %d: expected %d fields" % (lineno, expect))
        return vals

    lineno, line = stripped[0]
    n_gates, n_wires = ints(lineno, line, 2)

    def blocks(lineno, line):
        vals = ints(lineno, line)
        if not vals or len(vals) != vals[0] + 1:
            raise CircuitError("line %d: block count does not match sizes" % lineno)
        if any(v <= 0 for v in vals[1:]):
            raise CircuitError("line %d: block sizes must be positive" % lineno)
        return vals[1:]

    input_blocks = blocks(*stripped[1])
    output_blocks = blocks(*stripped[2])

    gate_lines = stripped[3:]
    if len(gate_lines) != n_gates:
        raise CircuitError(
            "header declares %d gates but file has %d gate lines" % (n_gates, len(gate_lines))
        )
    gates = array("i", bytes(16 * n_gates))
    for idx, (lineno, line) in enumerate(gate_lines):
        parts = line.split()
        opname = parts[-1]
        if opname not in _OP_NAMES:
            raise CircuitError("line %d: unknown gate op %r" % (lineno, opname))
        op = _OP_NAMES[opname]
        vals = ints(lineno, " ".join(parts[:-1]))
        if op == OP_INV:
            if vals[:2] != [1, 1] or len(vals) != 4:
                raise CircuitError("line %d: INV wants '1 1 in out'" % lineno)
            a, out = vals[2], vals[3]
            b = a
        else:
            if vals[:2] != [2, 1] or len(vals) != 5:
                raise CircuitError("line %d: %s wants '2 1 in in out'" % (lineno, opname))
            a, b, out = vals[2], vals[3], vals[4]
        gates[4 * idx] = op
        gates[4 * idx + 1] = a
        gates[4 * idx + 2] = b
        gates[4 * idx + 3] = out

    circ = Circuit(gates, n_wires, input_blocks, output_blocks)
    if circ.n_in + circ.n_gates != n_wires:
        raise CircuitError(
            "wire count %d does not equal inputs %d + gates %d" % (n_wires, circ.n_in, n_gates)
        )
    return circ.validate()


def serialize(circ):
    out = ["%d %d" % (circ.n_gates, circ.n_wires)]
    out.append(" ".join(str(v) for v in [len(circ.input_blocks)] + circ.input_blocks))
    out.append(" ".join(str(v) for v in [len(circ.output_blocks)] + circ.output_blocks))
    g = circ.gates
    for i in range(circ.n_gates):
        op, a, b, w = g[4 * i], g[4 * i + 1], g[4 * i + 2], g[4 * i + 3]
        if op == OP_INV:
            out.append("1 1 %d %d INV" % (a, w))
        else:
            out.append("2 1 %d %d %d %s" % (a, b, w, _OP_TEXT[op]))
    return "\n".join(out) + "\n"


def load(path):
    with open(path) as fh:
        return parse(fh.read())
