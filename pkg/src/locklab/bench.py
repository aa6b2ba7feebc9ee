"""Parse and emit gate-level netlists in the BENCH format.

Grammar accepted (bit-exact):

* ``#`` starts a comment running to end of line
* ``INPUT(<name>)`` / ``OUTPUT(<name>)``
* ``<name> = <KIND>(<name>{,<name>})``
* names match ``[A-Za-z0-9_.\\[\\]]+``; gate kinds are case-insensitive
* LF or CRLF line endings accepted; LF emitted

Only the 8 combinational kinds are supported; sequential constructs such as
DFF are rejected with a clear error.
"""

from __future__ import annotations

import re

from .circuit import GATE_KINDS, Circuit, CircuitError, Gate, make_circuit

_NAME = r"[A-Za-z0-9_.\[\]]+"
_INPUT_RE = re.compile(rf"^INPUT\s*\(\s*({_NAME})\s*\)$", re.IGNORECASE)
_OUTPUT_RE = re.compile(rf"^OUTPUT\s*\(\s*({_NAME})\s*\)$", re.IGNORECASE)
_GATE_RE = re.compile(
    rf"^({_NAME})\s*=\s*([A-Za-z]+)\s*\(\s*({_NAME}(?:\s*,\s*{_NAME})*)\s*\)$"
)


class BenchParseError(CircuitError):
    """Malformed BENCH text; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_bench(text: str, name: str = "bench") -> Circuit:
    """Parse a BENCH document into a :class:`Circuit`.

    Declaration order of inputs, outputs and gates is preserved.  Gates may
    reference wires defined later in the document as long as the netlist is
    acyclic.
    """
    inputs: list[str] = []
    outputs: list[str] = []
    gates: list[Gate] = []
    seen_inputs: set[str] = set()
    seen_outputs: set[str] = set()

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if line.endswith("\r"):
            line = line[:-1].strip()
        if not line:
            continue
        m = _INPUT_RE.match(line)
        if m:
            w = m.group(1)
            if w in seen_inputs:
                raise BenchParseError(f"duplicate INPUT({w})", lineno)
            seen_inputs.add(w)
            inputs.append(w)
            continue
        m = _OUTPUT_RE.match(line)
        if m:
            w = m.group(1)
            if w in seen_outputs:
                raise BenchParseError(f"duplicate OUTPUT({w})", lineno)
            seen_outputs.add(w)
            outputs.append(w)
            continue
        m = _GATE_RE.match(line)
        if m:
            out, kind, argstr = m.group(1), m.group(2).upper(), m.group(3)
            if kind not in GATE_KINDS:
                if kind in ("DFF", "LATCH"):
                    raise BenchParseError(
                        f"sequential element {kind} is not supported (combinational only)",
                        lineno,
                    )
                raise BenchParseError(f"unknown gate kind {kind!r}", lineno)
            args = tuple(a.strip() for a in argstr.split(","))
            try:
                gates.append(Gate(out, kind, args))
            except CircuitError as exc:
                raise BenchParseError(str(exc), lineno) from None
            continue
        raise BenchParseError(f"cannot parse {line!r}", lineno)

    try:
        return make_circuit(name, inputs, outputs, gates)
    except CircuitError as exc:
        raise CircuitError(f"{name}: {exc}") from None


def emit_bench(circuit: Circuit) -> str:
    """Emit a :class:`Circuit` as canonical BENCH text (LF line endings)."""
    lines = [f"# {circuit.name}"]
    lines.extend(f"INPUT({w})" for w in circuit.inputs)
    lines.extend(f"OUTPUT({w})" for w in circuit.outputs)
    lines.extend(
        f"{g.output} = {g.kind}({', '.join(g.inputs)})" for g in circuit.gates
    )
    return "\n".join(lines) + "\n"


def load_bench(path: str) -> Circuit:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    name = re.sub(r"\.bench$", "", path.rsplit("/", 1)[-1])
    return parse_bench(text, name=name or "bench")


def save_bench(circuit: Circuit, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_bench(circuit))
