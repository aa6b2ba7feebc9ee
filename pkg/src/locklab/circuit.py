"""Combinational gate-level netlists: representation, simulation, transforms.

A :class:`Circuit` is an immutable DAG of named wires. Gate lists are kept in
topological order, so a single forward pass evaluates the whole netlist.
Batch simulation packs one evaluation per bit of an arbitrary-width Python
integer, which is what makes exhaustive sweeps over key/input spaces cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce
from heapq import heapify, heappop, heappush
from typing import Callable, Iterable, Mapping, Sequence

GATE_KINDS = ("AND", "OR", "NAND", "NOR", "XOR", "XNOR", "NOT", "BUF")
UNARY_KINDS = ("NOT", "BUF")

#: Reserved pseudo-input treated as constant 0 by simulation, CNF encoding,
#: probability propagation and equivalence checking.  BENCH has no constant
#: literal, so constants are modelled as BUF/NOT of this wire.
ZERO_WIRE = "__zero"


class CircuitError(Exception):
    """Structural problem with a netlist or an operation on one."""


@dataclass(frozen=True)
class Gate:
    output: str
    kind: str
    inputs: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r} for wire {self.output!r}")
        arity = len(self.inputs)
        if self.kind in UNARY_KINDS and arity != 1:
            raise CircuitError(f"{self.kind} gate {self.output!r} needs exactly 1 input, got {arity}")
        if self.kind not in UNARY_KINDS and arity < 2:
            raise CircuitError(f"{self.kind} gate {self.output!r} needs >= 2 inputs, got {arity}")


@dataclass(frozen=True)
class Circuit:
    """A named combinational netlist.

    Invariants (checked at construction): wire names are unique, every gate
    input refers to a primary input or an earlier gate output, and every
    circuit output names an existing wire.
    """

    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    gates: tuple[Gate, ...]

    def __post_init__(self) -> None:
        defined: set[str] = set()
        for w in self.inputs:
            if w in defined:
                raise CircuitError(f"duplicate input {w!r}")
            defined.add(w)
        for g in self.gates:
            for src in g.inputs:
                if src not in defined:
                    raise CircuitError(
                        f"gate {g.output!r} reads {src!r} which is not defined yet"
                    )
            if g.output in defined:
                raise CircuitError(f"duplicate definition of wire {g.output!r}")
            defined.add(g.output)
        for w in self.outputs:
            if w not in defined:
                raise CircuitError(f"output {w!r} does not name an existing wire")

    @cached_property
    def wires(self) -> tuple[str, ...]:
        return self.inputs + tuple(g.output for g in self.gates)

    @cached_property
    def free_inputs(self) -> tuple[str, ...]:
        """Primary inputs excluding the reserved constant-zero wire."""
        return tuple(w for w in self.inputs if w != ZERO_WIRE)

    @cached_property
    def gate_map(self) -> dict[str, Gate]:
        return {g.output: g for g in self.gates}

    def is_input(self, wire: str) -> bool:
        return wire in set(self.inputs)

    @cached_property
    def consumers(self) -> dict[str, tuple[str, ...]]:
        """Map wire -> gate-output wires that read it."""
        cons: dict[str, list[str]] = {w: [] for w in self.wires}
        for g in self.gates:
            for src in g.inputs:
                cons[src].append(g.output)
        return {w: tuple(v) for w, v in cons.items()}

    def transitive_fanin(self, wires: Iterable[str]) -> set[str]:
        gm = self.gate_map
        seen: set[str] = set()
        stack = list(wires)
        while stack:
            w = stack.pop()
            g = gm.get(w)
            if g is None:
                continue
            for src in g.inputs:
                if src not in seen:
                    seen.add(src)
                    stack.append(src)
        return seen

    def rename(self, fn: Callable[[str], str], name: str | None = None) -> "Circuit":
        return Circuit(
            name=name or self.name,
            inputs=tuple(fn(w) for w in self.inputs),
            outputs=tuple(fn(w) for w in self.outputs),
            gates=tuple(Gate(fn(g.output), g.kind, tuple(fn(s) for s in g.inputs)) for g in self.gates),
        )


def toposort_gates(inputs: Sequence[str], gates: Sequence[Gate], name: str = "?") -> tuple[Gate, ...]:
    """Stable topological sort of a gate list; raises on cycles/undefined wires.

    Declaration order is preserved whenever it is already topological.
    """
    defined = set(inputs)
    by_output = {}
    for g in gates:
        if g.output in by_output or g.output in defined:
            raise CircuitError(f"duplicate definition of wire {g.output!r}")
        by_output[g.output] = g
    order_of = {g.output: i for i, g in enumerate(gates)}
    pending: dict[str, int] = {}
    waiting: dict[str, list[str]] = {}
    ready: list[tuple[int, str]] = []
    for g in gates:
        missing = 0
        for src in g.inputs:
            if src in defined:
                continue
            if src not in by_output:
                raise CircuitError(f"gate {g.output!r} reads undefined wire {src!r}")
            missing += 1
            waiting.setdefault(src, []).append(g.output)
        if missing:
            pending[g.output] = missing
        else:
            ready.append((order_of[g.output], g.output))
    heapify(ready)
    out: list[Gate] = []
    while ready:
        _, w = heappop(ready)
        out.append(by_output[w])
        for dep in waiting.get(w, ()):  # wires waiting on w
            pending[dep] -= 1
            if pending[dep] == 0:
                del pending[dep]
                heappush(ready, (order_of[dep], dep))
    if pending:
        cyclic = sorted(pending)[0]
        raise CircuitError(f"cyclic dependency involving wire {cyclic!r} in {name!r}")
    return tuple(out)


def make_circuit(name: str, inputs: Sequence[str], outputs: Sequence[str],
                 gates: Sequence[Gate]) -> Circuit:
    """Build a Circuit from possibly-unordered gates (stable toposort)."""
    return Circuit(name, tuple(inputs), tuple(outputs), toposort_gates(inputs, gates, name))


# ---------------------------------------------------------------------------
# simulation

_MASK_OPS = {
    "AND": lambda vals, mask: reduce(lambda a, b: a & b, vals),
    "OR": lambda vals, mask: reduce(lambda a, b: a | b, vals),
    "XOR": lambda vals, mask: reduce(lambda a, b: a ^ b, vals),
    "NAND": lambda vals, mask: mask ^ reduce(lambda a, b: a & b, vals),
    "NOR": lambda vals, mask: mask ^ reduce(lambda a, b: a | b, vals),
    "XNOR": lambda vals, mask: mask ^ reduce(lambda a, b: a ^ b, vals),
    "NOT": lambda vals, mask: mask ^ vals[0],
    "BUF": lambda vals, mask: vals[0],
}


def simulate_columns(circuit: Circuit, columns: Mapping[str, int], width: int) -> dict[str, int]:
    """Evaluate all wires with one evaluation per bit position.

    ``columns`` maps every free input to an integer whose bit i is that
    input's value in evaluation i.  Returns the same packing for every wire.
    """
    mask = (1 << width) - 1
    vals: dict[str, int] = {}
    for w in circuit.inputs:
        if w == ZERO_WIRE:
            vals[w] = 0
            continue
        try:
            vals[w] = columns[w] & mask
        except KeyError:
            raise CircuitError(f"missing input bit for wire {w!r}") from None
    ops = _MASK_OPS
    for g in circuit.gates:
        vals[g.output] = ops[g.kind]([vals[s] for s in g.inputs], mask)
    return vals


def simulate(circuit: Circuit, assignment: Mapping[str, int]) -> dict[str, int]:
    """Evaluate the circuit on one primary-input assignment.

    Returns a map of every *output* wire to its bit.  Raises
    :class:`CircuitError` when an input bit is missing.
    """
    vals = simulate_columns(circuit, assignment, 1)
    return {w: vals[w] for w in circuit.outputs}


def simulate_batch(circuit: Circuit, inputs: Sequence[Mapping[str, int]]) -> list[dict[str, int]]:
    """Elementwise equivalent of :func:`simulate` over a list of assignments."""
    n = len(inputs)
    if n == 0:
        return []
    cols: dict[str, int] = {}
    for w in circuit.free_inputs:
        acc = 0
        for i, a in enumerate(inputs):
            try:
                bit = a[w]
            except KeyError:
                raise CircuitError(f"missing input bit for wire {w!r}") from None
            acc |= (bit & 1) << i
        cols[w] = acc
    vals = simulate_columns(circuit, cols, n)
    return [{w: (vals[w] >> i) & 1 for w in circuit.outputs} for i in range(n)]


def minterm_columns(wires: Sequence[str], width: int | None = None,
                    stride: int = 1) -> dict[str, int]:
    """Column integers enumerating minterms over ``wires``.

    Bit c of the pattern for ``wires[i]`` equals bit ``len(wires)-1-i`` of
    ``c // stride`` — i.e. column c carries minterm ``(c // stride) % 2**n``
    with ``wires[0]`` as its most significant bit.  ``stride`` must be a
    power of two; widths beyond one enumeration period repeat it (used for
    key x input grids).  Default width is one full period.
    """
    n = len(wires)
    if stride & (stride - 1):
        raise ValueError("stride must be a power of two")
    if width is None:
        width = (1 << n) * stride
    mask = (1 << width) - 1
    cols = {}
    for i, w in enumerate(wires):
        block = stride << (n - 1 - i)  # run length of equal bits
        pat = ((1 << block) - 1) << block  # one period: zeros then ones
        span = 2 * block
        while span < width:
            pat |= pat << span
            span *= 2
        cols[w] = pat & mask
    return cols


def constant_columns(bits: Mapping[str, int], width: int) -> dict[str, int]:
    mask = (1 << width) - 1
    return {w: (mask if b else 0) for w, b in bits.items()}


# ---------------------------------------------------------------------------
# transforms

def _fresh_name(base: str, taken: set[str]) -> str:
    cand = base
    i = 0
    while cand in taken:
        i += 1
        cand = f"{base}{i}"
    return cand


def insert_xor_at_wire(circuit: Circuit, wire: str, signal: str) -> Circuit:
    """XOR ``signal`` into ``wire`` so every consumer sees the XORed value.

    ``signal`` must name an existing wire or is declared as a new primary
    input.  When ``wire`` is a gate output the gate is renamed and the XOR
    takes over the original name, keeping the interface stable; when it is a
    primary input, consumers and output lists are rewired to the XOR.
    """
    taken = set(circuit.wires)
    if wire not in taken:
        raise CircuitError(f"unknown wire {wire!r}")
    inputs = list(circuit.inputs)
    if signal not in taken:
        inputs.append(signal)
        taken.add(signal)
    if signal == wire:
        raise CircuitError(f"cannot XOR wire {wire!r} with itself")

    gates = list(circuit.gates)
    outputs = list(circuit.outputs)
    if wire in circuit.gate_map:
        pre = _fresh_name(f"{wire}__pre", taken)
        taken.add(pre)
        g = circuit.gate_map[wire]
        gates[gates.index(g)] = Gate(pre, g.kind, g.inputs)
        gates.append(Gate(wire, "XOR", (pre, signal)))
    else:
        post = _fresh_name(f"{wire}__xin", taken)
        taken.add(post)
        gates = [Gate(g.output, g.kind, tuple(post if s == wire else s for s in g.inputs))
                 for g in gates]
        gates.append(Gate(post, "XOR", (wire, signal)))
        outputs = [post if w == wire else w for w in outputs]
    return make_circuit(circuit.name, inputs, outputs, gates)


def tie_wires_to_zero(circuit: Circuit, wires: Iterable[str]) -> Circuit:
    """Replace the drivers of ``wires`` with constant 0 (a BUF of __zero)."""
    targets = set(wires)
    unknown = targets - set(circuit.wires)
    if unknown:
        raise CircuitError(f"unknown wire {sorted(unknown)[0]!r}")
    bad = targets & set(circuit.inputs)
    if bad:
        raise CircuitError(f"cannot tie primary input {sorted(bad)[0]!r} to a constant")
    inputs = list(circuit.inputs)
    if ZERO_WIRE not in inputs:
        inputs.append(ZERO_WIRE)
    gates = [Gate(g.output, "BUF", (ZERO_WIRE,)) if g.output in targets else g
             for g in circuit.gates]
    return make_circuit(circuit.name, inputs, circuit.outputs, gates)


def eliminate_dead_logic(circuit: Circuit, droppable_inputs: Iterable[str] = ()) -> Circuit:
    """Drop gates that cannot reach an output, plus unreferenced droppable inputs.

    Primary inputs are kept even when unread, except those listed in
    ``droppable_inputs`` (and the reserved zero wire), which are removed when
    nothing reads them.
    """
    gm = circuit.gate_map
    live: set[str] = set()
    stack = [w for w in circuit.outputs]
    while stack:
        w = stack.pop()
        if w in live:
            continue
        live.add(w)
        g = gm.get(w)
        if g is not None:
            stack.extend(g.inputs)
    gates = tuple(g for g in circuit.gates if g.output in live)
    droppable = set(droppable_inputs) | {ZERO_WIRE}
    inputs = tuple(w for w in circuit.inputs if w not in droppable or w in live)
    return Circuit(circuit.name, inputs, circuit.outputs, gates)


def build_miter(c1: Circuit, c2: Circuit, name: str = "miter") -> Circuit:
    """One-output circuit that is 1 exactly where the two circuits differ.

    Both circuits must share the same free-input set and output arity;
    outputs are compared positionally.
    """
    if set(c1.free_inputs) != set(c2.free_inputs):
        raise CircuitError("interface mismatch: primary-input name lists differ")
    if len(c1.outputs) != len(c2.outputs):
        raise CircuitError("interface mismatch: output arities differ")
    if not c1.outputs:
        raise CircuitError("interface mismatch: circuits have no outputs to compare")

    shared = set(c1.free_inputs)

    def remap(prefix: str, c: Circuit) -> Circuit:
        return c.rename(lambda w: w if w in shared or w == ZERO_WIRE else prefix + w)

    a = remap("__m1_", c1)
    b = remap("__m2_", c2)
    inputs = list(c1.free_inputs)
    if ZERO_WIRE in c1.inputs or ZERO_WIRE in c2.inputs:
        inputs.append(ZERO_WIRE)
    gates = list(a.gates) + list(b.gates)
    diffs = []
    for i, (wa, wb) in enumerate(zip(a.outputs, b.outputs)):
        d = f"__mx_{i}"
        gates.append(Gate(d, "XOR", (wa, wb)))
        diffs.append(d)
    if len(diffs) == 1:
        gates.append(Gate("__miter", "BUF", (diffs[0],)))
    else:
        gates.append(Gate("__miter", "OR", tuple(diffs)))
    return make_circuit(name, inputs, ["__miter"], gates)


# ---------------------------------------------------------------------------
# signal probabilities

def signal_probabilities(circuit: Circuit,
                         input_probs: Mapping[str, float] | None = None) -> dict[str, float]:
    """Probability of each wire being 1 under the wire-independence approximation.

    Inputs default to 0.5.  Multi-input gates fold left-associatively; the
    result is exact on fanout-free circuits.  Skew of a wire is p - 0.5.
    """
    probs: dict[str, float] = {}
    given = dict(input_probs or {})
    for w in circuit.inputs:
        p = 0.0 if w == ZERO_WIRE else given.get(w, 0.5)
        if not 0.0 <= p <= 1.0:
            raise CircuitError(f"probability for {w!r} outside [0, 1]")
        probs[w] = p

    for g in circuit.gates:
        ps = [probs[s] for s in g.inputs]
        if g.kind in ("AND", "NAND"):
            p = reduce(lambda a, b: a * b, ps)
        elif g.kind in ("OR", "NOR"):
            p = 1.0 - reduce(lambda a, b: a * (1.0 - b), ps[1:], 1.0 - ps[0])
        elif g.kind in ("XOR", "XNOR"):
            p = reduce(lambda a, b: a + b - 2.0 * a * b, ps)
        elif g.kind == "NOT":
            p = 1.0 - ps[0]
        else:  # BUF
            p = ps[0]
        if g.kind in ("NAND", "NOR", "XNOR"):
            p = 1.0 - p
        probs[g.output] = p
    return probs


def skew(probability: float) -> float:
    return probability - 0.5
