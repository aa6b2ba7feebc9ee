"""CNF encodings of netlists.

:func:`to_cnf` is the strict Tseitin transform: every wire gets exactly one
variable, wide XOR/XNOR gates introduce auxiliary fold variables.  The
:class:`LiteralBuilder` is the incremental counterpart used by the attack
loop: it emits clauses straight into a solver, folds constants away (so a
circuit copy with its inputs pinned shrinks to the key-dependent cone) and
may alias wires to existing literals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .circuit import ZERO_WIRE, Circuit, CircuitError

Value = "int | bool"  # signed literal or folded constant


class CnfError(CircuitError):
    pass


@dataclass(frozen=True)
class CnfFormula:
    """A CNF with a wire-to-variable map for the originating circuit."""

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    wire_vars: Mapping[str, int]

    def __post_init__(self) -> None:
        for cl in self.clauses:
            for lit in cl:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise CnfError(f"literal {lit} out of range")

    def to_dimacs(self, comment: str = "") -> str:
        lines = []
        if comment:
            lines.append(f"c {comment}")
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        lines.extend(" ".join(map(str, cl)) + " 0" for cl in self.clauses)
        return "\n".join(lines) + "\n"


def _xor2(clauses: list, out: int, a: int, b: int) -> None:
    clauses.append((-out, a, b))
    clauses.append((-out, -a, -b))
    clauses.append((out, -a, b))
    clauses.append((out, a, -b))


def to_cnf(circuit: Circuit) -> CnfFormula:
    """Tseitin-encode a circuit; satisfying assignments are exactly the
    wire valuations consistent with gate semantics."""
    wire_vars: dict[str, int] = {}
    nv = 0
    for w in circuit.wires:
        nv += 1
        wire_vars[w] = nv
    clauses: list[tuple[int, ...]] = []
    if ZERO_WIRE in wire_vars:
        clauses.append((-wire_vars[ZERO_WIRE],))

    aux = nv
    for g in circuit.gates:
        y = wire_vars[g.output]
        ins = [wire_vars[s] for s in g.inputs]
        kind = g.kind
        if kind in ("AND", "NAND"):
            out = y if kind == "AND" else -y
            for x in ins:
                clauses.append((-out, x))
            clauses.append(tuple([out] + [-x for x in ins]))
        elif kind in ("OR", "NOR"):
            out = y if kind == "OR" else -y
            for x in ins:
                clauses.append((out, -x))
            clauses.append(tuple([-out] + ins))
        elif kind in ("XOR", "XNOR"):
            out = y if kind == "XOR" else -y
            cur = ins[0]
            for x in ins[1:-1]:
                aux += 1
                _xor2(clauses, aux, cur, x)
                cur = aux
            _xor2(clauses, out, cur, ins[-1])
        elif kind == "NOT":
            clauses.append((-y, -ins[0]))
            clauses.append((y, ins[0]))
        else:  # BUF
            clauses.append((-y, ins[0]))
            clauses.append((y, -ins[0]))
    return CnfFormula(aux, tuple(clauses), wire_vars)


class LiteralBuilder:
    """Incremental clause emission with constant folding and aliasing.

    Wire values are signed literals or Python bools.  The builder only ever
    *adds* variables and clauses to the engine, which keeps it compatible
    with incremental solving.
    """

    def __init__(self, engine) -> None:
        self.engine = engine

    def var(self) -> int:
        return self.engine.new_var()

    def emit(self, lits: Sequence[int]) -> None:
        self.engine.add_clause(lits)

    @staticmethod
    def neg(val):
        return (not val) if isinstance(val, bool) else -val

    def fold_and(self, vals) -> "int | bool":
        lits: list[int] = []
        seen: set[int] = set()
        for v in vals:
            if v is False:
                return False
            if v is True:
                continue
            if v in seen:
                continue
            if -v in seen:
                return False
            seen.add(v)
            lits.append(v)
        if not lits:
            return True
        if len(lits) == 1:
            return lits[0]
        y = self.var()
        for x in lits:
            self.emit((-y, x))
        self.emit(tuple([y] + [-x for x in lits]))
        return y

    def fold_or(self, vals) -> "int | bool":
        return self.neg(self.fold_and([self.neg(v) for v in vals]))

    def fold_xor(self, vals) -> "int | bool":
        parity = False
        order: list[int] = []
        count: dict[int, int] = {}
        for v in vals:
            if isinstance(v, bool):
                parity ^= v
                continue
            if v < 0:
                parity = not parity
                v = -v
            if v in count:
                count[v] ^= 1
            else:
                count[v] = 1
                order.append(v)
        lits = [v for v in order if count[v]]
        if not lits:
            return parity
        cur = lits[0]
        for x in lits[1:]:
            t = self.var()
            self.emit((-t, cur, x))
            self.emit((-t, -cur, -x))
            self.emit((t, -cur, x))
            self.emit((t, cur, -x))
            cur = t
        return -cur if parity else cur

    def gate_value(self, kind: str, vals) -> "int | bool":
        if kind == "AND":
            return self.fold_and(vals)
        if kind == "OR":
            return self.fold_or(vals)
        if kind == "NAND":
            return self.neg(self.fold_and(vals))
        if kind == "NOR":
            return self.neg(self.fold_or(vals))
        if kind == "XOR":
            return self.fold_xor(vals)
        if kind == "XNOR":
            return self.neg(self.fold_xor(vals))
        if kind == "NOT":
            return self.neg(vals[0])
        if kind == "BUF":
            return vals[0]
        raise CnfError(f"unknown gate kind {kind!r}")

    def encode(self, circuit: Circuit, bindings: Mapping[str, "int | bool"]) -> dict:
        """Encode a circuit copy; returns the wire -> value map.

        ``bindings`` must cover every free input (literals or constants);
        the reserved zero wire is bound to False automatically.
        """
        vals: dict[str, "int | bool"] = {}
        for w in circuit.inputs:
            if w == ZERO_WIRE:
                vals[w] = False
            elif w in bindings:
                vals[w] = bindings[w]
            else:
                raise CnfError(f"no binding for input {w!r}")
        for g in circuit.gates:
            vals[g.output] = self.gate_value(g.kind, [vals[s] for s in g.inputs])
        return vals

    def force(self, val, bit: int, context: str = "") -> None:
        """Constrain a value to a concrete bit; folded constants must match."""
        if isinstance(val, bool):
            if val != bool(bit):
                raise CnfError(f"constant wire contradicts required value {context}")
            return
        self.emit((val,) if bit else (-val,))
