"""Combinational equivalence checking, exhaustive or SAT-based."""

from __future__ import annotations

from dataclasses import dataclass

from .circuit import Circuit, CircuitError, build_miter, constant_columns, minterm_columns, simulate_columns
from .cnf import to_cnf
from .sat import CdclSolver

_CHUNK_BITS = 16


@dataclass(frozen=True)
class EquivalenceResult:
    equal: bool
    counterexample: dict[str, int] | None = None

    def __bool__(self) -> bool:
        return self.equal


def check_equivalence(c1: Circuit, c2: Circuit, mode: str = "exhaustive",
                      width_limit: int = 20, engine_factory=CdclSolver) -> EquivalenceResult:
    """Decide whether two circuits compute the same outputs on every input.

    ``exhaustive`` sweeps all input minterms (bit-parallel, chunked) and is
    limited to ``width_limit`` free inputs; ``sat`` builds a miter and asks a
    satisfiability engine for a distinguishing input.
    """
    if set(c1.free_inputs) != set(c2.free_inputs):
        raise CircuitError("interface mismatch: primary-input name lists differ")
    if len(c1.outputs) != len(c2.outputs):
        raise CircuitError("interface mismatch: output arities differ")
    if mode == "exhaustive":
        return _check_exhaustive(c1, c2, width_limit)
    if mode == "sat":
        return _check_sat(c1, c2, engine_factory)
    raise ValueError(f"unknown equivalence mode {mode!r}")


def _check_exhaustive(c1: Circuit, c2: Circuit, width_limit: int) -> EquivalenceResult:
    wires = list(c1.free_inputs)
    w = len(wires)
    if w > width_limit:
        raise CircuitError(
            f"{w} free inputs exceed the exhaustive width limit of {width_limit}"
        )
    lo = min(w, _CHUNK_BITS)
    lo_wires, hi_wires = wires[w - lo:], wires[: w - lo]
    width = 1 << lo
    base = minterm_columns(lo_wires, width)
    for hi in range(1 << len(hi_wires)):
        cols = dict(base)
        cols.update(constant_columns(
            {wr: (hi >> (len(hi_wires) - 1 - i)) & 1 for i, wr in enumerate(hi_wires)},
            width,
        ))
        v1 = simulate_columns(c1, cols, width)
        v2 = simulate_columns(c2, cols, width)
        diff = 0
        for o1, o2 in zip(c1.outputs, c2.outputs):
            diff |= v1[o1] ^ v2[o2]
        if diff:
            idx = (diff & -diff).bit_length() - 1
            cex = {wr: (cols[wr] >> idx) & 1 for wr in wires}
            return EquivalenceResult(False, cex)
    return EquivalenceResult(True, None)


def _check_sat(c1: Circuit, c2: Circuit, engine_factory) -> EquivalenceResult:
    miter = build_miter(c1, c2)
    formula = to_cnf(miter)
    engine = engine_factory()
    engine.new_vars(formula.num_vars)
    for cl in formula.clauses:
        engine.add_clause(cl)
    target = formula.wire_vars["__miter"]
    if not engine.solve([target]):
        return EquivalenceResult(True, None)
    cex = {w: int(engine.value(formula.wire_vars[w])) for w in miter.free_inputs}
    return EquivalenceResult(False, cex)
