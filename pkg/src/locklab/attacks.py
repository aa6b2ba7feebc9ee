"""Attacks on locked netlists.

* :func:`sat_attack` — the oracle-guided iterative key-recovery loop: find an
  input where two candidate keys disagree, ask the oracle, constrain both key
  copies to reproduce the answer, repeat until no distinguishing input is
  left, then extract any surviving key.
* :func:`approximate_sat_attack` — same loop with an iteration budget and a
  sampled disagreement estimate for the candidate key it settles on.
* :func:`removal_attack` — tie suspected locking-block outputs to constant 0
  and strip the dead cone.
* :func:`model_attack_sim` — Monte-Carlo simulation of the abstract pruning
  process under a uniformly random distinguishing-input choice, tracking
  wrong-key families symbolically instead of enumerating keys.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuit import (
    Circuit,
    CircuitError,
    constant_columns,
    eliminate_dead_logic,
    signal_probabilities,
    simulate,
    simulate_columns,
    tie_wires_to_zero,
)
from .cnf import LiteralBuilder
from .locking import (
    AntiSatSpec,
    Key,
    LockedCircuit,
    LockingError,
    SasSpec,
    SfllSpec,
    bind_key,
    key_input_wires,
)
from .sat import CdclSolver


class AttackError(Exception):
    pass


class Oracle:
    """Query interface over an activated (correctly keyed) circuit."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.queries = 0

    @classmethod
    def from_locked(cls, locked: LockedCircuit, key: Key | None = None) -> "Oracle":
        return cls(bind_key(locked, key if key is not None else locked.correct_key))

    def query(self, assignment: Mapping[str, int]) -> dict[str, int]:
        self.queries += 1
        return simulate(self.circuit, assignment)

    def query_columns(self, columns: Mapping[str, int], width: int) -> list[int]:
        """Packed batch query; returns one column integer per output."""
        self.queries += width
        vals = simulate_columns(self.circuit, columns, width)
        return [vals[w] for w in self.circuit.outputs]


@dataclass(frozen=True)
class AttackResult:
    recovered_key: Key
    iterations: int
    di_log: tuple[tuple[dict, tuple[int, ...]], ...]
    termination: str  # "exhausted" | "iteration_limit" | "time_limit"
    wall_time: float

    def __post_init__(self) -> None:
        if self.iterations != len(self.di_log):
            raise AttackError("iteration count disagrees with the DI log")


@dataclass(frozen=True)
class ApproximateAttackResult:
    attack: AttackResult
    error_estimate: float
    sample_count: int
    seed: int


def _attack_loop(locked: "LockedCircuit | Circuit", oracle: Oracle, engine,
                 max_iterations: int, time_limit: float | None,
                 dump_dir: str | None, check_discipline: bool):
    circuit = locked.circuit if isinstance(locked, LockedCircuit) else locked
    key_wires = key_input_wires(circuit)
    if not key_wires:
        raise AttackError("no key inputs: circuit is not locked")
    keyset = set(key_wires)
    x_wires = [w for w in circuit.free_inputs if w not in keyset]
    if len(oracle.circuit.free_inputs) != len(x_wires):
        raise AttackError("oracle interface does not match the locked circuit")

    start = time.perf_counter()
    lb = LiteralBuilder(engine)
    x_vars = {w: lb.var() for w in x_wires}
    ka_vars = {w: lb.var() for w in key_wires}
    kb_vars = {w: lb.var() for w in key_wires}
    va = lb.encode(circuit, {**x_vars, **ka_vars})
    vb = lb.encode(circuit, {**x_vars, **kb_vars})
    diff = lb.fold_or([lb.fold_xor([va[o], vb[o]]) for o in circuit.outputs])

    di_log: list[tuple[dict, tuple[int, ...]]] = []
    packed_di = {w: 0 for w in x_wires}
    packed_y: list[int] = [0] * len(circuit.outputs)

    if diff is False:
        # outputs never depend on the key: nothing to distinguish
        return "exhausted", di_log, Key((0,) * len(key_wires)), time.perf_counter() - start
    guard = lb.var()
    lb.emit((-guard, diff))

    termination = None
    while True:
        if len(di_log) >= max_iterations:
            termination = "iteration_limit"
            break
        if time_limit is not None and time.perf_counter() - start > time_limit:
            termination = "time_limit"
            break
        if dump_dir is not None:
            engine.dump_dimacs(
                os.path.join(dump_dir, f"iter{len(di_log):05d}.cnf"),
                assumptions=[guard],
                comment=f"distinguishing-input query {len(di_log)}",
            )
        if not engine.solve([guard]):
            termination = "exhausted"
            break
        di = {w: int(engine.value(x_vars[w])) for w in x_wires}
        if check_discipline and di_log:
            _assert_discipline(circuit, key_wires, engine, ka_vars, kb_vars,
                               x_wires, packed_di, packed_y, len(di_log))
        y_raw = oracle.query(di)
        y_bits = tuple(y_raw[o] for o in oracle.circuit.outputs)
        for w in x_wires:
            packed_di[w] |= di[w] << len(di_log)
        for i, bit in enumerate(y_bits):
            packed_y[i] |= bit << len(di_log)
        di_log.append((di, y_bits))
        for kmap in (ka_vars, kb_vars):
            vals = lb.encode(circuit, {**{w: bool(di[w]) for w in x_wires}, **kmap})
            for out_wire, bit in zip(circuit.outputs, y_bits):
                lb.force(vals[out_wire], bit, context=f"output {out_wire} on logged DI")

    if not engine.solve([-guard]):
        raise AttackError("key extraction became unsatisfiable")  # cannot happen
    bits = tuple(int(engine.value(ka_vars[w])) for w in key_wires)
    return termination, di_log, Key(bits), time.perf_counter() - start


def _assert_discipline(circuit, key_wires, engine, ka_vars, kb_vars, x_wires,
                       packed_di, packed_y, width):
    """Both candidate keys in the current model must reproduce the oracle
    outputs on every previously logged distinguishing input."""
    for kvars in (ka_vars, kb_vars):
        cols = dict(packed_di)
        cols.update(constant_columns(
            {w: int(engine.value(kvars[w])) for w in key_wires}, width))
        vals = simulate_columns(circuit, cols, width)
        for i, out_wire in enumerate(circuit.outputs):
            if vals[out_wire] != packed_y[i]:
                raise AttackError(
                    "intermediate key model disagrees with a logged oracle response"
                )


def sat_attack(locked: "LockedCircuit | Circuit", oracle: Oracle, engine=None,
               iteration_limit: int = 10 ** 6, time_limit: float | None = None,
               dump_dir: str | None = None, check_discipline: bool = True) -> AttackResult:
    """Run the oracle-guided attack to exhaustion (or a limit).

    On ``exhausted`` termination the recovered key reproduces the oracle on
    every input (any remaining key does, since no distinguishing input is
    left).  The result carries the full distinguishing-input log.
    """
    if engine is None:
        engine = CdclSolver()
    termination, di_log, key, wall = _attack_loop(
        locked, oracle, engine, iteration_limit, time_limit, dump_dir,
        check_discipline)
    return AttackResult(recovered_key=key, iterations=len(di_log),
                        di_log=tuple(di_log), termination=termination,
                        wall_time=wall)


def approximate_sat_attack(locked: "LockedCircuit | Circuit", oracle: Oracle,
                           engine=None, settle_window: int = 50,
                           sample_count: int = 10000,
                           seed: int = 0) -> ApproximateAttackResult:
    """Early-terminating attack returning a candidate key and its sampled
    disagreement rate against the oracle."""
    if engine is None:
        engine = CdclSolver()
    termination, di_log, key, wall = _attack_loop(
        locked, oracle, engine, settle_window, None, None, True)
    result = AttackResult(recovered_key=key, iterations=len(di_log),
                          di_log=tuple(di_log), termination=termination,
                          wall_time=wall)
    bound = bind_key(locked, key)
    rng = np.random.default_rng(seed)
    x_wires = bound.free_inputs
    cols = {}
    for w in x_wires:
        bits = rng.integers(0, 2, size=sample_count, dtype=np.uint8)
        cols[w] = int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")
    got = simulate_columns(bound, cols, sample_count)
    want = oracle.query_columns(cols, sample_count)
    mism = 0
    for i, out_wire in enumerate(bound.outputs):
        mism |= got[out_wire] ^ want[i]
    rate = bin(mism).count("1") / sample_count
    return ApproximateAttackResult(attack=result, error_estimate=rate,
                                   sample_count=sample_count, seed=seed)


# ---------------------------------------------------------------------------
# removal attack

SKEW_THRESHOLD = 0.45


def removal_attack(locked: "LockedCircuit | Circuit",
                   target_wire: "str | Sequence[str] | None" = None) -> Circuit:
    """Tie suspected block outputs to constant 0 and drop the dead cone.

    Automatic targeting looks for heavily skewed wires feeding exactly one
    XOR on a path to a primary output whose fan-in cone contains key inputs
    (point-function blocks are keyed; restore-style detectors inside the
    circuit body are not, and must survive removal).  Unreferenced key
    inputs are dropped from the result.
    """
    circuit = locked.circuit if isinstance(locked, LockedCircuit) else locked
    if target_wire is None or target_wire == "auto":
        targets = _auto_targets(circuit)
    elif isinstance(target_wire, str):
        targets = [target_wire]
    else:
        targets = list(target_wire)
    for w in targets:
        if w not in set(circuit.wires):
            raise CircuitError(f"wire not found: {w!r}")
    stripped = tie_wires_to_zero(circuit, targets) if targets else circuit
    return eliminate_dead_logic(stripped, droppable_inputs=key_input_wires(circuit))


def _reaches_output(circuit: Circuit, wire: str) -> bool:
    outs = set(circuit.outputs)
    seen = set()
    stack = [wire]
    cons = circuit.consumers
    while stack:
        w = stack.pop()
        if w in outs:
            return True
        for nxt in cons.get(w, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def _auto_targets(circuit: Circuit) -> list[str]:
    probs = signal_probabilities(circuit)
    keyset = set(key_input_wires(circuit))
    found: list[tuple[float, str]] = []
    for g in circuit.gates:
        w = g.output
        sk = probs[w] - 0.5
        if abs(sk) <= SKEW_THRESHOLD:
            continue
        readers = circuit.consumers[w]
        if len(readers) != 1 or w in set(circuit.outputs):
            continue
        xor_gate = circuit.gate_map[readers[0]]
        if xor_gate.kind != "XOR" or w not in xor_gate.inputs:
            continue
        if not _reaches_output(circuit, xor_gate.output):
            continue
        if not (circuit.transitive_fanin([w]) & keyset):
            continue
        found.append((sk, w))
    found.sort()  # most-negative skew first
    return [w for _, w in found]


# ---------------------------------------------------------------------------
# abstract uniform-DI attack model

@dataclass(frozen=True)
class ModelSimResult:
    trials: int
    mean: float
    variance: float
    histogram: dict[int, int]
    seed: int

    @property
    def stderr(self) -> float:
        return (self.variance / self.trials) ** 0.5 if self.trials else 0.0


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def _owners_table(spec: SasSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Non-critical minterm values and, per block, the owning critical minterm."""
    n, l = spec.n, spec.l
    crit = np.array(sorted(spec.critical_minterms), dtype=np.int64)
    is_crit = np.zeros(1 << n, dtype=bool)
    is_crit[crit] = True
    noncrit = np.nonzero(~is_crit)[0].astype(np.int64)
    owners = np.empty((len(noncrit), l), dtype=np.int64)
    for j in range(l):
        bp = spec.partition.blocks[j]
        for r, x in enumerate(noncrit):
            owners[r, j] = bp.owner_minterm(int(x) ^ spec.x_g)
    return crit, noncrit, owners


def _sas_lambda_perm(spec: SasSpec, trials: int, seed: int) -> np.ndarray:
    """Iteration counts via the random-order equivalent of the pruning process.

    A uniformly random processing order is drawn; a non-critical minterm
    contributes an iteration exactly when it precedes at least one of its
    owning critical minterms, and critical minterms always contribute.
    """
    n = spec.n
    size = 1 << n
    crit, noncrit, owners = _owners_table(spec)
    lambdas = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        rng = _trial_rng(seed, t)
        pos = np.empty(size, dtype=np.int64)
        pos[rng.permutation(size)] = np.arange(size)
        owner_last = pos[owners].max(axis=1)
        lambdas[t] = len(crit) + int((pos[noncrit] < owner_last).sum())
    return lambdas


def sas_model_di_sequence(spec: SasSpec, seed: int) -> list[int]:
    """One trial of the sequential pruning process; returns the DI sequence.

    Maintains each minterm's residual wrong-key family by partition-block
    identity: a non-critical minterm stays eligible while some block's
    owning critical minterm is unpicked; critical minterms stay eligible
    until picked (their natural key is covered by nothing else).
    """
    import random as _random

    n, l = spec.n, spec.l
    size = 1 << n
    crit_set = set(spec.critical_minterms)
    rng = _random.Random(seed)
    owners: dict[int, list[int]] = {}
    owned: dict[int, list[int]] = {x: [] for x in spec.critical_minterms}
    for x in range(size):
        if x in crit_set:
            continue
        lst = []
        for j in range(l):
            owner = spec.partition.blocks[j].owner_minterm(x ^ spec.x_g)
            lst.append(owner)
            owned[owner].append(x)
        owners[x] = lst
    live_count = {x: l for x in owners}
    eligible = list(range(size))
    index = {x: i for i, x in enumerate(eligible)}

    def remove(x: int) -> None:
        i = index.pop(x)
        last = eligible.pop()
        if last != x:
            eligible[i] = last
            index[last] = i

    picked: list[int] = []
    pending_crit = len(crit_set)
    while pending_crit:
        x = eligible[rng.randrange(len(eligible))]
        picked.append(x)
        remove(x)
        if x in crit_set:
            pending_crit -= 1
            for victim in owned[x]:
                if victim not in live_count:
                    continue
                live_count[victim] -= 1
                if live_count[victim] == 0:
                    del live_count[victim]
                    if victim in index:
                        remove(victim)
        else:
            del live_count[x]
    return picked


def _sfll_lambda_perm(spec: SfllSpec, trials: int, seed: int) -> np.ndarray:
    masks = {m for _, m in spec.cubes}
    if len(masks) != 1:
        raise LockingError("model simulation needs a shared care mask")
    k = spec.k
    classes = 1 << k
    prot = np.zeros(classes, dtype=bool)
    positions = _care_positions(next(iter(masks)), spec.n)
    for value, _ in spec.cubes:
        prot[_project(value, positions, spec.n)] = True
    prot_idx = np.nonzero(prot)[0]
    lambdas = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        rng = _trial_rng(seed, t)
        pos = np.empty(classes, dtype=np.int64)
        pos[rng.permutation(classes)] = np.arange(classes)
        lambdas[t] = int(pos[prot_idx].max()) + 1
    return lambdas


def _care_positions(mask: int, n: int) -> list[int]:
    return [b for b in range(n) if (mask >> b) & 1]


def _project(value: int, positions: list[int], n: int) -> int:
    out = 0
    for i, b in enumerate(positions):
        out |= ((value >> b) & 1) << i
    return out


def model_attack_sim(spec, trials: int, seed: int,
                     threads: int = 1) -> ModelSimResult:
    """Monte-Carlo estimate of the attack iteration count under uniformly
    random distinguishing-input selection.

    Works at the granularity of wrong-key families (block id plus key-half
    set identity), never enumerating the key space.  ``threads`` only chunks
    the work; per-trial seeding keeps results identical for any value.
    """
    if trials < 1:
        raise AttackError("trials must be >= 1")
    if isinstance(spec, SasSpec):
        lambdas = _sas_lambda_perm(spec, trials, seed)
    elif isinstance(spec, AntiSatSpec):
        lambdas = np.full(trials, 1 << spec.n, dtype=np.int64)
    elif isinstance(spec, SfllSpec):
        lambdas = _sfll_lambda_perm(spec, trials, seed)
    else:
        raise AttackError(f"unsupported spec type {type(spec).__name__}")
    del threads  # chunking is seed-stable; kept for interface parity
    mean = float(lambdas.mean())
    var = float(lambdas.var(ddof=1)) if trials > 1 else 0.0
    uniq, counts = np.unique(lambdas, return_counts=True)
    hist = {int(u): int(c) for u, c in zip(uniq, counts)}
    return ModelSimResult(trials=trials, mean=mean, variance=var,
                          histogram=hist, seed=seed)
