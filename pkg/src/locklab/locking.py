"""Point-function locking schemes over combinational netlists.

Four schemes are provided:

* ``sas`` — per-block key-space partitioning gives designer-chosen critical
  minterms an elevated input error rate of l/m while every other minterm
  stays at 2^-n.
* ``rsas`` — same behaviour, but the circuit body is inverted on the
  critical minterms and the block output re-inverts them, so removing the
  block leaves a circuit that is wrong exactly on the critical minterms.
* ``antisat`` — the degenerate point-function scheme: no critical minterms,
  every minterm at 2^-n.
* ``sfll_flex`` — strip a set of protected cubes from the circuit and
  restore them with a keyed comparator bank.

Keys use inputs named ``keyinput<i>``; bit 0 of a key is ``keyinput0`` and
is the most significant bit of the serialized hex word.
"""

from __future__ import annotations

import random
import re
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .circuit import (
    ZERO_WIRE,
    Circuit,
    CircuitError,
    Gate,
    insert_xor_at_wire,
    make_circuit,
)

SCHEMES = ("sas", "rsas", "antisat", "sfll_flex")

_KEYINPUT_RE = re.compile(r"keyinput(\d+)$")
_GOLDEN = 0x9E3779B97F4A7C15
_M64 = (1 << 64) - 1

#: widths up to this many bits materialize partitions as explicit lists
MATERIALIZE_MAX = 20


class LockingError(CircuitError):
    pass


def hex_word(value: int, nbits: int) -> str:
    digits = max((nbits + 3) // 4, 1)
    return f"{value:0{digits}x}"


def parse_hex_word(text: str, nbits: int) -> int:
    value = int(text.strip(), 16)
    if value < 0 or value >> nbits:
        raise LockingError(f"hex word {text!r} does not fit in {nbits} bits")
    return value


# ---------------------------------------------------------------------------
# seeded permutation of [0, 2**width)

def _mix64(x: int) -> int:
    x &= _M64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _M64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


class FeistelPermutation:
    """Seeded bijection on [0, 2**width) (cycle-walking Feistel network)."""

    ROUNDS = 6

    def __init__(self, width: int, seed: int):
        if width < 1:
            raise ValueError("width must be positive")
        self.width = width
        self.size = 1 << width
        even = width + (width & 1)
        self._half = even // 2
        self._hmask = (1 << self._half) - 1
        self._keys = [_mix64(seed ^ _mix64((r + 1) * _GOLDEN)) for r in range(self.ROUNDS)]

    def _enc(self, x: int) -> int:
        h, hm = self._half, self._hmask
        left, right = x >> h, x & hm
        for k in self._keys:
            left, right = right, left ^ (_mix64(k ^ right) & hm)
        return (left << h) | right

    def _dec(self, x: int) -> int:
        h, hm = self._half, self._hmask
        left, right = x >> h, x & hm
        for k in reversed(self._keys):
            left, right = right ^ (_mix64(k ^ left) & hm), left
        return (left << h) | right

    def forward(self, i: int) -> int:
        x = self._enc(i)
        while x >= self.size:
            x = self._enc(x)
        return x

    def inverse(self, v: int) -> int:
        x = self._dec(v)
        while x >= self.size:
            x = self._dec(x)
        return x


# ---------------------------------------------------------------------------
# key-space partition

class BlockPartition:
    """Partition of the n-bit first-key-half space among one block's
    critical minterms.

    Each critical minterm X owns a set that starts with its natural key
    X ^ x_g; the remaining values are dealt contiguously from the seeded
    shuffle of the unclaimed pool, in sorted-minterm order.  Sets are equal
    sized and cover the whole space.  Explicit sets can be supplied instead
    of a seed (used when loading spec files).
    """

    def __init__(self, n: int, minterms: Sequence[int], x_g: int,
                 seed: int | None = None,
                 explicit_sets: Sequence[Sequence[int]] | None = None):
        self.n = n
        self.minterms = tuple(sorted(minterms))
        self.x_g = x_g
        self.seed = seed
        count = len(self.minterms)
        if count < 1:
            raise LockingError("a block partition needs at least one critical minterm")
        if (1 << n) % count:
            raise LockingError(f"{count} sets cannot evenly partition {1 << n} values")
        self.set_size = (1 << n) // count
        self.naturals = tuple(x ^ x_g for x in self.minterms)
        if len(set(self.naturals)) != count:
            raise AssertionError("natural-key collision between distinct minterms")
        self._natural_index = {nat: i for i, nat in enumerate(self.naturals)}
        self._sets: tuple[tuple[int, ...], ...] | None = None
        self._owner_map: dict[int, int] | None = None
        self._perm: FeistelPermutation | None = None
        self._nat_positions: list[int] = []
        if explicit_sets is not None:
            self._init_explicit(explicit_sets)
        elif seed is not None:
            self._perm = FeistelPermutation(n, seed)
            self._nat_positions = sorted(self._perm.inverse(nat) for nat in self.naturals)
        else:
            raise LockingError("partition needs a seed or explicit sets")

    def _init_explicit(self, sets: Sequence[Sequence[int]]) -> None:
        if len(sets) != len(self.minterms):
            raise LockingError("explicit partition has the wrong number of sets")
        owner: dict[int, int] = {}
        norm = []
        for i, vals in enumerate(sets):
            vals = tuple(vals)
            if len(vals) != self.set_size:
                raise LockingError(
                    f"set {i} has {len(vals)} values, expected {self.set_size}"
                )
            if self.naturals[i] not in vals:
                raise LockingError(
                    f"set {i} is missing the natural key of minterm "
                    f"{hex_word(self.minterms[i], self.n)}"
                )
            for v in vals:
                if v in owner:
                    raise LockingError("explicit partition sets are not disjoint")
                owner[v] = i
            norm.append(vals)
        if len(owner) != 1 << self.n:
            raise LockingError("explicit partition does not cover the key-half space")
        self._sets = tuple(norm)
        self._owner_map = owner

    # -- queries ---------------------------------------------------------

    def owner_index(self, k1: int) -> int:
        """Index (into sorted minterms) of the set containing ``k1``."""
        if k1 < 0 or k1 >> self.n:
            raise LockingError(f"value {k1} outside the {self.n}-bit space")
        if self._owner_map is not None:
            return self._owner_map[k1]
        idx = self._natural_index.get(k1)
        if idx is not None:
            return idx
        if len(self.minterms) == 1:
            return 0
        pos = self._perm.inverse(k1)
        rank = pos - bisect_left(self._nat_positions, pos)
        return rank // (self.set_size - 1)

    def owner_minterm(self, k1: int) -> int:
        return self.minterms[self.owner_index(k1)]

    def contains(self, minterm: int, k1: int) -> bool:
        return self.minterms[self.owner_index(k1)] == minterm

    def sets(self) -> tuple[tuple[int, ...], ...]:
        """Explicit per-minterm value lists (natural key first)."""
        if self._sets is None:
            if self.n > MATERIALIZE_MAX:
                raise LockingError(
                    f"refusing to materialize a partition over {self.n} bits"
                )
            perm = self._perm
            naturals = set(self.naturals)
            pool = [v for v in (perm.forward(i) for i in range(self.size_space))
                    if v not in naturals]
            per = self.set_size - 1
            out = []
            for i, nat in enumerate(self.naturals):
                out.append((nat,) + tuple(pool[i * per:(i + 1) * per]))
            self._sets = tuple(out)
        return self._sets

    @property
    def size_space(self) -> int:
        return 1 << self.n


@dataclass(frozen=True)
class KeyPartition:
    """Per-block partitions for every block of a multi-block configuration."""

    n: int
    m: int
    l: int
    x_g: int
    blocks: tuple[BlockPartition, ...]
    seed: int | None = None

    def block_of(self, minterm: int) -> int:
        for j, bp in enumerate(self.blocks):
            if minterm in bp.minterms:
                return j
        raise LockingError(f"{minterm} is not a critical minterm")


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


def make_partition(critical_minterms: Sequence[int], n: int, m: int, l: int,
                   x_g: int, seed: int) -> KeyPartition:
    """Build the per-block key-space partition for a configuration.

    Critical minterms are assigned to blocks round-robin in sorted order;
    within each block, every minterm's set starts with its natural key and
    is filled from the seeded shuffle of the unclaimed values.
    """
    if not _is_pow2(m) or not _is_pow2(l):
        raise LockingError("m and l must be powers of two")
    if l > m:
        raise LockingError("l cannot exceed m")
    if m > (1 << n):
        raise LockingError(f"m={m} does not divide 2^{n} evenly")
    if x_g >> n:
        raise LockingError("x_g does not fit in n bits")
    minterms = sorted(critical_minterms)
    if len(minterms) != m:
        raise LockingError(f"expected {m} critical minterms, got {len(minterms)}")
    if len(set(minterms)) != m:
        raise LockingError("duplicate critical minterms")
    for x in minterms:
        if x < 0 or x >> n:
            raise LockingError(f"critical minterm {x} does not fit in {n} bits")
    blocks = []
    for j in range(l):
        block_minterms = minterms[j::l]
        block_seed = _mix64(seed ^ _mix64((j + 1) * 0xA5A5A5A5A5A5A5A5))
        blocks.append(BlockPartition(n, block_minterms, x_g, seed=block_seed))
    return KeyPartition(n=n, m=m, l=l, x_g=x_g, blocks=tuple(blocks), seed=seed)


# ---------------------------------------------------------------------------
# scheme parameter records

@dataclass(frozen=True)
class SasSpec:
    n: int
    m: int
    l: int
    x_g: int
    critical_minterms: tuple[int, ...]
    partition: KeyPartition
    insertion_wires: tuple[str, ...]
    input_slice: tuple[str, ...]
    polarity_mask: int = 0  # reserved: all-XOR realisation

    def __post_init__(self) -> None:
        if len(self.input_slice) != self.n:
            raise LockingError("input slice width must equal n")
        if len(self.insertion_wires) != self.l:
            raise LockingError("need one insertion wire per block")
        if tuple(sorted(self.critical_minterms)) != self.critical_minterms:
            raise LockingError("critical minterms must be stored sorted")
        p = self.partition
        if (p.n, p.m, p.l, p.x_g) != (self.n, self.m, self.l, self.x_g):
            raise LockingError("partition does not match the configuration")

    def block_minterms(self, j: int) -> tuple[int, ...]:
        return self.critical_minterms[j::self.l]

    @property
    def key_bits(self) -> int:
        return 2 * self.n * self.l


@dataclass(frozen=True)
class AntiSatSpec:
    n: int
    x_g: int
    insertion_wire: str
    input_slice: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.input_slice) != self.n:
            raise LockingError("input slice width must equal n")
        if self.x_g >> self.n:
            raise LockingError("x_g does not fit in n bits")

    @property
    def key_bits(self) -> int:
        return 2 * self.n


@dataclass(frozen=True)
class SfllSpec:
    n: int
    c: int
    k: int
    cubes: tuple[tuple[int, int], ...]  # (value, care_mask) pairs
    insertion_wire: str
    input_slice: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.input_slice) != self.n:
            raise LockingError("input slice width must equal n")
        if self.k > self.n or self.k < 1:
            raise LockingError("cube width k must satisfy 1 <= k <= n")
        if len(self.cubes) != self.c:
            raise LockingError(f"expected {self.c} cubes")
        for value, mask in self.cubes:
            if mask >> self.n or value >> self.n:
                raise LockingError("cube does not fit in n bits")
            if bin(mask).count("1") != self.k:
                raise LockingError(f"cube mask must have exactly {self.k} care bits")
            if value & ~mask:
                raise LockingError("cube value has bits outside its care mask")
        for i in range(self.c):
            for j in range(i + 1, self.c):
                vi, mi = self.cubes[i]
                vj, mj = self.cubes[j]
                shared = mi & mj
                if shared == 0 or not ((vi ^ vj) & shared):
                    raise LockingError(f"cubes {i} and {j} overlap")

    @property
    def key_bits(self) -> int:
        return self.c * self.k

    def cube_minterms(self, index: int) -> tuple[int, ...]:
        """All n-bit minterms covered by one cube (small n only)."""
        value, mask = self.cubes[index]
        free = [b for b in range(self.n) if not (mask >> b) & 1]
        out = []
        for combo in range(1 << len(free)):
            x = value
            for i, b in enumerate(free):
                if (combo >> i) & 1:
                    x |= 1 << b
            out.append(x)
        return tuple(out)

    def protected_minterms(self) -> frozenset[int]:
        out: set[int] = set()
        for i in range(self.c):
            out.update(self.cube_minterms(i))
        return frozenset(out)


# ---------------------------------------------------------------------------
# keys

@dataclass(frozen=True)
class Key:
    """An ordered key-bit vector; bit 0 drives ``keyinput0``."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(b not in (0, 1) for b in self.bits):
            raise LockingError("key bits must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)

    def slice_value(self, start: int, count: int) -> int:
        """Bits [start, start+count) as an integer, first bit most significant."""
        value = 0
        for b in self.bits[start:start + count]:
            value = (value << 1) | b
        return value

    def to_hex(self) -> str:
        return hex_word(self.slice_value(0, len(self.bits)), len(self.bits))

    @classmethod
    def from_int(cls, value: int, width: int) -> "Key":
        if value >> width:
            raise LockingError(f"key value does not fit in {width} bits")
        return cls(tuple((value >> (width - 1 - i)) & 1 for i in range(width)))

    @classmethod
    def from_hex(cls, text: str, width: int) -> "Key":
        return cls.from_int(parse_hex_word(text, width), width)


@dataclass(frozen=True)
class LockedCircuit:
    """A locked netlist plus the metadata needed to reason about it."""

    circuit: Circuit
    scheme: str
    spec: object
    correct_key: Key

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise LockingError(f"unknown scheme {self.scheme!r}")
        if len(self.key_inputs) != len(self.correct_key):
            raise LockingError("key width does not match the key inputs")

    @property
    def key_inputs(self) -> tuple[str, ...]:
        return key_input_wires(self.circuit)

    def key_assignment(self, key: Key) -> dict[str, int]:
        wires = self.key_inputs
        if len(key) != len(wires):
            raise LockingError(f"key has {len(key)} bits, circuit has {len(wires)}")
        return dict(zip(wires, key.bits))


def key_input_wires(circuit: Circuit) -> tuple[str, ...]:
    """Key inputs of a circuit by naming convention, in index order."""
    found = []
    for w in circuit.inputs:
        m = _KEYINPUT_RE.fullmatch(w)
        if m:
            found.append((int(m.group(1)), w))
    found.sort()
    for i, (idx, _) in enumerate(found):
        if idx != i:
            raise LockingError("key input indices are not contiguous from 0")
    return tuple(w for _, w in found)


def bind_key(locked: "LockedCircuit | Circuit", key: Key) -> Circuit:
    """Turn key inputs into constant drivers holding the given key.

    Returns a circuit with the same non-key interface that can be simulated,
    equivalence-checked or used as an oracle backing.
    """
    circuit = locked.circuit if isinstance(locked, LockedCircuit) else locked
    wires = key_input_wires(circuit)
    if len(wires) != len(key):
        raise LockingError(f"key has {len(key)} bits, circuit has {len(wires)}")
    keyset = set(wires)
    inputs = [w for w in circuit.inputs if w not in keyset]
    if ZERO_WIRE not in inputs:
        inputs.append(ZERO_WIRE)
    const_gates = [
        Gate(w, "NOT" if bit else "BUF", (ZERO_WIRE,))
        for w, bit in zip(wires, key.bits)
    ]
    return Circuit(
        f"{circuit.name}~keyed",
        tuple(inputs),
        circuit.outputs,
        tuple(const_gates) + circuit.gates,
    )


# ---------------------------------------------------------------------------
# functional reference models

def sas_block_output(spec: SasSpec, j: int, x: int, k1: int, k2: int) -> int:
    """Reference model of one block: 1 iff the block injects a fault."""
    bp = spec.partition.blocks[j]
    if x in set(bp.minterms):
        if bp.contains(x, k1):
            xp = spec.x_g ^ k1
        else:
            xp = spec.x_g ^ k1 ^ 1  # least-significant bit flipped: g stays silent
    else:
        xp = x
    return int((xp ^ k1) == spec.x_g and (xp ^ k2) != spec.x_g)


def rsas_block_output(spec: SasSpec, j: int, x: int, k1: int, k2: int) -> int:
    """Block model with inverted behaviour on the block's critical minterms."""
    crit = x in set(spec.block_minterms(j))
    return sas_block_output(spec, j, x, k1, k2) ^ int(crit)


def antisat_block_output(n: int, x_g: int, x: int, k1: int, k2: int) -> int:
    return int(k1 == (x ^ x_g) and k2 != (x ^ x_g))


def sas_locked_model(spec: SasSpec, x: int, key: Key) -> int:
    """1 iff any block fires for the composite key (fault injected)."""
    n = spec.n
    for j in range(spec.l):
        k1 = key.slice_value(2 * n * j, n)
        k2 = key.slice_value(2 * n * j + n, n)
        if sas_block_output(spec, j, x, k1, k2):
            return 1
    return 0


def rsas_locked_model(spec: SasSpec, x: int, key: Key) -> int:
    """Fault indicator of the full RSAS composite (body inversion included)."""
    n = spec.n
    acc = 0
    for j in range(spec.l):
        k1 = key.slice_value(2 * n * j, n)
        k2 = key.slice_value(2 * n * j + n, n)
        crit = int(x in set(spec.block_minterms(j)))
        acc |= rsas_block_output(spec, j, x, k1, k2) ^ crit
    return acc


# ---------------------------------------------------------------------------
# netlist construction

class _NetBuilder:
    """Accumulates gates with constant folding; values are wire names or bools."""

    def __init__(self, taken: Iterable[str], prefix: str):
        self.taken = set(taken)
        self.prefix = prefix
        self.gates: list[Gate] = []
        self._counter = 0
        self._not_cache: dict[str, str] = {}

    def fresh(self, hint: str) -> str:
        while True:
            cand = f"{self.prefix}{hint}_{self._counter}"
            self._counter += 1
            if cand not in self.taken:
                self.taken.add(cand)
                return cand

    def neg(self, val, hint: str = "n"):
        if isinstance(val, bool):
            return not val
        cached = self._not_cache.get(val)
        if cached is not None:
            return cached
        out = self.fresh(hint)
        self.gates.append(Gate(out, "NOT", (val,)))
        self._not_cache[val] = out
        return out

    def gate(self, kind: str, vals, hint: str = "w"):
        if kind == "NOT":
            return self.neg(vals[0], hint)
        if kind == "BUF":
            return vals[0]
        if kind in ("NAND", "NOR", "XNOR"):
            inner = {"NAND": "AND", "NOR": "OR", "XNOR": "XOR"}[kind]
            return self.neg(self.gate(inner, vals, hint), hint)
        wires: list[str] = []
        if kind == "AND":
            for v in vals:
                if v is False:
                    return False
                if v is True:
                    continue
                wires.append(v)
            if not wires:
                return True
        elif kind == "OR":
            for v in vals:
                if v is True:
                    return True
                if v is False:
                    continue
                wires.append(v)
            if not wires:
                return False
        elif kind == "XOR":
            parity = False
            for v in vals:
                if isinstance(v, bool):
                    parity ^= v
                else:
                    wires.append(v)
            if not wires:
                return parity
            if len(wires) == 1:
                return self.neg(wires[0], hint) if parity else wires[0]
            out = self.fresh(hint)
            self.gates.append(Gate(out, "XOR", tuple(wires)))
            return self.neg(out, hint) if parity else out
        else:
            raise LockingError(f"unsupported kind {kind}")
        if len(wires) == 1:
            return wires[0]
        out = self.fresh(hint)
        self.gates.append(Gate(out, kind, tuple(wires)))
        return out

    def comparator(self, wires: Sequence[str], value: int, hint: str):
        """Wide AND that fires when the wires (MSB first) spell ``value``."""
        n = len(wires)
        terms = []
        for i, w in enumerate(wires):
            bit = (value >> (n - 1 - i)) & 1
            terms.append(w if bit else self.neg(w))
        return self.gate("AND", terms, hint)


def _emit_point_block(nb: _NetBuilder, n: int, x_g: int,
                      block_minterms: Sequence[int],
                      bp: BlockPartition | None,
                      x_wires: Sequence[str], k1_wires: Sequence[str],
                      k2_wires: Sequence[str], invert_on_critical: bool):
    """Emit one locking block; returns its output value.

    With no critical minterms this degenerates to the plain point-function
    block (match-g against one key half, mismatch-g against the other).
    """
    if block_minterms:
        assert bp is not None and tuple(block_minterms) == bp.minterms
        crit_terms = [nb.comparator(x_wires, x, f"crit{idx}")
                      for idx, x in enumerate(bp.minterms)]
        crit_any = nb.gate("OR", crit_terms, "crit_any")
        sets = bp.sets()
        picked = []
        for idx, members in enumerate(sets):
            if len(members) == bp.size_space:
                mem = True
            else:
                mem = nb.gate(
                    "OR",
                    [nb.comparator(k1_wires, v, f"memv{idx}") for v in members],
                    f"mem{idx}",
                )
            picked.append(nb.gate("AND", [crit_terms[idx], mem], f"crit_mem{idx}"))
        mem_sel = nb.gate("OR", picked, "mem_sel")

        xprime = []
        not_crit = nb.neg(crit_any)
        for i in range(n):
            xg_bit = bool((x_g >> (n - 1 - i)) & 1)
            red = nb.gate("XOR", [k1_wires[i], xg_bit], f"red{i}")
            if i == n - 1:
                # keys outside the matching set get the low redirect bit
                # flipped, which keeps g silent for them
                red = nb.gate("XOR", [red, nb.neg(mem_sel)], f"redf{i}")
            sel_red = nb.gate("AND", [crit_any, red], f"selr{i}")
            sel_x = nb.gate("AND", [not_crit, x_wires[i]], f"selx{i}")
            xprime.append(nb.gate("OR", [sel_red, sel_x], f"xp{i}"))
    else:
        crit_any = False
        xprime = list(x_wires)

    g_bits = []
    gbar_bits = []
    for i in range(n):
        xg_bit = bool((x_g >> (n - 1 - i)) & 1)
        kind = "XOR" if xg_bit else "XNOR"
        g_bits.append(nb.gate(kind, [xprime[i], k1_wires[i]], f"g{i}"))
        gbar_bits.append(nb.gate(kind, [xprime[i], k2_wires[i]], f"h{i}"))
    g_out = nb.gate("AND", g_bits, "g_fire")
    gbar_out = nb.gate("NAND", gbar_bits, "h_quiet")
    y = nb.gate("AND", [g_out, gbar_out], "y")
    if invert_on_critical:
        y = nb.gate("XOR", [y, crit_any], "y_inv")
    return y


def build_sas_block(spec: SasSpec, j: int) -> Circuit:
    """Standalone netlist of block j: inputs x0.. k1_0.. k2_0.., output y."""
    n = spec.n
    x_wires = [f"x{i}" for i in range(n)]
    k1_wires = [f"k1_{i}" for i in range(n)]
    k2_wires = [f"k2_{i}" for i in range(n)]
    inputs = x_wires + k1_wires + k2_wires
    nb = _NetBuilder(inputs, "b_")
    y = _emit_point_block(nb, n, spec.x_g, spec.block_minterms(j),
                          spec.partition.blocks[j], x_wires, k1_wires, k2_wires,
                          invert_on_critical=False)
    gates = list(nb.gates)
    if isinstance(y, bool):
        raise LockingError("degenerate block collapsed to a constant")
    gates.append(Gate("y", "BUF", (y,)))
    return make_circuit(f"sas_block_{j}", inputs, ["y"], gates)


def _check_lock_targets(circuit: Circuit, slice_wires: Sequence[str],
                        insertion_wires: Sequence[str], key_bits: int) -> None:
    wires = set(circuit.wires)
    for w in slice_wires:
        if w not in set(circuit.free_inputs):
            raise LockingError(f"input-slice wire {w!r} is not a primary input")
    for w in insertion_wires:
        if w not in wires:
            raise LockingError(f"insertion wire {w!r} does not exist")
    for i in range(key_bits):
        if f"keyinput{i}" in wires:
            raise LockingError(f"wire keyinput{i} already exists")


def _draw_block_keys(n: int, l: int, seed: int) -> list[int]:
    rng = random.Random(seed)
    return [rng.getrandbits(n) for _ in range(l)]


def _finish_lock(circuit: Circuit, scheme: str, spec, key: Key,
                 new_inputs: Sequence[str], block_gates: Sequence[Gate],
                 insertions: Sequence[tuple[str, str]]) -> LockedCircuit:
    base = make_circuit(
        circuit.name + f"~{scheme}",
        tuple(circuit.inputs) + tuple(new_inputs),
        circuit.outputs,
        tuple(circuit.gates) + tuple(block_gates),
    )
    for wire, signal in insertions:
        base = insert_xor_at_wire(base, wire, signal)
    return LockedCircuit(circuit=base, scheme=scheme, spec=spec, correct_key=key)


def lock_sas(circuit: Circuit, spec: SasSpec, seed: int) -> LockedCircuit:
    """Instantiate the blocks of a configuration and XOR them into the circuit."""
    n, l = spec.n, spec.l
    _check_lock_targets(circuit, spec.input_slice, spec.insertion_wires, spec.key_bits)
    key_wires = [f"keyinput{i}" for i in range(spec.key_bits)]
    k1_of = lambda j: key_wires[2 * n * j: 2 * n * j + n]
    k2_of = lambda j: key_wires[2 * n * j + n: 2 * n * (j + 1)]
    nb = _NetBuilder(list(circuit.wires) + key_wires, "sas_")
    insertions = []
    for j in range(l):
        y = _emit_point_block(nb, n, spec.x_g, spec.block_minterms(j),
                              spec.partition.blocks[j], list(spec.input_slice),
                              k1_of(j), k2_of(j), invert_on_critical=False)
        insertions.append((spec.insertion_wires[j], y))
    k1s = _draw_block_keys(n, l, seed)
    bits: list[int] = []
    for j in range(l):
        half = [(k1s[j] >> (n - 1 - i)) & 1 for i in range(n)]
        bits.extend(half + half)
    return _finish_lock(circuit, "sas", spec, Key(tuple(bits)), key_wires,
                        nb.gates, insertions)


def lock_antisat(circuit: Circuit, n: int, x_g: int, insertion_wire: str,
                 seed: int, input_slice: Sequence[str] | None = None) -> LockedCircuit:
    """Plain point-function locking: every minterm at error rate 2^-n."""
    if input_slice is None:
        if len(circuit.free_inputs) < n:
            raise LockingError("circuit has fewer inputs than the requested width")
        input_slice = circuit.free_inputs[:n]
    spec = AntiSatSpec(n=n, x_g=x_g, insertion_wire=insertion_wire,
                       input_slice=tuple(input_slice))
    _check_lock_targets(circuit, spec.input_slice, [insertion_wire], spec.key_bits)
    key_wires = [f"keyinput{i}" for i in range(2 * n)]
    nb = _NetBuilder(list(circuit.wires) + key_wires, "asat_")
    y = _emit_point_block(nb, n, x_g, (), None, list(spec.input_slice),
                          key_wires[:n], key_wires[n:], invert_on_critical=False)
    k1 = _draw_block_keys(n, 1, seed)[0]
    half = [(k1 >> (n - 1 - i)) & 1 for i in range(n)]
    return _finish_lock(circuit, "antisat", spec, Key(tuple(half + half)),
                        key_wires, nb.gates, [(insertion_wire, y)])


def lock_rsas(circuit: Circuit, spec: SasSpec, seed: int) -> LockedCircuit:
    """Removal-resistant variant: invert the body on critical minterms and
    re-invert inside each block, so the composite equals the plain scheme."""
    n, l = spec.n, spec.l
    _check_lock_targets(circuit, spec.input_slice, spec.insertion_wires, spec.key_bits)
    key_wires = [f"keyinput{i}" for i in range(spec.key_bits)]
    nb = _NetBuilder(list(circuit.wires) + key_wires, "rsas_")
    insertions = []
    for j in range(l):
        det = nb.gate(
            "OR",
            [nb.comparator(list(spec.input_slice), x, f"b{j}_det")
             for x in spec.block_minterms(j)],
            f"b{j}_det_any",
        )
        y = _emit_point_block(nb, n, spec.x_g, spec.block_minterms(j),
                              spec.partition.blocks[j], list(spec.input_slice),
                              key_wires[2 * n * j: 2 * n * j + n],
                              key_wires[2 * n * j + n: 2 * n * (j + 1)],
                              invert_on_critical=True)
        insertions.append((spec.insertion_wires[j], det))
        insertions.append((spec.insertion_wires[j], y))
    k1s = _draw_block_keys(n, l, seed)
    bits: list[int] = []
    for j in range(l):
        half = [(k1s[j] >> (n - 1 - i)) & 1 for i in range(n)]
        bits.extend(half + half)
    return _finish_lock(circuit, "rsas", spec, Key(tuple(bits)), key_wires,
                        nb.gates, insertions)


def lock_sfll_flex(circuit: Circuit, spec: SfllSpec, seed: int = 0) -> LockedCircuit:
    """Strip the protected cubes from the circuit and add a keyed restore unit.

    The care masks are hardwired in the restore comparators; only the cube
    values are keyed, so the key is exactly c*k bits.  ``seed`` is accepted
    for interface uniformity; the correct key is fully determined.
    """
    del seed
    n, c, k = spec.n, spec.c, spec.k
    _check_lock_targets(circuit, spec.input_slice, [spec.insertion_wire], spec.key_bits)
    key_wires = [f"keyinput{i}" for i in range(c * k)]
    nb = _NetBuilder(list(circuit.wires) + key_wires, "sfll_")
    slice_wires = list(spec.input_slice)

    strip_terms = []
    for ci, (value, mask) in enumerate(spec.cubes):
        terms = []
        for i in range(n):
            bitpos = n - 1 - i
            if not (mask >> bitpos) & 1:
                continue
            bit = (value >> bitpos) & 1
            terms.append(slice_wires[i] if bit else nb.neg(slice_wires[i]))
        strip_terms.append(nb.gate("AND", terms, f"strip{ci}"))
    strip = nb.gate("OR", strip_terms, "strip_any")

    key_bits: list[int] = []
    restore_terms = []
    for ci, (value, mask) in enumerate(spec.cubes):
        terms = []
        kpos = 0
        for i in range(n):
            bitpos = n - 1 - i
            if not (mask >> bitpos) & 1:
                continue
            kw = key_wires[ci * k + kpos]
            kpos += 1
            terms.append(nb.gate("XNOR", [slice_wires[i], kw], f"rcmp{ci}_{i}"))
            key_bits.append((value >> bitpos) & 1)
        restore_terms.append(nb.gate("AND", terms, f"restore{ci}"))
    restore = nb.gate("OR", restore_terms, "restore_any")

    return _finish_lock(circuit, "sfll_flex", spec, Key(tuple(key_bits)), key_wires,
                        nb.gates, [(spec.insertion_wire, strip),
                                   (spec.insertion_wire, restore)])


# ---------------------------------------------------------------------------
# spec (de)serialization

def spec_to_json(scheme: str, spec) -> dict:
    if scheme in ("sas", "rsas"):
        width = spec.n
        doc = {
            "scheme": scheme,
            "n": spec.n,
            "m": spec.m,
            "l": spec.l,
            "x_g": hex_word(spec.x_g, width),
            "critical_minterms": [hex_word(x, width) for x in spec.critical_minterms],
            "insertion_wires": list(spec.insertion_wires),
            "input_slice": list(spec.input_slice),
        }
        if spec.partition.seed is not None:
            doc["partition_seed"] = spec.partition.seed
        if spec.n <= MATERIALIZE_MAX:
            doc["partition"] = [
                [[hex_word(v, width) for v in s] for s in bp.sets()]
                for bp in spec.partition.blocks
            ]
        return doc
    if scheme == "antisat":
        return {
            "scheme": "antisat",
            "n": spec.n,
            "x_g": hex_word(spec.x_g, spec.n),
            "insertion_wire": spec.insertion_wire,
            "input_slice": list(spec.input_slice),
        }
    if scheme == "sfll_flex":
        return {
            "scheme": "sfll_flex",
            "n": spec.n,
            "c": spec.c,
            "k": spec.k,
            "cubes": [
                {"value": hex_word(v, spec.n), "mask": hex_word(m, spec.n)}
                for v, m in spec.cubes
            ],
            "insertion_wire": spec.insertion_wire,
            "input_slice": list(spec.input_slice),
        }
    raise LockingError(f"unknown scheme {scheme!r}")


def spec_from_json(doc: Mapping) -> tuple[str, object]:
    scheme = doc.get("scheme")
    if scheme in ("sas", "rsas"):
        n = int(doc["n"])
        m = int(doc["m"])
        l = int(doc["l"])
        x_g = parse_hex_word(doc["x_g"], n)
        criticals = sorted(parse_hex_word(t, n) for t in doc["critical_minterms"])
        if "partition" in doc:
            blocks = []
            for j in range(l):
                explicit = [[parse_hex_word(t, n) for t in s]
                            for s in doc["partition"][j]]
                blocks.append(BlockPartition(n, criticals[j::l], x_g,
                                             seed=doc.get("partition_seed"),
                                             explicit_sets=explicit))
            partition = KeyPartition(n=n, m=m, l=l, x_g=x_g, blocks=tuple(blocks),
                                     seed=doc.get("partition_seed"))
        elif "partition_seed" in doc:
            partition = make_partition(criticals, n, m, l, x_g, int(doc["partition_seed"]))
        else:
            raise LockingError("spec needs partition or partition_seed")
        spec = SasSpec(n=n, m=m, l=l, x_g=x_g, critical_minterms=tuple(criticals),
                       partition=partition,
                       insertion_wires=tuple(doc["insertion_wires"]),
                       input_slice=tuple(doc["input_slice"]))
        return scheme, spec
    if scheme == "antisat":
        n = int(doc["n"])
        return scheme, AntiSatSpec(
            n=n,
            x_g=parse_hex_word(doc["x_g"], n),
            insertion_wire=doc["insertion_wire"],
            input_slice=tuple(doc["input_slice"]),
        )
    if scheme == "sfll_flex":
        n = int(doc["n"])
        cubes = tuple(
            (parse_hex_word(cd["value"], n), parse_hex_word(cd["mask"], n))
            for cd in doc["cubes"]
        )
        return scheme, SfllSpec(
            n=n, c=int(doc["c"]), k=int(doc["k"]), cubes=cubes,
            insertion_wire=doc["insertion_wire"],
            input_slice=tuple(doc["input_slice"]),
        )
    raise LockingError(f"spec file has unknown scheme {scheme!r}")


def lock(circuit: Circuit, scheme: str, spec, seed: int) -> LockedCircuit:
    """Dispatch to the right constructor for a scheme tag."""
    if scheme == "sas":
        return lock_sas(circuit, spec, seed)
    if scheme == "rsas":
        return lock_rsas(circuit, spec, seed)
    if scheme == "antisat":
        return lock_antisat(circuit, spec.n, spec.x_g, spec.insertion_wire, seed,
                            input_slice=spec.input_slice)
    if scheme == "sfll_flex":
        return lock_sfll_flex(circuit, spec, seed)
    raise LockingError(f"unknown scheme {scheme!r}")
