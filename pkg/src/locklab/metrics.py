"""Error-rate metrics and closed-form security quantities.

Exact measurements use arbitrary-precision rationals; nothing stochastic
enters a theorem check.  Exhaustive sweeps run bit-parallel over packed
columns and are chunked to bound memory.

Conventions: rates are measured over the locking input slice with non-slice
inputs held at all-zeros (a documented choice; small circuits can use
``full_input=True``).  The wrong-key universe for the per-minterm error rate
of partition-based schemes is one block's key pair space, matching the
2^n * (2^n - 1) denominator of the per-block accounting; the composite
multi-block universe is available through the averaging entry point, which
enumerates every key bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import (
    Circuit,
    CircuitError,
    constant_columns,
    minterm_columns,
    simulate_columns,
)
from .locking import (
    AntiSatSpec,
    Key,
    LockedCircuit,
    LockingError,
    SasSpec,
    SfllSpec,
    hex_word,
    key_input_wires,
)

_CHUNK_BITS = 16


class MetricsError(Exception):
    pass


@dataclass(frozen=True)
class Estimate:
    """A sampled rate with a 95% (Wilson score) confidence interval."""

    value: float
    low: float
    high: float
    samples: int
    seed: int

    def covers(self, exact: "Fraction | float") -> bool:
        return self.low <= float(exact) <= self.high


def wilson_interval(hits: int, samples: int, z: float = 1.959964) -> tuple[float, float]:
    if samples == 0:
        return (0.0, 1.0)
    phat = hits / samples
    denom = 1.0 + z * z / samples
    centre = (phat + z * z / (2 * samples)) / denom
    half = (z / denom) * sqrt(phat * (1 - phat) / samples + z * z / (4 * samples * samples))
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass(frozen=True)
class ErrorProfile:
    """Per-key or per-minterm error-rate table with provenance."""

    kind: str  # "ker" | "ier"
    method: str  # "exhaustive" | "sampled"
    width: int  # bits of the index (key width or slice width)
    entries: tuple[tuple[int, "Fraction | Estimate"], ...]
    sample_count: int | None = None
    seed: int | None = None

    def to_json(self) -> dict:
        rows = []
        for idx, val in self.entries:
            row: dict = {"index": hex_word(idx, self.width)}
            if isinstance(val, Fraction):
                row["num"] = val.numerator
                row["den"] = val.denominator
            else:
                row.update({"estimate": val.value, "low": val.low, "high": val.high})
            rows.append(row)
        doc = {"kind": self.kind, "method": self.method, "entries": rows}
        if self.method == "sampled":
            doc["sample_count"] = self.sample_count
            doc["seed"] = self.seed
        return doc

    def to_csv(self) -> str:
        lines = ["index,num,den" if self.method == "exhaustive"
                 else "index,estimate,low,high"]
        for idx, val in self.entries:
            h = hex_word(idx, self.width)
            if isinstance(val, Fraction):
                lines.append(f"{h},{val.numerator},{val.denominator}")
            else:
                lines.append(f"{h},{val.value},{val.low},{val.high}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# shared sweep plumbing

Locked = "LockedCircuit | Circuit"


def _circuit_of(locked) -> Circuit:
    return locked.circuit if isinstance(locked, LockedCircuit) else locked


def _slice_wires(locked, original: Circuit) -> tuple[str, ...]:
    """Locking slice of a locked instance; a raw circuit uses every input."""
    if isinstance(locked, LockedCircuit):
        return tuple(locked.spec.input_slice)
    return tuple(original.free_inputs)


def _key_assignment(locked, key: Key) -> dict[str, int]:
    if isinstance(locked, LockedCircuit):
        return locked.key_assignment(key)
    wires = key_input_wires(locked)
    if len(wires) != len(key):
        raise MetricsError(f"key has {len(key)} bits, circuit has {len(wires)}")
    return dict(zip(wires, key.bits))


def _fixed_zero_inputs(circuit: Circuit, exclude: Iterable[str]) -> dict[str, int]:
    skip = set(exclude)
    return {w: 0 for w in circuit.free_inputs if w not in skip}


def _output_diff(vals_a: Mapping[str, int], outs_a: Sequence[str],
                 vals_b: Mapping[str, int], outs_b: Sequence[str]) -> int:
    diff = 0
    for oa, ob in zip(outs_a, outs_b):
        diff |= vals_a[oa] ^ vals_b[ob]
    return diff


def _tile(pattern: int, period_bits: int, width: int) -> int:
    out = pattern
    span = period_bits
    while span < width:
        out |= out << span
        span *= 2
    return out & ((1 << width) - 1)


def analytic_wrong_key_count(spec) -> int:
    """Functional wrong-key count of a partition-based scheme: every key
    whose halves differ in some block."""
    if isinstance(spec, (SasSpec, AntiSatSpec)):
        n = spec.n
        l = spec.l if isinstance(spec, SasSpec) else 1
        return (1 << (2 * n * l)) - (1 << (n * l))
    raise MetricsError("no closed form for this scheme")


def corrupted_set(locked: "LockedCircuit | Circuit", original: Circuit, key: Key,
                  domain: Iterable[int] | None = None) -> frozenset[int]:
    """Slice minterms on which the keyed circuit disagrees with the original."""
    circuit = _circuit_of(locked)
    slice_wires = _slice_wires(locked, original)
    n = len(slice_wires)
    if domain is None:
        if n > 20:
            raise MetricsError("slice too wide to enumerate; pass an explicit domain")
        domain = range(1 << n)
    out: set[int] = set()
    dom = list(domain)
    for start in range(0, len(dom), 1 << _CHUNK_BITS):
        chunk = dom[start:start + (1 << _CHUNK_BITS)]
        width = len(chunk)
        cols: dict[str, int] = {}
        for i, w in enumerate(slice_wires):
            acc = 0
            bitpos = n - 1 - i
            for c, x in enumerate(chunk):
                acc |= ((x >> bitpos) & 1) << c
            cols[w] = acc
        cols.update(constant_columns(_fixed_zero_inputs(original, slice_wires), width))
        ov = simulate_columns(original, cols, width)
        lcols = dict(cols)
        lcols.update(constant_columns(_key_assignment(locked, key), width))
        lv = simulate_columns(circuit, lcols, width)
        diff = _output_diff(lv, circuit.outputs, ov, original.outputs)
        while diff:
            low = diff & -diff
            out.add(chunk[low.bit_length() - 1])
            diff ^= low
    return frozenset(out)


def ker(locked: "LockedCircuit | Circuit", original: Circuit, key: Key,
        full_input: bool = False) -> Fraction:
    """Fraction of slice minterms the key corrupts (exact)."""
    circuit = _circuit_of(locked)
    if full_input:
        wires = original.free_inputs
    else:
        wires = _slice_wires(locked, original)
    n = len(wires)
    if n > 20:
        raise MetricsError("input space too wide; use ker_sampled")
    mism = 0
    for start in range(0, 1 << n, 1 << _CHUNK_BITS):
        width = min(1 << _CHUNK_BITS, 1 << n)
        cols = _enumeration_chunk(wires, start, width)
        cols.update(constant_columns(_fixed_zero_inputs(original, wires), width))
        ov = simulate_columns(original, cols, width)
        lcols = dict(cols)
        lcols.update(constant_columns(_key_assignment(locked, key), width))
        lv = simulate_columns(circuit, lcols, width)
        mism += bin(_output_diff(lv, circuit.outputs, ov, original.outputs)).count("1")
    return Fraction(mism, 1 << n)


def _enumeration_chunk(wires: Sequence[str], start: int, width: int) -> dict[str, int]:
    """Columns enumerating minterms start .. start+width-1 over ``wires``."""
    n = len(wires)
    lo = min(n, (width - 1).bit_length())
    cols = minterm_columns(wires[n - lo:], width)
    hi = start >> lo
    cols.update(constant_columns(
        {w: (hi >> (n - lo - 1 - i)) & 1 for i, w in enumerate(wires[: n - lo])},
        width,
    ))
    return cols


def ker_sampled(locked: "LockedCircuit | Circuit", original: Circuit, key: Key,
                samples: int, seed: int) -> Estimate:
    """Monte-Carlo key error rate over uniform slice minterms."""
    circuit = _circuit_of(locked)
    slice_wires = _slice_wires(locked, original)
    rng = np.random.default_rng(seed)
    cols: dict[str, int] = {}
    for w in slice_wires:
        bits = rng.integers(0, 2, size=samples, dtype=np.uint8)
        cols[w] = int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")
    cols.update(constant_columns(_fixed_zero_inputs(original, slice_wires), samples))
    ov = simulate_columns(original, cols, samples)
    lcols = dict(cols)
    lcols.update(constant_columns(_key_assignment(locked, key), samples))
    lv = simulate_columns(circuit, lcols, samples)
    hits = bin(_output_diff(lv, circuit.outputs, ov, original.outputs)).count("1")
    low, high = wilson_interval(hits, samples)
    return Estimate(hits / samples, low, high, samples, seed)


# ---------------------------------------------------------------------------
# per-minterm error rate

def ier(locked: "LockedCircuit | Circuit", original: Circuit, minterm: int,
        block: int | None = None) -> Fraction:
    """Fraction of wrong keys that corrupt one slice minterm (exact).

    Partition-based schemes are measured over a single block's key pair
    space with the other blocks held correct (their per-block accounting);
    other schemes enumerate the full key space, which requires at most 24
    key bits.
    """
    spec = locked.spec if isinstance(locked, LockedCircuit) else None
    if isinstance(spec, (SasSpec, AntiSatSpec)):
        return _ier_block(locked, original, minterm, block)
    key_bits = len(key_input_wires(_circuit_of(locked)))
    if key_bits > 24:
        raise MetricsError("key space too large; use ier_sampled")
    wrong, per_minterm = _corruption_totals(locked, original)
    return Fraction(per_minterm.get(minterm, 0), wrong)


def _ier_block(locked: LockedCircuit, original: Circuit, minterm: int,
               block: int | None) -> Fraction:
    spec = locked.spec
    n = spec.n
    if n > 12:
        raise MetricsError("block key space too large; use ier_sampled")
    if isinstance(spec, SasSpec):
        crit = set(spec.critical_minterms)
        j = spec.partition.block_of(minterm) if minterm in crit else (block or 0)
        l = spec.l
    else:
        j, l = 0, 1
    slice_wires = _slice_wires(locked, original)
    key_wires = key_input_wires(locked.circuit)
    block_keys = list(key_wires[2 * n * j: 2 * n * (j + 1)])

    width_total = 1 << (2 * n)
    mism_total = 0
    wrong_total = 0
    orig_cols = constant_columns(
        {w: (minterm >> (n - 1 - i)) & 1 for i, w in enumerate(slice_wires)}, 1)
    orig_cols.update(constant_columns(_fixed_zero_inputs(original, slice_wires), 1))
    ov = simulate_columns(original, orig_cols, 1)

    for start in range(0, width_total, 1 << _CHUNK_BITS):
        width = min(1 << _CHUNK_BITS, width_total)
        cols = _enumeration_chunk(block_keys, start, width)
        # columns where the block's two key halves agree are correct keys
        eq = (1 << width) - 1
        for i in range(n):
            eq &= ~(cols[block_keys[i]] ^ cols[block_keys[n + i]])
        cols.update(constant_columns(
            {w: (minterm >> (n - 1 - i)) & 1 for i, w in enumerate(slice_wires)}, width))
        cols.update(constant_columns(_fixed_zero_inputs(original, slice_wires), width))
        others = {w: b for w, b in locked.key_assignment(locked.correct_key).items()
                  if w not in set(block_keys)}
        cols.update(constant_columns(others, width))
        lv = simulate_columns(locked.circuit, cols, width)
        diff = 0
        for lo_w, oo_w in zip(locked.circuit.outputs, original.outputs):
            pat = _tile(ov[oo_w], 1, width)
            diff |= lv[lo_w] ^ pat
        if diff & eq:
            raise MetricsError("a correct block key corrupted the output")
        mism_total += bin(diff).count("1")
        wrong_total += width - bin(eq).count("1")
    return Fraction(mism_total, wrong_total)


def ier_sampled(locked: "LockedCircuit | Circuit", original: Circuit, minterm: int,
                samples: int, seed: int) -> Estimate:
    """Monte-Carlo per-minterm error rate over uniform wrong keys."""
    circuit = _circuit_of(locked)
    key_wires = key_input_wires(circuit)
    rng = np.random.default_rng(seed)
    kept = 0
    hits = 0
    slice_wires = _slice_wires(locked, original)
    n = len(slice_wires)
    base = {w: (minterm >> (n - 1 - i)) & 1 for i, w in enumerate(slice_wires)}
    base.update(_fixed_zero_inputs(original, slice_wires))
    want = simulate_columns(original, base, 1)
    batch = 4096
    while kept < samples:
        keys = rng.integers(0, 2, size=(batch, len(key_wires)), dtype=np.uint8)
        keys = keys[_wrong_key_mask(locked, keys)]
        if len(keys) == 0:
            continue
        take = keys[: samples - kept]
        width = len(take)
        cols = {w: _tile(v, 1, width) for w, v in base.items()}
        for i, w in enumerate(key_wires):
            cols[w] = int.from_bytes(
                np.packbits(take[:, i], bitorder="little").tobytes(), "little")
        lv = simulate_columns(circuit, cols, width)
        diff = 0
        for lo_w, oo_w in zip(circuit.outputs, original.outputs):
            diff |= lv[lo_w] ^ _tile(want[oo_w], 1, width)
        hits += bin(diff).count("1")
        kept += width
    low, high = wilson_interval(hits, kept)
    return Estimate(hits / kept, low, high, kept, seed)


def _wrong_key_mask(locked, keys: np.ndarray) -> np.ndarray:
    """Boolean mask of rows that are wrong keys (scheme-analytic); rows of a
    raw circuit cannot be classified cheaply and all count."""
    spec = locked.spec if isinstance(locked, LockedCircuit) else None
    if isinstance(spec, (SasSpec, AntiSatSpec)):
        n = spec.n
        l = spec.l if isinstance(spec, SasSpec) else 1
        correct = np.ones(len(keys), dtype=bool)
        for j in range(l):
            k1 = keys[:, 2 * n * j: 2 * n * j + n]
            k2 = keys[:, 2 * n * j + n: 2 * n * (j + 1)]
            correct &= (k1 == k2).all(axis=1)
        return ~correct
    if isinstance(spec, SfllSpec):
        prot = spec.protected_minterms()
        out = np.empty(len(keys), dtype=bool)
        for r, row in enumerate(keys):
            out[r] = _sfll_restore_set(spec, row) != prot
        return out
    return np.ones(len(keys), dtype=bool)


def _sfll_restore_set(spec: SfllSpec, key_bits: Sequence[int]) -> frozenset[int]:
    """Minterms restored by a key (expanded over non-care positions)."""
    out: set[int] = set()
    k, n = spec.k, spec.n
    for ci, (_, mask) in enumerate(spec.cubes):
        positions = [n - 1 - i for i in range(n) if (mask >> (n - 1 - i)) & 1]
        value = 0
        for kpos, bitpos in enumerate(positions):
            if key_bits[ci * k + kpos]:
                value |= 1 << bitpos
        free = [b for b in range(n) if not (mask >> b) & 1]
        for combo in range(1 << len(free)):
            x = value
            for i, b in enumerate(free):
                if (combo >> i) & 1:
                    x |= 1 << b
            out.add(x)
    return frozenset(out)


# ---------------------------------------------------------------------------
# full-matrix enumeration and the averaging identity

def _corruption_totals(locked, original: Circuit,
                       full_input: bool = False) -> tuple[int, dict[int, int]]:
    """(wrong-key count, per-minterm corrupting-key counts) by enumeration."""
    _, _, wrong, per_minterm = _corruption_sums(locked, original, full_input)
    return wrong, per_minterm


def _corruption_sums(locked, original: Circuit,
                     full_input: bool = False):
    """Enumerate the full key x input corruption matrix.

    Returns (row_total, col_total, wrong_count, per_minterm_counts) where
    row_total sums per-key corrupted-minterm counts, col_total sums
    per-minterm corrupting-key counts, and wrong keys are the keys that
    corrupt at least one minterm of the measured domain.  Both grand totals
    count the same corruption edges, once per axis.
    """
    circuit = _circuit_of(locked)
    if full_input:
        slice_wires = tuple(original.free_inputs)
    else:
        slice_wires = _slice_wires(locked, original)
    n = len(slice_wires)
    key_wires = key_input_wires(circuit)
    kb = len(key_wires)
    if kb + n > 26:
        raise MetricsError("key x input space too large to enumerate")

    period = 1 << n  # columns per key: one full input enumeration
    col_mask = (1 << period) - 1
    chunk_keys = min(max(1, (1 << _CHUNK_BITS) // period), 1 << kb)
    width = chunk_keys * period

    base = minterm_columns(slice_wires, width)  # input enumeration, tiled
    base.update(constant_columns(_fixed_zero_inputs(original, slice_wires), width))
    ov = simulate_columns(original, base, period)
    orig_tiled = [_tile(ov[o], period, width) for o in original.outputs]

    lo_bits = (chunk_keys - 1).bit_length() if chunk_keys > 1 else 0
    lo_keys = list(key_wires[kb - lo_bits:]) if lo_bits else []
    hi_keys = list(key_wires[: kb - lo_bits])
    lo_cols = minterm_columns(lo_keys, width, stride=period) if lo_keys else {}

    row_total = 0
    col_counts: dict[int, int] = {}
    wrong = 0
    locked_outs = list(circuit.outputs)
    for hi in range(1 << len(hi_keys)):
        cols = dict(base)
        cols.update(lo_cols)
        cols.update(constant_columns(
            {w: (hi >> (len(hi_keys) - 1 - i)) & 1 for i, w in enumerate(hi_keys)},
            width,
        ))
        lv = simulate_columns(circuit, cols, width)
        diff = 0
        for i, lo_w in enumerate(locked_outs):
            diff |= lv[lo_w] ^ orig_tiled[i]
        for kk in range(chunk_keys):
            piece = (diff >> (kk * period)) & col_mask
            if piece == 0:
                continue
            wrong += 1
            row_total += bin(piece).count("1")
            while piece:
                low = piece & -piece
                x = low.bit_length() - 1
                col_counts[x] = col_counts.get(x, 0) + 1
                piece ^= low
    return row_total, sum(col_counts.values()), wrong, col_counts


def averages_and_theorem2(locked: "LockedCircuit | Circuit", original: Circuit,
                          full_input: bool = False) -> tuple[Fraction, Fraction, bool]:
    """Average key error rate over wrong keys, average per-minterm error rate
    over all minterms, and their (always exact) equality flag.

    The two averages count the same corruption edges along different axes of
    the key x input matrix, so exact equality is asserted.
    """
    row_total, col_total, wrong, _ = _corruption_sums(locked, original, full_input)
    if wrong == 0:
        raise MetricsError("degenerate instance: no wrong keys")
    slice_wires = original.free_inputs if full_input else _slice_wires(locked, original)
    n = len(slice_wires)
    e_w = Fraction(row_total, wrong * (1 << n))
    gamma = Fraction(col_total, (1 << n) * wrong)
    equal = e_w == gamma
    if not equal:
        raise MetricsError("edge-count identity violated (internal error)")
    return e_w, gamma, equal


def ier_table(locked: "LockedCircuit | Circuit", original: Circuit) -> ErrorProfile:
    """Exhaustive per-minterm error-rate table over the locking slice."""
    slice_wires = _slice_wires(locked, original)
    n = len(slice_wires)
    entries = tuple((x, ier(locked, original, x)) for x in range(1 << n))
    return ErrorProfile(kind="ier", method="exhaustive", width=n, entries=entries)


def ker_table(locked: "LockedCircuit | Circuit", original: Circuit) -> ErrorProfile:
    """Exhaustive per-key error-rate table (full key enumeration)."""
    key_wires = key_input_wires(_circuit_of(locked))
    kb = len(key_wires)
    if kb > 16:
        raise MetricsError("key space too large for a full table")
    entries = []
    for kv in range(1 << kb):
        key = Key.from_int(kv, kb)
        entries.append((kv, ker(locked, original, key)))
    return ErrorProfile(kind="ker", method="exhaustive", width=kb, entries=tuple(entries))


# ---------------------------------------------------------------------------
# closed forms

def expected_iterations(spec: SasSpec) -> Fraction:
    """Expected attack iterations for an l-block, m-critical configuration."""
    n, m, l = spec.n, spec.m, spec.l
    return Fraction(l * (1 << n) + m, l + 1)


def expected_iterations_formula(n: int, m: int, l: int) -> Fraction:
    return Fraction(l * (1 << n) + m, l + 1)


def formula_average_ier(n: int, m: int, l: int) -> Fraction:
    """Average per-minterm error rate implied by the l/m / 2^-n law."""
    return Fraction(m * Fraction(l, m) + ((1 << n) - m) * Fraction(1, 1 << n), 1 << n)


def sfll_sat_success_prob(q: int, c: int, k: int) -> Fraction:
    """Probability the attack finds the correct key within q iterations."""
    if q < 0:
        raise MetricsError("q must be nonnegative")
    if c < 1 or k < 1:
        raise MetricsError("c and k must be positive")
    ceil_log = (c - 1).bit_length()
    p = Fraction(q * (1 << ceil_log), 1 << k)
    return min(p, Fraction(1))


def tradeoff_check(gamma: "Fraction | float", observed_mean_iterations: "Fraction | float") -> bool:
    """True iff the observed mean iteration count respects the 1/gamma bound."""
    g = Fraction(gamma)
    if g <= 0:
        raise MetricsError("gamma must be positive")
    return Fraction(observed_mean_iterations) >= 1 / g
