"""Operand-frequency traces: critical-minterm selection and impact scoring.

A trace maps operand minterms (over the locking slice) to occurrence counts.
The workload error rate of a key is the fraction of trace operations whose
operand lands in the key's corrupted set — a desk-scale proxy for running
the locked design under a real workload.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .locking import Key, hex_word


class WorkloadError(Exception):
    pass


@dataclass(frozen=True)
class Trace:
    entries: Mapping[int, int]
    total: int
    source: str
    width: int

    def __post_init__(self) -> None:
        if self.total <= 0:
            raise WorkloadError(f"trace {self.source!r} has zero total weight")
        if self.total != sum(self.entries.values()):
            raise WorkloadError("trace total disagrees with its entries")

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.entries)


def load_trace(path: str, width: int | None = None) -> Trace:
    """Read a ``minterm_hex,count`` CSV; duplicate minterms sum their counts.

    The minterm width defaults to 4 bits per hex digit of the first row;
    pass ``width`` for non-nibble-aligned slices.
    """
    entries: dict[int, int] = {}
    inferred = width
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise WorkloadError(f"{path}:{lineno}: expected 'minterm_hex,count'")
            text, cnt = row[0].strip(), row[1].strip()
            try:
                minterm = int(text, 16)
                count = int(cnt)
            except ValueError:
                raise WorkloadError(f"{path}:{lineno}: malformed row {row!r}") from None
            if count < 0:
                raise WorkloadError(f"{path}:{lineno}: negative count")
            if inferred is None:
                inferred = 4 * len(text)
            if minterm >> inferred:
                raise WorkloadError(f"{path}:{lineno}: minterm wider than {inferred} bits")
            entries[minterm] = entries.get(minterm, 0) + count
    if inferred is None:
        raise WorkloadError(f"trace {path!r} is empty")
    total = sum(entries.values())
    if total == 0:
        raise WorkloadError(f"trace {path!r} has zero total weight")
    return Trace(entries=entries, total=total, source=path, width=inferred)


def trace_from_counts(counts: Mapping[int, int], width: int, source: str = "inline") -> Trace:
    return Trace(entries=dict(counts), total=sum(counts.values()), source=source,
                 width=width)


@dataclass(frozen=True)
class SelectionResult:
    minterms: tuple[int, ...]
    used_union_fallback: bool


def select_critical_minterms(traces: Sequence[Trace], m: int,
                             weights: Mapping[str, float] | None = None) -> SelectionResult:
    """Pick the m highest-weighted minterms common to all traces.

    Aggregate weight of a minterm is the weighted sum of its per-trace
    counts (weights keyed by trace source, default 1).  Ties break toward
    the numerically smallest minterm.  If fewer than m minterms are common
    to every trace, selection falls back to the union of supports and flags
    the result.
    """
    if m < 1 or (m & (m - 1)):
        raise WorkloadError("m must be a power of two")
    if not traces:
        raise WorkloadError("no traces given")
    widths = {t.width for t in traces}
    if len(widths) != 1:
        raise WorkloadError("traces have mismatched minterm widths")
    common = frozenset.intersection(*(t.support for t in traces))
    fallback = len(common) < m
    pool = frozenset.union(*(t.support for t in traces)) if fallback else common
    if len(pool) < m:
        raise WorkloadError(f"only {len(pool)} distinct minterms available, need {m}")
    wmap = weights or {}

    def score(x: int) -> float:
        return sum(wmap.get(t.source, 1.0) * t.entries.get(x, 0) for t in traces)

    ranked = sorted(pool, key=lambda x: (-score(x), x))
    return SelectionResult(minterms=tuple(ranked[:m]), used_union_fallback=fallback)


def workload_error_rate(trace: Trace, corrupted: Iterable[int]) -> Fraction:
    """Fraction of trace operations whose operand is corrupted."""
    hit = 0
    for x in corrupted:
        if x >> trace.width:
            raise WorkloadError(
                f"minterm {x:#x} wider than the trace's {trace.width} bits")
        hit += trace.entries.get(x, 0)
    return Fraction(hit, trace.total)


@dataclass(frozen=True)
class ImpactReport:
    key: Key
    corrupted: frozenset[int]
    rate: Fraction
    contributions: tuple[tuple[int, Fraction], ...]

    def to_json(self, width: int) -> dict:
        return {
            "key": self.key.to_hex(),
            "corrupted": [hex_word(x, width) for x in sorted(self.corrupted)],
            "rate": {"num": self.rate.numerator, "den": self.rate.denominator},
            "contributions": [
                {"minterm": hex_word(x, width),
                 "share": {"num": f.numerator, "den": f.denominator}}
                for x, f in self.contributions
            ],
        }


def impact_report(trace: Trace, key: Key, corrupted: Iterable[int]) -> ImpactReport:
    """Per-key workload impact with a per-minterm contribution breakdown."""
    corrupted = frozenset(corrupted)
    contributions = tuple(
        (x, Fraction(trace.entries[x], trace.total))
        for x in sorted(corrupted & trace.support)
    )
    return ImpactReport(key=key, corrupted=corrupted,
                        rate=workload_error_rate(trace, corrupted),
                        contributions=contributions)
