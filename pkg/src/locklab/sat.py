"""A small CDCL satisfiability engine with incremental clause addition.

The engine speaks the interface the attack loop needs: ``add_clause`` with
nonzero integer literals, ``solve(assumptions)`` returning SAT/UNSAT, and
model lookup by variable.  Solving is deterministic: identical clause/call
sequences produce identical models.

Internally literals are coded as ``2*var`` (positive) and ``2*var + 1``
(negative) so truth values live in flat arrays indexed by literal code.
Standard machinery: two watched literals, first-UIP conflict analysis,
VSIDS-style activity with phase saving, Luby restarts and periodic
simplification of the learned-clause database.
"""

from __future__ import annotations

from heapq import heappop, heappush
from typing import Iterable, Sequence


class SatError(Exception):
    """Engine misuse or an unexpected internal state."""


def _luby(i: int) -> int:
    """i-th element (1-based) of the Luby restart sequence."""
    k = 1
    while (1 << (k + 1)) <= i + 1:
        k += 1
    while (1 << k) - 1 != i:
        if i >= (1 << k):
            i -= (1 << k) - 1
            k = 1
            while (1 << (k + 1)) <= i + 1:
                k += 1
        else:
            k -= 1
    return 1 << k


class CdclSolver:
    """Incremental CDCL solver over DIMACS-style integer literals."""

    RESTART_BASE = 128
    VAR_DECAY = 0.95

    def __init__(self) -> None:
        self.num_vars = 0
        self._clauses: list[list[int]] = []
        self._n_original = 0
        self._learned_idx: list[int] = []
        self._watches: list[list[int]] = [[], []]
        self._val = bytearray(2)  # 0 unknown / 1 true / 2 false, by literal code
        self._level = [0]
        self._reason = [-1]
        self._phase = [False]
        self._activity = [0.0]
        self._var_inc = 1.0
        self._heap: list[tuple[float, int]] = []
        self._trail: list[int] = []
        self._trail_lim: list[int] = []
        self._qhead = 0
        self._unsat = False
        self._reduce_at = 4000
        self.propagations = 0
        self.conflicts = 0
        self.decisions = 0

    # -- variables -----------------------------------------------------

    def new_var(self) -> int:
        self.num_vars += 1
        self._val.extend(b"\x00\x00")
        self._watches.append([])
        self._watches.append([])
        self._level.append(0)
        self._reason.append(-1)
        self._phase.append(False)
        self._activity.append(0.0)
        heappush(self._heap, (0.0, self.num_vars))
        return self.num_vars

    def new_vars(self, count: int) -> list[int]:
        return [self.new_var() for _ in range(count)]

    def _ensure_var(self, v: int) -> None:
        while self.num_vars < v:
            self.new_var()

    # -- clause management ----------------------------------------------

    def add_clause(self, lits: Iterable[int]) -> None:
        """Add a clause of nonzero signed literals (made at decision level 0)."""
        if self._unsat:
            return
        if self._trail_lim:
            self._backtrack(0)
        codes: list[int] = []
        seen: set[int] = set()
        val = self._val
        for lit in lits:
            if lit == 0:
                raise SatError("zero literal in clause")
            v = abs(lit)
            self._ensure_var(v)
            code = (v << 1) | (lit < 0)
            if code in seen:
                continue
            if code ^ 1 in seen:
                return  # tautology
            w = val[code]
            if w == 1:
                return  # satisfied at level 0
            if w == 2:
                continue  # permanently false literal
            seen.add(code)
            codes.append(code)
        if not codes:
            self._unsat = True
            return
        if len(codes) == 1:
            self._assign(codes[0], -1)
            if self._propagate() >= 0:
                self._unsat = True
            return
        ci = len(self._clauses)
        self._clauses.append(codes)
        self._n_original += 1
        self._watches[codes[0]].append(ci)
        self._watches[codes[1]].append(ci)

    # -- assignment / trail ----------------------------------------------

    def _assign(self, code: int, reason: int) -> None:
        val = self._val
        val[code] = 1
        val[code ^ 1] = 2
        v = code >> 1
        self._level[v] = len(self._trail_lim)
        self._reason[v] = reason
        self._trail.append(code)

    def _backtrack(self, target: int) -> None:
        if len(self._trail_lim) <= target:
            return
        bound = self._trail_lim[target]
        trail = self._trail
        val = self._val
        heap = self._heap
        act = self._activity
        phase = self._phase
        for i in range(len(trail) - 1, bound - 1, -1):
            code = trail[i]
            v = code >> 1
            phase[v] = not (code & 1)
            val[code] = 0
            val[code ^ 1] = 0
            heappush(heap, (-act[v], v))
        del trail[bound:]
        del self._trail_lim[target:]
        self._qhead = bound

    # -- propagation ----------------------------------------------------

    def _propagate(self) -> int:
        """Unit propagation; returns conflicting clause index or -1."""
        trail = self._trail
        val = self._val
        watches = self._watches
        clauses = self._clauses
        qhead = self._qhead
        nprop = 0
        confl = -1
        while qhead < len(trail):
            p = trail[qhead]
            qhead += 1
            nprop += 1
            falsified = p ^ 1
            ws = watches[falsified]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == falsified:
                    c[0] = c[1]
                    c[1] = falsified
                first = c[0]
                if val[first] == 1:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != 2:
                        c[1] = lk
                        c[k] = falsified
                        watches[lk].append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if val[first] == 2:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        confl = ci
                        break
                    val[first] = 1
                    val[first ^ 1] = 2
                    v = first >> 1
                    self._level[v] = len(self._trail_lim)
                    self._reason[v] = ci
                    trail.append(first)
            del ws[j:]
            if confl >= 0:
                break
        self._qhead = qhead
        self.propagations += nprop
        return confl

    # -- conflict analysis -----------------------------------------------

    def _bump(self, v: int) -> None:
        act = self._activity
        act[v] += self._var_inc
        if act[v] > 1e100:
            inv = 1e-100
            for i in range(1, self.num_vars + 1):
                act[i] *= inv
            self._var_inc *= inv

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        clauses = self._clauses
        level = self._level
        reason = self._reason
        trail = self._trail
        seen = bytearray(self.num_vars + 1)
        cur_level = len(self._trail_lim)
        learnt: list[int] = [0]
        counter = 0
        p = -1
        index = len(trail) - 1
        while True:
            c = clauses[confl]
            for idx in range(0 if p == -1 else 1, len(c)):
                q = c[idx]
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[trail[index] >> 1]:
                index -= 1
            p = trail[index]
            v = p >> 1
            confl = reason[v]
            seen[v] = 0
            counter -= 1
            index -= 1
            if counter == 0:
                break
        learnt[0] = p ^ 1
        if len(learnt) == 1:
            return learnt, 0
        # move a literal of the backjump level into the second watch slot
        bt = 0
        pos = 1
        for i in range(1, len(learnt)):
            lv = level[learnt[i] >> 1]
            if lv > bt:
                bt = lv
                pos = i
        learnt[1], learnt[pos] = learnt[pos], learnt[1]
        return learnt, bt

    # -- learned-clause housekeeping ---------------------------------------

    def _reduce_db(self) -> None:
        """Backtrack to the root, drop bulky learned clauses, resimplify."""
        self._backtrack(0)
        val = self._val
        learned = sorted((self._clauses[ci] for ci in self._learned_idx), key=len)
        keep_learned = learned[: max(len(learned) // 2, 1)]
        learned_set = set(self._learned_idx)
        originals = [c for ci, c in enumerate(self._clauses) if ci not in learned_set]

        def simplify(cls: list[list[int]]) -> list[list[int]]:
            out = []
            for c in cls:
                keep = []
                sat = False
                for code in c:
                    w = val[code]
                    if w == 1:
                        sat = True
                        break
                    if w == 0:
                        keep.append(code)
                if sat:
                    continue
                if not keep:
                    self._unsat = True
                    return out
                if len(keep) == 1:
                    self._assign(keep[0], -1)
                    continue
                out.append(keep)
            return out

        new_originals = simplify(originals)
        if not self._unsat:
            keep_learned = simplify(keep_learned)
        self._clauses = new_originals + keep_learned
        self._n_original = len(new_originals)
        self._learned_idx = list(range(len(new_originals), len(self._clauses)))
        self._watches = [[] for _ in range(2 * self.num_vars + 2)]
        for ci, c in enumerate(self._clauses):
            self._watches[c[0]].append(ci)
            self._watches[c[1]].append(ci)
        for v in range(1, self.num_vars + 1):
            self._reason[v] = -1
        if not self._unsat and self._propagate() >= 0:
            self._unsat = True
        self._reduce_at = max(self._reduce_at, 2 * len(keep_learned) + 2000)

    # -- search -----------------------------------------------------------

    def _decide_var(self) -> int:
        heap = self._heap
        val = self._val
        while heap:
            _, v = heappop(heap)
            if val[v << 1] == 0:
                return v
        for v in range(1, self.num_vars + 1):
            if val[v << 1] == 0:
                return v
        return 0

    def solve(self, assumptions: Sequence[int] = ()) -> bool:
        """Search for a model extending ``assumptions``; True iff satisfiable."""
        if self._unsat:
            return False
        self._backtrack(0)
        if self._propagate() >= 0:
            self._unsat = True
            return False
        codes = []
        for lit in assumptions:
            if lit == 0:
                raise SatError("zero literal in assumptions")
            v = abs(lit)
            self._ensure_var(v)
            codes.append((v << 1) | (lit < 0))

        conflicts_here = 0
        restart_idx = 1
        budget = self.RESTART_BASE * _luby(restart_idx)
        learned_cap = self._reduce_at

        while True:
            confl = self._propagate()
            if confl >= 0:
                self.conflicts += 1
                conflicts_here += 1
                if not self._trail_lim:
                    self._unsat = True
                    return False
                learnt, bt = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    self._assign(learnt[0], -1)
                else:
                    ci = len(self._clauses)
                    self._clauses.append(learnt)
                    self._learned_idx.append(ci)
                    self._watches[learnt[0]].append(ci)
                    self._watches[learnt[1]].append(ci)
                    self._assign(learnt[0], ci)
                self._var_inc /= self.VAR_DECAY
                continue

            if conflicts_here >= budget:
                conflicts_here = 0
                restart_idx += 1
                budget = self.RESTART_BASE * _luby(restart_idx)
                self._backtrack(0)
                if len(self._learned_idx) > learned_cap:
                    self._reduce_db()
                    if self._unsat:
                        return False
                    learned_cap = self._reduce_at
                continue

            dl = len(self._trail_lim)
            if dl < len(codes):
                a = codes[dl]
                w = self._val[a]
                if w == 2:
                    self._backtrack(0)
                    return False
                self._trail_lim.append(len(self._trail))
                if w == 0:
                    self._assign(a, -1)
                continue

            if len(self._trail) == self.num_vars:
                return True

            v = self._decide_var()
            if v == 0:
                return True
            self.decisions += 1
            self._trail_lim.append(len(self._trail))
            code = (v << 1) | (not self._phase[v])
            self._assign(code, -1)

    # -- model access -----------------------------------------------------

    def value(self, lit: int) -> bool:
        """Truth value of a variable (or signed literal) in the current model."""
        v = abs(lit)
        if v == 0 or v > self.num_vars:
            raise SatError(f"unknown variable {lit}")
        w = self._val[(v << 1) | (lit < 0)]
        if w == 0:
            raise SatError(f"variable {v} is unassigned (no model available)")
        return w == 1

    def model(self) -> dict[int, bool]:
        return {v: self.value(v) for v in range(1, self.num_vars + 1)}

    # -- debugging aids -----------------------------------------------------

    def dump_dimacs(self, path: str, assumptions: Sequence[int] = (),
                    comment: str = "") -> None:
        """Write the clause database (plus assumption units) in DIMACS format."""
        lines = []
        if comment:
            lines.append(f"c {comment}")
        learned_set = set(self._learned_idx)
        cls = [c for ci, c in enumerate(self._clauses) if ci not in learned_set]
        lines.append(f"p cnf {self.num_vars} {len(cls) + len(assumptions)}")
        for c in cls:
            lits = [-(code >> 1) if code & 1 else (code >> 1) for code in c]
            lines.append(" ".join(map(str, lits)) + " 0")
        for lit in assumptions:
            lines.append(f"{lit} 0")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
