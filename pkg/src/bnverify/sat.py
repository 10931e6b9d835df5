"""A small deterministic CDCL solver, projected model enumeration and DIMACS I/O.

The solver uses two watched literals, first-UIP clause learning and
non-chronological backjumping. Branching is fixed by default: the lowest
unassigned variable, tried positive first. ``vsids=True`` switches to
activity-based branching (still deterministic, no randomness anywhere).
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .encoder import Cnf

SAT = "SAT"
UNSAT = "UNSAT"


class SolverBudgetExceeded(RuntimeError):
    """The conflict limit was hit before the solver reached a verdict."""


class DimacsError(ValueError):
    pass


@dataclass
class SolveResult:
    status: str
    model: list[int] | None = None
    stats: dict = field(default_factory=dict)

    @property
    def sat(self) -> bool:
        return self.status == SAT

    def value(self, var: int) -> bool:
        return self.model[var - 1] > 0


class Solver:
    """Incremental CDCL solver; clauses may be added between ``solve`` calls."""

    def __init__(self, cnf: Cnf | None = None, *, num_vars: int = 0,
                 conflict_limit: int | None = None, vsids: bool = False):
        self.num_vars = 0
        self.conflict_limit = conflict_limit
        self.vsids = vsids
        self.clauses: list[list[int]] = []
        self.original: list[tuple[int, ...]] = []
        self.watches: dict[int, list[list[int]]] = {}
        self.value: list[int] = [0]          # per var: 1 true, -1 false, 0 unassigned
        self.level: list[int] = [0]
        self.reason: list[list[int] | None] = [None]
        self.activity: list[float] = [0.0]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.inconsistent = False
        self.var_inc = 1.0
        self.heap: list[tuple[float, int]] = []
        self.stats = {"decisions": 0, "propagations": 0, "conflicts": 0, "learned": 0}
        self._grow(num_vars)
        if cnf is not None:
            self._grow(cnf.num_vars)
            for clause in cnf.clauses:
                self.add_clause(clause)

    # -- setup ----------------------------------------------------------------

    def _grow(self, n: int) -> None:
        while self.num_vars < n:
            self.num_vars += 1
            v = self.num_vars
            self.value.append(0)
            self.level.append(0)
            self.reason.append(None)
            self.activity.append(0.0)
            self.watches[v] = []
            self.watches[-v] = []
            if self.vsids:
                heapq.heappush(self.heap, (0.0, v))

    def _lit_value(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    def add_clause(self, clause: Iterable[int]) -> None:
        """Add a clause permanently (the solver backtracks to level 0 first)."""
        lits = sorted(set(int(l) for l in clause), key=abs)
        if any(-l in lits for l in lits):
            self.original.append(tuple(lits))
            return
        if lits:
            self._grow(max(abs(l) for l in lits))
        self.original.append(tuple(lits))
        self._cancel_until(0)
        if self.inconsistent:
            return
        lits = [l for l in lits if self._lit_value(l) != -1]
        if any(self._lit_value(l) == 1 for l in lits):
            return
        if not lits:
            self.inconsistent = True
        elif len(lits) == 1:
            self._enqueue(lits[0], None)
            if self._propagate() is not None:
                self.inconsistent = True
        else:
            self._attach(lits)

    def _attach(self, lits: list[int]) -> None:
        self.clauses.append(lits)
        self.watches[-lits[0]].append(lits)
        self.watches[-lits[1]].append(lits)

    # -- core -----------------------------------------------------------------

    def _enqueue(self, lit: int, reason) -> None:
        v = abs(lit)
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self):
        """Unit propagation; returns a conflicting clause or None."""
        value = self.value
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            self.stats["propagations"] += 1
            false_lit = -lit
            watchers = self.watches[lit]   # clauses watching false_lit
            i = 0
            while i < len(watchers):
                c = watchers[i]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = value[abs(first)]
                if (fv if first > 0 else -fv) == 1:
                    i += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    vk = value[abs(lk)]
                    if (vk if lk > 0 else -vk) != -1:
                        c[1], c[k] = lk, false_lit
                        self.watches[-lk].append(c)
                        watchers[i] = watchers[-1]
                        watchers.pop()
                        break
                else:
                    if (fv if first > 0 else -fv) == -1:
                        self.qhead = len(self.trail)
                        return c
                    self._enqueue(first, c)
                    i += 1
        return None

    def _analyze(self, conflict):
        seen = set()
        learnt = [0]
        counter = 0
        lit = None
        idx = len(self.trail) - 1
        clause = conflict
        cur = len(self.trail_lim)
        while True:
            for q in clause:
                if lit is not None and q == lit:
                    continue
                v = abs(q)
                if v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if self.level[v] == cur:
                    counter += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            lit = self.trail[idx]
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            clause = self.reason[abs(lit)]
        learnt[0] = -lit
        if len(learnt) == 1:
            back = 0
        else:
            best = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
            learnt[1], learnt[best] = learnt[best], learnt[1]
            back = self.level[abs(learnt[1])]
        self.var_inc *= 1.05
        return learnt, back

    def _bump(self, v: int) -> None:
        if not self.vsids:
            return
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.num_vars + 1)]
            heapq.heapify(self.heap)
        else:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        for lit in self.trail[start:]:
            v = abs(lit)
            self.value[v] = 0
            self.reason[v] = None
            if self.vsids:
                heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)
        self._next_hint = 1

    def _pick_branch(self) -> int:
        if self.vsids:
            while self.heap:
                _, v = heapq.heappop(self.heap)
                if self.value[v] == 0:
                    return v
            return 0
        v = self._next_hint
        while v <= self.num_vars and self.value[v] != 0:
            v += 1
        self._next_hint = v
        return v if v <= self.num_vars else 0

    def solve(self, assumptions: Sequence[int] = ()) -> SolveResult:
        start = time.perf_counter()
        before = dict(self.stats)
        status = self._search(list(assumptions))
        stats = {k: self.stats[k] - before[k] for k in self.stats}
        stats["time"] = time.perf_counter() - start
        if status == SAT:
            model = [v if self.value[v] >= 0 else -v for v in range(1, self.num_vars + 1)]
            self._check(model)
            result = SolveResult(SAT, model, stats)
        else:
            result = SolveResult(UNSAT, None, stats)
        self._cancel_until(0)
        return result

    def _check(self, model: list[int]) -> None:
        truth = set(model)
        for clause in self.original:
            if not any(l in truth for l in clause):
                raise AssertionError(f"solver returned a model violating {clause}")

    def _search(self, assumptions: list[int]) -> str:
        if self.inconsistent:
            return UNSAT
        for a in assumptions:
            self._grow(abs(a))
        self._cancel_until(0)
        self._next_hint = 1
        if self._propagate() is not None:
            self.inconsistent = True
            return UNSAT
        conflicts = 0
        while True:
            conflict = self._propagate()
            if conflict is not None:
                self.stats["conflicts"] += 1
                conflicts += 1
                if not self.trail_lim:
                    self.inconsistent = True
                    return UNSAT
                if self.conflict_limit is not None and conflicts > self.conflict_limit:
                    self._cancel_until(0)
                    raise SolverBudgetExceeded(f"conflict limit {self.conflict_limit} reached")
                learnt, back = self._analyze(conflict)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self._attach(learnt)
                    self.stats["learned"] += 1
                    self._enqueue(learnt[0], learnt)
                continue
            # assumptions occupy the first decision levels
            lit = 0
            while len(self.trail_lim) < len(assumptions):
                a = assumptions[len(self.trail_lim)]
                val = self._lit_value(a)
                if val == 1:
                    self.trail_lim.append(len(self.trail))
                elif val == -1:
                    return UNSAT
                else:
                    lit = a
                    break
            if not lit:
                v = self._pick_branch()
                if v == 0:
                    return SAT
                self.stats["decisions"] += 1
                lit = v
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)


def solve(cnf: Cnf, assumptions: Sequence[int] = (), conflict_limit: int | None = None,
          vsids: bool = False) -> SolveResult:
    return Solver(cnf, conflict_limit=conflict_limit, vsids=vsids).solve(assumptions)


@dataclass
class Enumeration:
    models: list[tuple[int, ...]]
    complete: bool
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)


def enumerate_models(cnf: Cnf, projection: Sequence[int], limit: int,
                     assumptions: Sequence[int] = (), conflict_limit: int | None = None,
                     solver: Solver | None = None) -> Enumeration:
    """Distinct models projected onto ``projection`` (variable ids).

    Each found projection is blocked with a clause over the projection only.
    ``complete`` is True when no further projected model exists; when the
    limit is reached one extra solve settles that question. A conflict-limit
    failure returns what was found so far with ``complete=False``.
    """
    projection = sorted({abs(v) for v in projection})
    if not projection:
        raise ValueError("projection must not be empty")
    if limit < 1:
        raise ValueError("limit must be at least 1")
    solver = solver or Solver(cnf, conflict_limit=conflict_limit)
    models: list[tuple[int, ...]] = []
    totals = {"solves": 0, "conflicts": 0, "decisions": 0, "propagations": 0, "time": 0.0}
    complete = False
    try:
        while True:
            res = solver.solve(assumptions)
            totals["solves"] += 1
            for k in ("conflicts", "decisions", "propagations", "time"):
                totals[k] += res.stats[k]
            if not res.sat:
                complete = True
                break
            if len(models) == limit:
                break
            proj = tuple(v if res.model[v - 1] > 0 else -v for v in projection)
            models.append(proj)
            solver.add_clause([-l for l in proj])
    except SolverBudgetExceeded:
        complete = False
    totals["budget_exceeded"] = not complete and len(models) < limit
    return Enumeration(models, complete, totals)


# -- DIMACS -------------------------------------------------------------------

def to_dimacs(cnf: Cnf, comments: Iterable[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {cnf.num_vars} {len(cnf.clauses)}")
    lines += [" ".join(str(l) for l in clause) + " 0" for clause in cnf.clauses]
    return "\n".join(lines) + "\n"


def from_dimacs(text: str) -> Cnf:
    header = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise DimacsError(f"line {lineno}: second header")
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed header {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise DimacsError(f"line {lineno}: malformed header {line!r}") from None
            if header[0] < 0 or header[1] < 0:
                raise DimacsError(f"line {lineno}: negative header counts")
            continue
        if header is None:
            raise DimacsError(f"line {lineno}: clause before header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"line {lineno}: bad literal {tok!r}") from None
            if abs(lit) > header[0]:
                raise DimacsError(f"line {lineno}: literal {lit} exceeds {header[0]} variables")
            if lit == 0:
                if not current:
                    raise DimacsError(f"line {lineno}: empty clause")
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if header is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        raise DimacsError("last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise DimacsError(f"header announces {header[1]} clauses, found {len(clauses)}")
    return Cnf(clauses, header[0])
