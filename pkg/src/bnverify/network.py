"""Discrete Bayesian network data model.

A network is a DAG of named discrete variables. Every variable carries an
ordered tuple of value labels; the index of a label is its ordinal value and
that order is what monotonicity queries reason about. One binary variable is
designated as the outcome ``Y``; every other variable is a feature.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

NORMALIZATION_TOL = 1e-9

Assignment = dict[str, int]


class NetworkError(ValueError):
    """Raised for semantically invalid networks or assignments."""


class ZeroEvidenceError(ArithmeticError):
    """The evidence has probability zero under the network."""

    def __init__(self, evidence: Mapping[str, int]):
        self.evidence = dict(evidence)
        super().__init__(f"evidence has zero probability: {self.evidence}")


@dataclass(frozen=True)
class Variable:
    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(str(v) for v in self.values))
        if len(self.values) < 2:
            raise NetworkError(f"variable {self.name!r} needs at least 2 values")
        if len(set(self.values)) != len(self.values):
            raise NetworkError(f"variable {self.name!r} has duplicate value labels")

    @property
    def cardinality(self) -> int:
        return len(self.values)

    def index(self, label: str) -> int:
        try:
            return self.values.index(label)
        except ValueError:
            raise NetworkError(f"{label!r} is not a value of {self.name!r}") from None


@dataclass(frozen=True, eq=False)
class Cpt:
    """Conditional probability table ``P(child | parents)``.

    ``probs`` has one axis per parent (declaration order) followed by the
    child axis, so ``probs[parent_values + (child_value,)]`` is a probability.
    """

    child: str
    parents: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "probs", probs)
        if probs.ndim != len(self.parents) + 1:
            raise NetworkError(f"CPT of {self.child!r} has wrong dimensionality")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise NetworkError(f"CPT of {self.child!r} has negative or non-finite entries")
        sums = probs.sum(axis=-1)
        bad = np.argwhere(np.abs(sums - 1.0) > NORMALIZATION_TOL)
        if len(bad):
            row = tuple(int(i) for i in bad[0])
            raise NetworkError(
                f"CPT row {row} of {self.child!r} sums to {sums[row]!r}, not 1"
            )

    @property
    def table(self) -> dict[tuple[int, ...], tuple[float, ...]]:
        shape = self.probs.shape[:-1]
        return {
            idx: tuple(float(p) for p in self.probs[idx])
            for idx in itertools.product(*(range(n) for n in shape))
        }

    @property
    def scope(self) -> tuple[str, ...]:
        return self.parents + (self.child,)

    def __eq__(self, other):
        if not isinstance(other, Cpt):
            return NotImplemented
        return (
            self.child == other.child
            and self.parents == other.parents
            and self.probs.shape == other.probs.shape
            and bool(np.array_equal(self.probs, other.probs))
        )

    def __hash__(self):
        return hash((self.child, self.parents, self.probs.tobytes()))


@dataclass(frozen=True)
class BayesianNetwork:
    variables: tuple[Variable, ...]
    cpts: tuple[Cpt, ...]
    outcome: str
    name: str = "unknown"
    _by_name: dict = field(init=False, repr=False, compare=False)
    _cpt_of: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "cpts", tuple(self.cpts))
        by_name = {v.name: v for v in self.variables}
        if len(by_name) != len(self.variables):
            raise NetworkError("duplicate variable names")
        object.__setattr__(self, "_by_name", by_name)

        cpt_of = {}
        for cpt in self.cpts:
            if cpt.child not in by_name:
                raise NetworkError(f"CPT for unknown variable {cpt.child!r}")
            if cpt.child in cpt_of:
                raise NetworkError(f"duplicate CPT for {cpt.child!r}")
            for p in cpt.parents:
                if p not in by_name:
                    raise NetworkError(f"unknown parent {p!r} of {cpt.child!r}")
            if len(set(cpt.parents)) != len(cpt.parents) or cpt.child in cpt.parents:
                raise NetworkError(f"bad parent list for {cpt.child!r}")
            expected = tuple(by_name[p].cardinality for p in cpt.parents)
            expected += (by_name[cpt.child].cardinality,)
            if cpt.probs.shape != expected:
                raise NetworkError(
                    f"CPT of {cpt.child!r} has shape {cpt.probs.shape}, expected {expected}"
                )
            cpt_of[cpt.child] = cpt
        missing = [v.name for v in self.variables if v.name not in cpt_of]
        if missing:
            raise NetworkError(f"missing CPT for {missing}")
        object.__setattr__(self, "_cpt_of", cpt_of)

        if self.outcome not in by_name:
            raise NetworkError(f"outcome variable {self.outcome!r} not in network")
        if by_name[self.outcome].cardinality != 2:
            raise NetworkError(f"outcome variable {self.outcome!r} must be binary")
        self.topological_order()  # raises on cycles

    # -- lookup -----------------------------------------------------------

    def __getitem__(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise NetworkError(f"unknown variable {name!r}") from None

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def cpt(self, name: str) -> Cpt:
        return self._cpt_of[name]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.name != self.outcome)

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple((p, c.child) for c in self.cpts for p in c.parents)

    def parents(self, name: str) -> tuple[str, ...]:
        return self._cpt_of[name].parents

    def children(self, name: str) -> tuple[str, ...]:
        return tuple(c.child for c in self.cpts if name in c.parents)

    def cardinality(self, name: str) -> int:
        return self[name].cardinality

    def markov_blanket(self, name: str) -> frozenset[str]:
        blanket = set(self.parents(name))
        for child in self.children(name):
            blanket.add(child)
            blanket.update(self.parents(child))
        blanket.discard(name)
        return frozenset(blanket)

    def topological_order(self) -> list[str]:
        """Kahn's algorithm with lexicographic tie-break."""
        indeg = {v: len(self.parents(v)) for v in self.names}
        kids: dict[str, list[str]] = {v: [] for v in self.names}
        for p, c in self.edges:
            kids[p].append(c)
        ready = [v for v, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in kids[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != len(self.names):
            cyclic = sorted(v for v, d in indeg.items() if d > 0)
            raise NetworkError(f"network has a cycle through {cyclic}")
        return order

    # -- summary numbers ----------------------------------------------------

    @property
    def n_parameters(self) -> int:
        """Free parameters: sum over CPTs of (card - 1) * prod(parent cards)."""
        return sum(
            (self.cardinality(c.child) - 1) * int(np.prod(c.probs.shape[:-1], dtype=int))
            for c in self.cpts
        )

    @property
    def average_degree(self) -> float:
        return 2 * len(self.edges) / len(self.variables)

    # -- assignments --------------------------------------------------------

    def check_assignment(self, assignment: Mapping[str, int], complete: bool = False) -> Assignment:
        """Validate a feature assignment and return it as a plain dict."""
        out = {}
        for name, value in assignment.items():
            if name == self.outcome:
                raise NetworkError(f"assignment must not fix the outcome {name!r}")
            card = self[name].cardinality
            if isinstance(value, (bool, np.bool_)) or not isinstance(value, (int, np.integer)):
                raise NetworkError(f"value of {name!r} must be an integer index, got {value!r}")
            if not 0 <= value < card:
                raise NetworkError(f"value {value} out of range for {name!r} (cardinality {card})")
            out[name] = int(value)
        if complete:
            missing = [f for f in self.features if f not in out]
            if missing:
                raise NetworkError(f"assignment is missing features {missing}")
        return out


def make_network(
    variables: Sequence[tuple[str, Sequence[str]]],
    cpts: Mapping[str, tuple[Sequence[str], Sequence]],
    outcome: str,
    name: str = "unknown",
) -> BayesianNetwork:
    """Convenience constructor from plain Python data.

    ``cpts`` maps a child name to ``(parents, probs)`` where ``probs`` is
    anything ``np.asarray`` accepts with shape ``parent cards + (child card,)``.
    """
    vs = [Variable(n, tuple(vals)) for n, vals in variables]
    cs = [Cpt(child, tuple(parents), np.asarray(probs, dtype=float))
          for child, (parents, probs) in cpts.items()]
    return BayesianNetwork(tuple(vs), tuple(cs), outcome, name)
