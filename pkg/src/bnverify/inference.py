"""Exact posterior of the outcome variable by variable elimination.

Only what sink labelling needs is exposed: ``posterior`` and ``classify`` for
complete feature evidence, plus ``decision_grid`` which evaluates the same
arithmetic over a whole box of assignments at once. Both paths multiply the
outcome factors in the same order, so their results agree bit for bit and the
compiled diagram cannot disagree with ``classify`` through rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .network import BayesianNetwork, NetworkError, ZeroEvidenceError


@dataclass(frozen=True)
class Factor:
    scope: tuple[str, ...]
    values: np.ndarray

    def reduce(self, evidence: Mapping[str, int]) -> "Factor":
        idx = tuple(evidence.get(v, slice(None)) for v in self.scope)
        keep = tuple(v for v in self.scope if v not in evidence)
        return Factor(keep, self.values[idx])

    def multiply(self, other: "Factor") -> "Factor":
        scope = self.scope + tuple(v for v in other.scope if v not in self.scope)
        letters = {v: chr(97 + i) for i, v in enumerate(scope)}
        spec = "{},{}->{}".format(
            "".join(letters[v] for v in self.scope),
            "".join(letters[v] for v in other.scope),
            "".join(letters[v] for v in scope),
        )
        return Factor(scope, np.einsum(spec, self.values, other.values))

    def sum_out(self, var: str) -> "Factor":
        axis = self.scope.index(var)
        return Factor(self.scope[:axis] + self.scope[axis + 1:], self.values.sum(axis=axis))


def min_fill_order(factors: Sequence[Factor], hidden: set[str]) -> list[str]:
    """Greedy min-fill elimination order, ties broken by variable name."""
    adj: dict[str, set[str]] = {v: set() for v in hidden}
    for f in factors:
        for v in f.scope:
            adj.setdefault(v, set()).update(u for u in f.scope if u != v)
    remaining = set(hidden)
    order = []
    while remaining:
        def fill(v):
            nbrs = sorted(adj[v])
            return sum(1 for i, a in enumerate(nbrs) for b in nbrs[i + 1:] if b not in adj[a])
        v = min(sorted(remaining), key=fill)
        nbrs = adj.pop(v)
        for a in nbrs:
            adj[a].discard(v)
            adj[a].update(nbrs - {a})
        remaining.discard(v)
        order.append(v)
    return order


def _eliminate(net: BayesianNetwork, evidence: Mapping[str, int]) -> np.ndarray:
    """Unnormalized ``P(Y, evidence)`` over the outcome values.

    Factors that lose their whole scope to the evidence are constants; they
    cancel in the normalization and are only checked for zero.
    """
    factors = []
    for cpt in sorted(net.cpts, key=lambda c: c.child):
        f = Factor(cpt.scope, cpt.probs).reduce(evidence)
        if f.scope:
            factors.append(f)
        elif f.values == 0.0:
            raise ZeroEvidenceError(evidence)
    hidden = {v for v in net.names if v not in evidence and v != net.outcome}
    for var in min_fill_order(factors, hidden):
        touching = [f for f in factors if var in f.scope]
        factors = [f for f in factors if var not in f.scope]
        prod = touching[0]
        for f in touching[1:]:
            prod = prod.multiply(f)
        factors.append(prod.sum_out(var))
    joint = np.ones(2)
    for f in factors:
        if f.scope:
            joint = joint * f.values
        elif f.values == 0.0:
            raise ZeroEvidenceError(evidence)
    return joint


def posterior(net: BayesianNetwork, evidence: Mapping[str, int]) -> float:
    """Exact ``P(Y = 1 | evidence)`` for evidence over every feature."""
    evidence = net.check_assignment(evidence, complete=True)
    joint = _eliminate(net, evidence)
    total = joint[0] + joint[1]
    if total == 0.0:
        raise ZeroEvidenceError(evidence)
    return float(joint[1] / total)


def classify(net: BayesianNetwork, evidence: Mapping[str, int], threshold: float = 0.5) -> int:
    """Class 1 iff the posterior reaches the threshold (ties go to 1)."""
    check_threshold(threshold)
    return int(posterior(net, evidence) >= threshold)


def check_threshold(threshold: float) -> None:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold!r}")


def decision_grid(
    net: BayesianNetwork,
    axes: Sequence[str],
    threshold: float = 0.5,
    fixed: Mapping[str, int] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior and zero-evidence mask over the box spanned by ``axes``.

    Every feature not in ``axes`` is taken from ``fixed`` (default value 0).
    Returns ``(posterior, zero)`` arrays of shape ``[card(a) for a in axes]``;
    ``posterior`` is NaN wherever ``zero`` is set.
    """
    check_threshold(threshold)
    fixed = dict(fixed or {})
    shape = tuple(net.cardinality(a) for a in axes)
    grids = dict(zip(axes, np.indices(shape))) if axes else {}
    for f in net.features:
        if f not in grids:
            grids[f] = np.full(shape, fixed.get(f, 0), dtype=int)
    for a in axes:
        if a == net.outcome or a not in net:
            raise NetworkError(f"{a!r} is not a feature")

    zero = np.zeros(shape, dtype=bool)
    joint = np.ones(shape + (2,))
    y = net.outcome
    for cpt in sorted(net.cpts, key=lambda c: c.child):
        if y in cpt.scope:
            idx = []
            for v in cpt.scope:
                idx.append(np.arange(2) if v == y else grids[v][..., None])
            joint = joint * cpt.probs[tuple(idx)]
        else:
            zero |= cpt.probs[tuple(grids[v] for v in cpt.scope)] == 0.0
    total = joint[..., 0] + joint[..., 1]
    zero |= total == 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        post = np.where(zero, np.nan, joint[..., 1] / total)
    return post, zero


def relevant_features(net: BayesianNetwork) -> frozenset[str]:
    """Features that can influence the thresholded decision.

    With every feature observed, the posterior depends only on the outcome's
    Markov blanket. Zero-probability evidence additionally depends on any
    CPT that contains a zero entry, so those scopes are kept as well.
    """
    keep = set(net.markov_blanket(net.outcome))
    for cpt in net.cpts:
        if net.outcome not in cpt.scope and np.any(cpt.probs == 0.0):
            keep.update(cpt.scope)
    keep.discard(net.outcome)
    return frozenset(keep)
