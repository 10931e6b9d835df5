"""Compile a network's thresholded decision function into a reduced MDD."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .inference import check_threshold, decision_grid, relevant_features
from .io import network_hash
from .mdd import FALSE_SINK, SINKS, TRUE_SINK, Mdd, Node, canonicalize, reduce
from .network import BayesianNetwork, NetworkError, ZeroEvidenceError

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 2 ** 22


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class CompilerConfig:
    threshold: float = 0.5
    ordering: tuple[str, ...] | None = None
    zero_evidence_class: int | str = "error"
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        check_threshold(self.threshold)
        if self.zero_evidence_class not in (0, 1, "error"):
            raise ValueError("zero_evidence_class must be 0, 1 or 'error'")
        if self.budget < 1:
            raise ValueError("budget must be positive")
        if self.ordering is not None:
            object.__setattr__(self, "ordering", tuple(self.ordering))

    @property
    def ordering_policy(self) -> str:
        return "topological" if self.ordering is None else "given-list"


def feature_ordering(net: BayesianNetwork, given: Sequence[str] | None = None) -> list[str]:
    if given is None:
        return [v for v in net.topological_order() if v != net.outcome]
    given = list(given)
    if sorted(given) != sorted(net.features) or len(set(given)) != len(given):
        raise NetworkError(f"ordering must list every feature exactly once; got {given}")
    return given


def compile_network(net: BayesianNetwork, cfg: CompilerConfig | None = None) -> Mdd:
    """Reduced ordered MDD deciding ``classify(net, ., cfg.threshold)``.

    Only the features that can affect the decision are enumerated (see
    ``relevant_features``); all others are reported as pruned. The decision
    table over the relevant box is folded bottom-up into hash-consed nodes
    and then passed through ``reduce``.
    """
    cfg = cfg or CompilerConfig()
    ordering = feature_ordering(net, cfg.ordering)
    relevant = relevant_features(net)
    axes = [f for f in ordering if f in relevant]
    size = int(np.prod([net.cardinality(a) for a in axes], dtype=object)) if axes else 1
    if size > cfg.budget:
        raise BudgetExceeded(
            f"{size} assignments over {len(axes)} relevant features exceed the budget of {cfg.budget}"
        )
    log.debug("compiling %s over %d relevant features (%d assignments)", net.name, len(axes), size)

    post, zero = decision_grid(net, axes, cfg.threshold)
    decision = np.where(post >= cfg.threshold, TRUE_SINK, FALSE_SINK)
    if zero.any():
        if cfg.zero_evidence_class == "error":
            where = np.argwhere(zero)[0]
            raise ZeroEvidenceError({a: int(i) for a, i in zip(axes, where)})
        decision[zero] = cfg.zero_evidence_class

    # fold the table level by level, last feature first
    nodes: dict[int, Node] = {}
    unique: dict[tuple, int] = {}
    ids = decision
    for level in range(len(axes) - 1, -1, -1):
        rows = ids.reshape(-1, ids.shape[-1])
        uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
        mapped = np.empty(len(uniq), dtype=np.int64)
        for i, row in enumerate(uniq):
            kids = tuple(int(c) for c in row)
            if kids[0] in SINKS and len(set(kids)) == 1:
                mapped[i] = kids[0]
                continue
            key = (level, kids)
            if key not in unique:
                unique[key] = len(nodes) + 2
                nodes[unique[key]] = Node(level, kids)
            mapped[i] = unique[key]
        ids = mapped[inverse.reshape(-1)].reshape(ids.shape[:-1])
    root = int(ids)

    pruned = tuple(f for f in ordering if f not in relevant)
    meta = {
        "network": net.name,
        "network_hash": network_hash(net),
        "outcome": net.outcome,
        "threshold": cfg.threshold,
        "ordering_policy": cfg.ordering_policy,
        "zero_evidence_class": cfg.zero_evidence_class,
    }
    raw = Mdd(
        tuple(axes), nodes, root,
        domains={f: net.cardinality(f) for f in ordering},
        pruned=pruned,
        labels={f: net[f].values for f in ordering},
        meta=meta,
    )
    return reduce(canonicalize(raw))
