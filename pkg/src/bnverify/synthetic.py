"""Seeded random networks and queries for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .network import BayesianNetwork, Cpt, Variable
from .verifier import Rule, RuleSet, SENSES


def random_network(
    rng: np.random.Generator,
    n_features: int = 4,
    cardinality: tuple[int, int] = (2, 4),
    edge_prob: float = 0.5,
    max_parents: int = 3,
    zero_prob: float = 0.0,
    name: str = "random",
) -> BayesianNetwork:
    """Random DAG with ``n_features`` features plus a binary outcome ``Y``.

    Variables are placed in a random topological order; each earlier variable
    becomes a parent with probability ``edge_prob`` (at most ``max_parents``).
    CPT rows are drawn from a flat Dirichlet; with ``zero_prob`` > 0 some
    entries are zeroed out (rows stay normalized).
    """
    names = [f"X{i}" for i in range(n_features)]
    order = [str(n) for n in rng.permutation(names + ["Y"])]
    cards = {n: int(rng.integers(cardinality[0], cardinality[1] + 1)) for n in names}
    cards["Y"] = 2
    variables = tuple(
        Variable(n, tuple(f"v{j}" for j in range(cards[n]))) for n in sorted(cards, key=_natural)
    )
    cpts = []
    for i, child in enumerate(order):
        earlier = order[:i]
        parents = [p for p in earlier if rng.random() < edge_prob]
        if len(parents) > max_parents:
            parents = [str(p) for p in rng.choice(parents, size=max_parents, replace=False)]
        parents = sorted(parents, key=_natural)
        shape = tuple(cards[p] for p in parents)
        probs = rng.dirichlet(np.ones(cards[child]), size=shape)
        if zero_prob > 0:
            mask = rng.random(probs.shape) < zero_prob
            keep = probs.argmax(axis=-1)[..., None] == np.arange(cards[child])
            probs = np.where(mask & ~keep, 0.0, probs)
            probs = probs / probs.sum(axis=-1, keepdims=True)
        cpts.append(Cpt(child, tuple(parents), probs))
    cpts.sort(key=lambda c: _natural(c.child))
    return BayesianNetwork(variables, tuple(cpts), "Y", name)


def _natural(name: str):
    return (name == "Y", int(name[1:]) if name[1:].isdigit() else 0, name)


def random_ruleset(rng: np.random.Generator, domains: dict[str, int], max_rules: int = 3) -> RuleSet:
    features = sorted(domains)
    k = int(rng.integers(1, min(max_rules, len(features)) + 1))
    chosen = rng.choice(features, size=k, replace=False)
    rules = tuple(
        Rule(str(f), str(rng.choice(SENSES)), int(rng.integers(0, domains[f]))) for f in chosen
    )
    return RuleSet(rules, int(rng.integers(0, 2)))


def random_fmo_query(rng: np.random.Generator, domains: dict[str, int]) -> tuple[dict, str]:
    """Random ``(phi, feature)`` with ``feature`` outside ``phi``."""
    features = sorted(domains)
    wide = [f for f in features if domains[f] >= 3] or features
    feature = str(rng.choice(wide))
    others = [f for f in features if f != feature]
    k = int(rng.integers(0, len(others) + 1))
    fixed = rng.choice(others, size=k, replace=False) if k else []
    phi = {str(f): int(rng.integers(0, domains[f])) for f in fixed}
    return phi, feature
