"""Shared fixtures and an inference oracle that shares no code with the library.

The oracle multiplies every CPT into the full joint table with plain numpy
broadcasting, then reads the outcome posterior off that table.
"""

import itertools

import numpy as np
import pytest

from bnverify.synthetic import random_network


def joint_table(net):
    """Full joint distribution, axes in ``net.names`` order."""
    names = list(net.names)
    shape = [net.cardinality(n) for n in names]
    joint = np.ones(shape)
    for cpt in net.cpts:
        scope = list(cpt.parents) + [cpt.child]
        arr = cpt.probs
        # move the CPT axes into joint-table order, then broadcast
        order = sorted(range(len(scope)), key=lambda i: names.index(scope[i]))
        arr = np.transpose(arr, order)
        view = [1] * len(names)
        for n in scope:
            view[names.index(n)] = shape[names.index(n)]
        joint = joint * arr.reshape(view)
    return joint


def oracle_posterior(net):
    """``P(Y=1 | features)`` over the feature box (axes in ``net.features`` order).

    NaN marks zero-probability evidence.
    """
    names = list(net.names)
    joint = np.moveaxis(joint_table(net), names.index(net.outcome), -1)
    total = joint.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, joint[..., 1] / np.where(total > 0, total, 1), np.nan)


def oracle_decisions(net, threshold=0.5, zero_class=None):
    """Class per complete assignment; ``-1`` for zero evidence unless ``zero_class`` is set."""
    post = oracle_posterior(net)
    out = np.where(post >= threshold, 1, 0)
    out = np.where(np.isnan(post), -1 if zero_class is None else zero_class, out)
    return out


def assignments(net):
    """Every complete feature assignment as a dict, in row-major order."""
    feats = list(net.features)
    for combo in itertools.product(*(range(net.cardinality(f)) for f in feats)):
        yield dict(zip(feats, combo))


def make_corpus(seed, count, zero_prob=0.0):
    rng = np.random.default_rng(seed)
    nets = []
    for i in range(count):
        nets.append(random_network(rng, n_features=int(rng.integers(3, 7)), cardinality=(2, 4),
                                   edge_prob=0.5, zero_prob=zero_prob, name=f"rand{i}"))
    return nets


@pytest.fixture(scope="session")
def small_corpus():
    return make_corpus(1234, 25)


def path_check(mdd, model, net):
    """Count assignments whose projected node/edge/sink model is unique and reaches the MDD's sink.

    One incremental solver per network; each uniqueness probe adds a blocking
    clause guarded by a fresh activation literal, retired right after.
    """
    from bnverify.sat import Solver

    proj = model.registry.ids(["root", "node", "edge", "true", "false"])
    solver = Solver(model.cnf)
    fresh = model.cnf.num_vars
    good = total = 0
    t_lit = model.registry.sink(1)
    for a in assignments(net):
        total += 1
        units = [model.registry.value(f, j) for f, j in a.items()]
        first = solver.solve(units)
        if not first.sat:
            continue
        chosen = [v if first.value(v) else -v for v in proj]
        fresh += 1
        solver.add_clause([-fresh] + [-l for l in chosen])
        second = solver.solve(units + [fresh])
        solver.add_clause([-fresh])
        sink = 1 if first.value(t_lit) else 0
        if not second.sat and sink == mdd.evaluate(a):
            good += 1
    return good, total


def box_slices(net, rules):
    """Index tuple selecting the rule box in a decision table over ``net.features``."""
    idx = []
    for f in net.features:
        rule = next((r for r in rules.rules if r.feature == f), None)
        idx.append(slice(None) if rule is None else rule.allowed(net.cardinality(f)))
    return idx


def itr_oracle(net, decisions, rules):
    """True iff every input in the box gets ``rules.outcome_class``."""
    sub = decisions
    for axis, sel in enumerate(box_slices(net, rules)):
        sub = np.take(sub, sel if not isinstance(sel, slice) else range(sub.shape[axis]), axis=axis)
    return bool(np.all(sub == rules.outcome_class))


PATTERN_CLASSES = {"LHL": (0, 1, 0), "HLH": (1, 0, 1)}


def fmo_oracle(net, decisions, phi, feature, tie_free=True):
    """``{pattern: exists}`` by scanning every increasing value triple of ``feature``."""
    feats = list(net.features)
    sub = decisions
    for f, v in phi.items():
        sub = np.take(sub, [v], axis=feats.index(f))
    x = feats.index(feature)
    sub = np.moveaxis(sub, x, 0).reshape(net.cardinality(feature), -1)  # rows: x value
    d = sub.shape[0]
    out = {}
    for name, cls in PATTERN_CLASSES.items():
        found = False
        for j, k, l in itertools.combinations(range(d), 3):
            if tie_free:
                hit = (sub[j] == cls[0]) & (sub[k] == cls[1]) & (sub[l] == cls[2])
                found = bool(hit.any())
            else:
                found = bool((sub[j] == cls[0]).any() and (sub[k] == cls[1]).any()
                             and (sub[l] == cls[2]).any())
            if found:
                break
        out[name] = found
    return out


def truth_table(clauses, n):
    """Bitmask over all 2**n assignments; bit ``k`` set iff assignment ``k`` satisfies every clause.

    Variable ``v`` is true in assignment ``k`` iff bit ``v-1`` of ``k`` is set.
    """
    size = 1 << n
    full = (1 << size) - 1
    cols = []
    for v in range(n):
        block = ((1 << (1 << v)) - 1) << (1 << v)       # 2**v zeros then 2**v ones
        col, width = block, 1 << (v + 1)
        while width < size:                              # tile the period by doubling
            col |= col << width
            width <<= 1
        cols.append(col & full)
    sat = full
    for c in clauses:
        cl = 0
        for lit in c:
            col = cols[abs(lit) - 1]
            cl |= col if lit > 0 else full ^ col
        sat &= cl
    return sat


def random_cnf(rng, n, m, kmax=4):
    clauses = []
    for _ in range(m):
        k = int(rng.integers(1, kmax + 1))
        vs = rng.choice(np.arange(1, n + 1), size=min(k, n), replace=False)
        clauses.append(tuple(int(v) * (1 if rng.random() < 0.5 else -1) for v in vs))
    return clauses


def satisfies(model, clauses):
    true = {l for l in model}
    return all(any(l in true for l in c) for c in clauses)


# -- acceptance summary -------------------------------------------------------------

ACCEPTANCE_LINES = []


def report_criterion(line):
    """Record a PASS/FAIL line; echoed in the terminal summary and printed immediately."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
