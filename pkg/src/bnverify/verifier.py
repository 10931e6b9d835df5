"""If-then-rule and feature-monotonicity queries over an encoded model.

Both queries assert the negation of the property and ask the SAT solver for
a witness: UNSAT means the property holds, every projected model is a
counterexample.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .encoder import (
    Cnf,
    EncodedModel,
    VariableRegistry,
    assert_class,
    encode_ordinal_less,
    instantiate_copy,
    value_units,
)
from .sat import Solver, SolverBudgetExceeded, enumerate_models

log = logging.getLogger(__name__)

SENSES = (">=", "<=", "=", ">", "<")
_SENSE_ALIASES = {"==": "=", "ge": ">=", "le": "<=", "eq": "=", "gt": ">", "lt": "<",
                  "≥": ">=", "≤": "<="}


class QueryError(ValueError):
    pass


class DecodeError(RuntimeError):
    """A model does not select exactly one value per feature."""


@dataclass(frozen=True)
class Rule:
    feature: str
    sense: str
    index: int

    def __post_init__(self):
        sense = _SENSE_ALIASES.get(self.sense, self.sense)
        if sense not in SENSES:
            raise QueryError(f"unknown comparison {self.sense!r}")
        object.__setattr__(self, "sense", sense)

    def allowed(self, cardinality: int) -> list[int]:
        if not 0 <= self.index < cardinality:
            raise QueryError(f"threshold index {self.index} out of range for {self.feature!r}")
        t, d = self.index, cardinality
        return {
            ">=": list(range(t, d)),
            "<=": list(range(0, t + 1)),
            "=": [t],
            ">": list(range(t + 1, d)),
            "<": list(range(0, t)),
        }[self.sense]

    def __str__(self):
        return f"{self.feature} {self.sense} {self.index}"


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    outcome_class: int

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if self.outcome_class not in (0, 1):
            raise QueryError("outcome class must be 0 or 1")
        seen = set()
        for r in self.rules:
            if r.feature in seen:
                raise QueryError(f"more than one rule on {r.feature!r}; merge them first")
            seen.add(r.feature)


@dataclass
class Verdict:
    kind: str
    holds: bool
    status: dict[str, str]
    counterexamples: list = field(default_factory=list)
    complete: bool = True
    vacuous: bool = False
    warnings: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    query: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "holds": self.holds,
            "status": dict(self.status),
            "vacuous": self.vacuous,
            "complete": self.complete,
            "warnings": list(self.warnings),
            "counterexamples": self.counterexamples,
            "stats": self.stats,
            "query": self.query,
        }


def _clauses_to_solver(cnf: Cnf, extra: Iterable[Sequence[int]], conflict_limit) -> Solver:
    solver = Solver(cnf, conflict_limit=conflict_limit)
    for c in extra:
        solver.add_clause(c)
    return solver


def decode_model(model: Iterable[int], registry: VariableRegistry, domains: Mapping[str, int] | None = None):
    """Feature assignment selected by the true value literals of ``model``.

    Returns one dict, or a dict per copy tag when the registry is tagged.
    Every feature must have exactly one true value literal.
    """
    chosen: dict[str, dict[str, list[int]]] = {}
    for var, role in registry.items():
        if role.kind == "value":
            chosen.setdefault(role.tag, {}).setdefault(role.key[0], [])
    for lit in model:
        if lit <= 0:
            continue
        try:
            role = registry.role(lit)
        except KeyError:
            continue
        if role.kind == "value":
            chosen[role.tag][role.key[0]].append(role.key[1])
    out = {}
    for tag, features in chosen.items():
        assignment = {}
        for f, values in features.items():
            if domains is not None and f not in domains:
                continue
            if len(values) != 1:
                raise DecodeError(f"feature {f!r}{' in ' + tag if tag else ''} has "
                                  f"{len(values)} true value literals")
            assignment[f] = values[0]
        out[tag] = assignment
    if set(out) == {""}:
        return out[""]
    return out


def itr_clauses(model: EncodedModel, rules: RuleSet) -> list | None:
    """Clauses added to the model for an ITR query, or None if the box is empty.

    Each rule contributes one clause: the disjunction of the value literals
    its comparison admits. The undesired class is asserted on the sinks.
    """
    extra = []
    for r in rules.rules:
        if r.feature not in model.domains:
            raise QueryError(f"unknown feature {r.feature!r}")
        allowed = r.allowed(model.domains[r.feature])
        if not allowed:
            return None
        extra.append(tuple(model.registry.value(r.feature, j) for j in allowed))
    return extra + assert_class(model, 1 - rules.outcome_class)


def verify_itr(model: EncodedModel, rules: RuleSet, max_counterexamples: int = 10,
               conflict_limit: int | None = None) -> Verdict:
    """Does every input inside the rule box get ``rules.outcome_class``?"""
    query = {"type": "itr", "rules": [{"feature": r.feature, "op": r.sense, "index": r.index}
                                      for r in rules.rules], "class": rules.outcome_class}
    extra = itr_clauses(model, rules)
    if extra is None:
        empty = next(r for r in rules.rules if not r.allowed(model.domains[r.feature]))
        return Verdict("itr", True, {"itr": "VACUOUS"}, vacuous=True, query=query,
                       warnings=[f"rule '{empty}' admits no value; the query holds vacuously"])
    solver = _clauses_to_solver(model.cnf, extra, conflict_limit)
    return _run("itr", "itr", model, solver, max_counterexamples, query, _decode_itr)


def _decode_itr(model, proj):
    return decode_model(proj, model.registry, model.domains)


def _run(kind, sub, model, solver, max_counterexamples, query, decode):
    projection = model.value_literals() if kind == "itr" else [
        v for tag in ("M1", "M2", "M3") for v in model.value_literals(tag)]
    try:
        first = solver.solve()
    except SolverBudgetExceeded as exc:
        raise QueryError(f"{kind} query undecided: {exc}") from None
    stats = dict(first.stats)
    if not first.sat:
        return Verdict(kind, True, {sub: "UNSAT"}, stats=stats, query=query)
    cexs, complete = [], False
    if max_counterexamples > 0:
        enum = enumerate_models(model.cnf, projection, max_counterexamples, solver=solver)
        cexs = [decode(model, m) for m in enum.models]
        complete = enum.complete
        stats["enumeration"] = enum.stats
    return Verdict(kind, False, {sub: "SAT"}, cexs, complete, stats=stats, query=query)


def fmo_formula(model: EncodedModel, phi: Mapping[str, int], feature: str,
                tie_free_features: bool = True) -> EncodedModel:
    """Three tagged copies with ``phi``, ordering gates and optional ties."""
    n = model.cnf.num_vars
    copies = [instantiate_copy(model, tag, offset=i * n) for i, tag in enumerate(("M1", "M2", "M3"))]
    reg = VariableRegistry()
    clauses = []
    for c in copies:
        reg.merge(c.registry)
        clauses += c.cnf.clauses
    reg.num_vars = max(reg.num_vars, 3 * n)
    for c in copies:
        clauses += value_units(c, phi, c.meta["copy_tag"])
    blocks = [reg.value_block(feature, tag) for tag in ("M1", "M2", "M3")]
    for lo, hi, tag in ((0, 1, "lt12"), (1, 2, "lt23")):
        gate_clauses, gate = encode_ordinal_less(blocks[lo], blocks[hi], reg, tag)
        clauses += gate_clauses
        clauses.append((gate,))
    if tie_free_features:
        for f in model.domains:
            if f == feature or f in phi:
                continue
            for j in range(model.domains[f]):
                a, b, c = (reg.value(f, j, t) for t in ("M1", "M2", "M3"))
                clauses += [(-a, b), (-b, a), (-b, c), (-c, b)]
    combined = EncodedModel(Cnf(clauses, reg.num_vars), reg, dict(model.domains),
                            dict(model.labels), dict(model.meta))
    return combined


PATTERNS = {"LHL": (0, 1, 0), "HLH": (1, 0, 1)}


def pattern_clauses(combined: EncodedModel, pattern: str) -> list:
    """Sink units forcing the class pattern across copies M1, M2, M3."""
    out = []
    for tag, cls in zip(("M1", "M2", "M3"), PATTERNS[pattern]):
        out += assert_class(combined, cls, tag)
    return out


def verify_fmo(model: EncodedModel, phi: Mapping[str, int], feature: str,
               tie_free_features: bool = True, max_counterexamples: int = 10,
               conflict_limit: int | None = None) -> Verdict:
    """Is the class monotone along ``feature`` once ``phi`` is fixed?

    Two sub-queries look for three increasing values of ``feature`` whose
    classes read low-high-low (LHL) or high-low-high (HLH); the feature is
    monotone when both are UNSAT.
    """
    phi = dict(phi)
    query = {"type": "fmo", "phi": phi, "feature": feature, "tie_free": tie_free_features}
    if feature not in model.domains:
        raise QueryError(f"unknown feature {feature!r}")
    if feature in phi:
        raise QueryError(f"feature {feature!r} is fixed by the partial assignment")
    for f, v in phi.items():
        if f not in model.domains:
            raise QueryError(f"unknown feature {f!r} in partial assignment")
        if not 0 <= v < model.domains[f]:
            raise QueryError(f"value {v} out of range for {f!r}")
    if model.domains[feature] < 3:
        return Verdict("fmo", True, {"LHL": "VACUOUS", "HLH": "VACUOUS"}, vacuous=True,
                       warnings=[f"{feature!r} has fewer than 3 values; no triple exists"],
                       query=query)

    combined = fmo_formula(model, phi, feature, tie_free_features)
    status, cexs, stats = {}, [], {}
    complete = True
    for pattern in PATTERNS:
        extra = pattern_clauses(combined, pattern)
        solver = _clauses_to_solver(combined.cnf, extra, conflict_limit)

        def decode(m, proj, pattern=pattern):
            per_copy = decode_model(proj, m.registry, m.domains)
            return {"pattern": pattern,
                    "assignments": [per_copy[t] for t in ("M1", "M2", "M3")]}

        v = _run("fmo", pattern, combined, solver, max_counterexamples, query, decode)
        status[pattern] = v.status[pattern]
        cexs += v.counterexamples
        stats[pattern] = v.stats
        complete &= v.complete or v.holds
    holds = all(s == "UNSAT" for s in status.values())
    return Verdict("fmo", holds, status, cexs, complete if not holds else True,
                   stats=stats, query=query)


# -- query files ----------------------------------------------------------------

def _value_index(model: EncodedModel, feature: str, value) -> int:
    if isinstance(value, bool):
        raise QueryError(f"bad value {value!r} for {feature!r}")
    if isinstance(value, int):
        return value
    labels = model.labels.get(feature, ())
    if isinstance(value, str) and value in labels:
        return labels.index(value)
    raise QueryError(f"unknown value {value!r} for {feature!r}")


def parse_query(data: Mapping, model: EncodedModel) -> dict:
    """Validate one query document and return keyword arguments for it."""
    if not isinstance(data, Mapping):
        raise QueryError("query must be a JSON object")
    kind = data.get("type")
    try:
        if kind == "itr":
            rules = []
            for r in data["rules"]:
                f = r["feature"]
                if f not in model.domains:
                    raise QueryError(f"unknown feature {f!r}")
                rules.append(Rule(f, r.get("op", ">="), _value_index(model, f, r["index"])))
            return {"type": "itr", "rules": RuleSet(tuple(rules), int(data["class"]))}
        if kind == "fmo":
            phi = {f: _value_index(model, f, v) for f, v in dict(data.get("phi", {})).items()}
            return {"type": "fmo", "phi": phi, "feature": data["feature"],
                    "tie_free": bool(data.get("tie_free", True))}
    except (KeyError, TypeError) as exc:
        raise QueryError(f"malformed {kind} query: missing {exc}") from None
    raise QueryError(f"unknown query type {kind!r}")


def load_queries(text: str, model: EncodedModel) -> list[dict]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QueryError(f"invalid JSON: {exc}") from None
    if isinstance(data, Mapping) and "queries" in data:
        data = data["queries"]
    if isinstance(data, Mapping):
        data = [data]
    if not isinstance(data, list) or not data:
        raise QueryError("query file must hold a query object or a non-empty list of them")
    return [parse_query(q, model) for q in data]


def run_query(model: EncodedModel, query: dict, max_counterexamples: int = 10,
              conflict_limit: int | None = None) -> Verdict:
    if query["type"] == "itr":
        return verify_itr(model, query["rules"], max_counterexamples, conflict_limit)
    return verify_fmo(model, query["phi"], query["feature"], query["tie_free"],
                      max_counterexamples, conflict_limit)


def render_text(verdicts: Sequence[Verdict], labels: Mapping[str, Sequence[str]] | None = None) -> str:
    """Aligned plain-text report of verdicts and their counterexamples."""
    labels = labels or {}

    def show(assignment):
        return ", ".join(
            f"{f}={labels[f][v] if f in labels else v}" for f, v in sorted(assignment.items()))

    lines = []
    for i, v in enumerate(verdicts):
        verdict = "HOLDS" if v.holds else "VIOLATED"
        if v.vacuous:
            verdict += " (vacuous)"
        status = " ".join(f"{k}={s}" for k, s in v.status.items())
        lines.append(f"[{i}] {v.kind.upper():<4} {verdict:<18} {status}")
        for w in v.warnings:
            lines.append(f"      warning: {w}")
        for j, cex in enumerate(v.counterexamples):
            if v.kind == "itr":
                lines.append(f"      cex {j:<3} {show(cex)}")
            else:
                f = v.query["feature"]
                vals = [a[f] for a in cex["assignments"]]
                lines.append(f"      cex {j:<3} {cex['pattern']} {f}={vals} | {show(cex['assignments'][1])}")
        if not v.holds and not v.complete:
            lines.append("      (more counterexamples exist)")
    return "\n".join(lines) + "\n"
