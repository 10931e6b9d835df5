"""CNF encoding of a decision diagram and the literal registry behind it.

Clause families per internal node ``v`` on feature ``f`` with edges ``e_j``
to children ``c_j`` (value literal ``x_j``):

    T1  -v | e_0 | ... | e_{d-1}
    T2  -e_j | v
    T3  -e_j | c_j
    T4  -e_j | x_j
    T5  -c_j | -x_j | -v | e_j
    P1  -v | -x_j | e_j
    P2  -w | (edges entering w)            every node and sink except the root
    P3  -x_j | (level edges labelled j)   levels no path can bypass
    P4  exactly one node per level         ALO only on unbypassable levels

plus the root unit ``rho``, exactly-one over every feature's value literals
and ``-T | -F``. Sink literals are never fixed here; ``assert_class`` adds
them per query.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

from .mdd import FALSE_SINK, SINKS, TRUE_SINK, Mdd

Clause = tuple[int, ...]


class EncodingError(ValueError):
    pass


class Role(NamedTuple):
    kind: str           # root | node | edge | value | true | false | aux
    key: tuple = ()
    tag: str = ""

    def __str__(self):
        head = f"{self.tag}:" if self.tag else ""
        if self.kind == "value":
            return f"{head}value {self.key[0]}={self.key[1]}"
        if self.kind == "edge":
            return f"{head}edge {self.key[0]}:{self.key[1]}"
        if self.kind == "node":
            return f"{head}node {self.key[0]}"
        if self.kind == "aux":
            return f"{head}aux {'/'.join(str(k) for k in self.key)}"
        return f"{head}{self.kind}"


class VariableRegistry:
    """Bijection between propositional variable ids and semantic roles."""

    def __init__(self):
        self._role: dict[int, Role] = {}
        self._id: dict[Role, int] = {}
        self.num_vars = 0

    def add(self, role: Role, var: int | None = None) -> int:
        if role in self._id:
            raise EncodingError(f"role {role} registered twice")
        if var is None:
            var = self.num_vars + 1
        if var < 1 or var in self._role:
            raise EncodingError(f"variable id {var} unavailable")
        self._role[var] = role
        self._id[role] = var
        self.num_vars = max(self.num_vars, var)
        return var

    def aux(self, *key, tag: str = "") -> int:
        return self.add(Role("aux", tuple(key), tag))

    def __getitem__(self, role: Role) -> int:
        return self._id[role]

    def get(self, role: Role, default=None):
        return self._id.get(role, default)

    def role(self, var: int) -> Role:
        return self._role[abs(var)]

    def __contains__(self, role) -> bool:
        return role in self._id

    def __len__(self):
        return len(self._role)

    def items(self):
        return sorted(self._role.items())

    def value(self, feature: str, j: int, tag: str = "") -> int:
        return self._id[Role("value", (feature, j), tag)]

    def value_block(self, feature: str, tag: str = "") -> list[int]:
        out = []
        for j in itertools.count():
            var = self._id.get(Role("value", (feature, j), tag))
            if var is None:
                break
            out.append(var)
        if not out:
            raise EncodingError(f"no value literals for feature {feature!r}")
        return out

    def sink(self, cls: int, tag: str = "") -> int:
        return self._id[Role("true" if cls else "false", (), tag)]

    def ids(self, kinds: Iterable[str], tag: str | None = None) -> list[int]:
        kinds = set(kinds)
        return [v for v, r in self.items() if r.kind in kinds and (tag is None or r.tag == tag)]

    @property
    def tags(self) -> set[str]:
        return {r.tag for r in self._role.values()}

    def retagged(self, tag: str, offset: int) -> "VariableRegistry":
        out = VariableRegistry()
        for var, r in self.items():
            out.add(Role(r.kind, r.key, f"{r.tag}.{tag}" if r.tag else tag), var + offset)
        return out

    def merge(self, other: "VariableRegistry") -> None:
        for var, r in other.items():
            self.add(r, var)

    def to_list(self) -> list:
        return [[var, r.kind, list(r.key), r.tag] for var, r in self.items()]

    @classmethod
    def from_list(cls, rows) -> "VariableRegistry":
        reg = cls()
        for var, kind, key, tag in rows:
            reg.add(Role(kind, tuple(key), tag), int(var))
        return reg


@dataclass
class Cnf:
    clauses: list[Clause] = field(default_factory=list)
    num_vars: int = 0

    def __post_init__(self):
        self.clauses = [tuple(int(lit) for lit in c) for c in self.clauses]
        for c in self.clauses:
            self._check(c)

    def _check(self, clause: Clause):
        if not clause:
            raise EncodingError("empty clause")
        for lit in clause:
            if lit == 0 or abs(lit) > self.num_vars:
                raise EncodingError(f"literal {lit} outside 1..{self.num_vars}")

    def add(self, clause: Iterable[int]) -> None:
        clause = tuple(int(lit) for lit in clause)
        self._check(clause)
        self.clauses.append(clause)

    def extend(self, clauses: Iterable[Iterable[int]]) -> None:
        for c in clauses:
            self.add(c)

    def copy(self) -> "Cnf":
        return Cnf(list(self.clauses), self.num_vars)

    def __len__(self):
        return len(self.clauses)


def exactly_one(lits: Sequence[int], at_least: bool = True) -> list[Clause]:
    """Pairwise at-most-one, optionally with the at-least-one clause."""
    out = [tuple(lits)] if at_least else []
    out += [(-a, -b) for a, b in itertools.combinations(lits, 2)]
    return out


@dataclass
class EncodedModel:
    cnf: Cnf
    registry: VariableRegistry
    domains: dict[str, int]
    labels: dict[str, tuple[str, ...]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def features(self) -> list[str]:
        return list(self.domains)

    def value_literals(self, tag: str = "") -> list[int]:
        return [v for f in self.domains for v in self.registry.value_block(f, tag)]

    def to_dict(self) -> dict:
        return {
            "num_vars": self.cnf.num_vars,
            "clauses": [list(c) for c in self.cnf.clauses],
            "registry": self.registry.to_list(),
            "domains": [[f, d] for f, d in self.domains.items()],
            "labels": {k: list(v) for k, v in self.labels.items()},
            "meta": dict(self.meta),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "EncodedModel":
        try:
            reg = VariableRegistry.from_list(data["registry"])
            cnf = Cnf([tuple(c) for c in data["clauses"]], int(data["num_vars"]))
            domains = data["domains"]
            pairs = domains.items() if isinstance(domains, dict) else domains
            return cls(cnf, reg, {k: int(v) for k, v in pairs},
                       {k: tuple(v) for k, v in data.get("labels", {}).items()},
                       dict(data.get("meta", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise EncodingError(f"malformed encoded model: {exc!r}") from None

    @classmethod
    def from_json(cls, text: str) -> "EncodedModel":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise EncodingError(f"invalid JSON: {exc}") from None

    def to_dimacs(self, extra: Sequence[Clause] = ()) -> str:
        from .sat import to_dimacs

        comments = [f"var {var} {role}" for var, role in self.registry.items()]
        if self.meta:
            comments.insert(0, "meta " + json.dumps(self.meta, sort_keys=True))
        return to_dimacs(Cnf(self.cnf.clauses + list(extra), self.cnf.num_vars), comments)


def encode(mdd: Mdd) -> EncodedModel:
    """Encode a reduced ordered diagram as CNF."""
    reg = VariableRegistry()
    levels = mdd.levels
    constant = mdd.is_constant

    def node_lit(nid):
        if nid == TRUE_SINK:
            return reg.sink(1)
        if nid == FALSE_SINK:
            return reg.sink(0)
        if nid == mdd.root:
            return reg[Role("root")]
        return reg[Role("node", (nid,))]

    # allocation order: nodes, edges, values, sinks
    if constant:
        reg.add(Role("root"))
    for nid in sorted(mdd.nodes):
        reg.add(Role("root") if nid == mdd.root else Role("node", (nid,)))
    for nid, j, _ in mdd.edges():
        reg.add(Role("edge", (nid, j)))
    for f in mdd.features:
        for j in range(mdd.domains[f]):
            reg.add(Role("value", (f, j)))
    reg.add(Role("true"))
    reg.add(Role("false"))

    cnf = Cnf(num_vars=reg.num_vars)
    rho = reg[Role("root")]
    cnf.add((rho,))
    incoming: dict[int, list[int]] = {}

    for nid in sorted(mdd.nodes):
        node = mdd.nodes[nid]
        feature = mdd.ordering[node.level]
        v = node_lit(nid)
        edges = [reg[Role("edge", (nid, j))] for j in range(len(node.children))]
        cnf.add((-v, *edges))                                    # T1
        for j, child in enumerate(node.children):
            e, c, x = edges[j], node_lit(child), reg.value(feature, j)
            cnf.add((-e, v))                                     # T2
            cnf.add((-e, c))                                     # T3
            cnf.add((-e, x))                                     # T4
            cnf.add((-c, -x, -v, e))                             # T5
            cnf.add((-v, -x, e))                                 # P1
            incoming.setdefault(child, []).append(e)

    if constant:
        cnf.add((-rho, node_lit(mdd.root)))
        incoming.setdefault(mdd.root, []).append(rho)
    for nid in sorted(mdd.nodes):                                # P2
        if nid != mdd.root:
            cnf.add((-node_lit(nid), *incoming[nid]))
    for sink in SINKS:
        if sink in incoming:
            cnf.add((-node_lit(sink), *incoming[sink]))

    # a level is bypassable when some edge above it ends in a sink
    bypassed = False
    for level, members in enumerate(levels):
        feature = mdd.ordering[level]
        if not bypassed:
            for j in range(mdd.domains[feature]):                # P3
                cnf.add((-reg.value(feature, j), *(reg[Role("edge", (n, j))] for n in members)))
        if level > 0:                                            # P4
            cnf.extend(exactly_one([node_lit(n) for n in members], at_least=not bypassed))
        if any(c in SINKS for n in members for c in mdd.nodes[n].children):
            bypassed = True

    for f in mdd.features:
        cnf.extend(exactly_one(reg.value_block(f)))
    cnf.add((-reg.sink(1), -reg.sink(0)))

    meta = dict(mdd.meta)
    meta.update(ordering=list(mdd.ordering), pruned=list(mdd.pruned))
    return EncodedModel(cnf, reg, {f: mdd.domains[f] for f in mdd.features},
                        {f: tuple(mdd.labels[f]) for f in mdd.features if f in mdd.labels}, meta)


def assert_class(model: EncodedModel, cls: int, tag: str = "") -> list[Clause]:
    """Unit clauses fixing the active sink: ``[T, -F]`` or ``[-T, F]``."""
    if cls not in (0, 1):
        raise ValueError(f"class must be 0 or 1, got {cls!r}")
    t, f = model.registry.sink(1, tag), model.registry.sink(0, tag)
    return [(t,), (-f,)] if cls == 1 else [(-t,), (f,)]


def encode_ordinal_less(
    a: Sequence[int], b: Sequence[int], registry: VariableRegistry, tag: str = "lt"
) -> tuple[list[Clause], int]:
    """Gate ``g`` equivalent to ``index(a) < index(b)`` for one-hot blocks.

    The relation is the strict upper triangle of the value-pair grid, written
    as a DNF of ``a_j & b_k`` cells; each cell gets a Tseitin auxiliary and
    ``g`` is tied to their disjunction in both directions.
    """
    if len(a) != len(b) or not a:
        raise EncodingError("ordinal comparison needs two blocks over the same non-empty domain")
    g = registry.aux(tag, "gate")
    clauses: list[Clause] = []
    cells = []
    for j, k in itertools.combinations(range(len(a)), 2):
        t = registry.aux(tag, j, k)
        clauses += [(-t, a[j]), (-t, b[k]), (t, -a[j], -b[k])]
        clauses.append((-t, g))
        cells.append(t)
    clauses.append((-g, *cells))
    return clauses, g


def instantiate_copy(model: EncodedModel, tag: str, offset: int | None = None) -> EncodedModel:
    """Rename every literal of ``model`` into a fresh id range tagged ``tag``.

    By default the copy starts right after the original's ids so the two can
    be conjoined directly.
    """
    if not tag or tag in model.registry.tags:
        raise EncodingError(f"tag {tag!r} collides with an existing tag")
    if offset is None:
        offset = model.cnf.num_vars
    shift = lambda lit: lit + offset if lit > 0 else lit - offset  # noqa: E731
    reg = model.registry.retagged(tag, offset)
    cnf = Cnf([tuple(shift(lit) for lit in c) for c in model.cnf.clauses],
              model.cnf.num_vars + offset)
    meta = dict(model.meta, copy_tag=tag)
    return EncodedModel(cnf, reg, dict(model.domains), dict(model.labels), meta)


def value_units(model: EncodedModel, assignment: Mapping[str, int], tag: str = "") -> list[Clause]:
    """Unit clauses selecting the given feature values."""
    out = []
    for f, j in assignment.items():
        if f not in model.domains:
            raise EncodingError(f"unknown feature {f!r}")
        if not 0 <= j < model.domains[f]:
            raise EncodingError(f"value {j} out of range for {f!r}")
        out.append((model.registry.value(f, j, tag),))
    return out
