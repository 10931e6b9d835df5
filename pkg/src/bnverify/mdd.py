"""Leveled multi-valued decision diagrams with two sinks.

Node ids 0 and 1 are the FALSE and TRUE sinks. Internal nodes are numbered
from 2 in canonical order: by level, and inside a level by first visit in a
depth-first walk from the root taking edges in value order. Every edge of a
level-``l`` node leads to a level ``l + 1`` node or to a sink.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

FALSE_SINK = 0
TRUE_SINK = 1
SINKS = (FALSE_SINK, TRUE_SINK)


class MddError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    level: int
    children: tuple[int, ...]


@dataclass(frozen=True)
class Mdd:
    """A reduced, ordered diagram over ``ordering``.

    ``domains`` holds the cardinality of every feature of the source network,
    including ``pruned`` ones that do not appear as a level.
    """

    ordering: tuple[str, ...]
    nodes: Mapping[int, Node]
    root: int
    domains: Mapping[str, int]
    pruned: tuple[str, ...] = ()
    labels: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "ordering", tuple(self.ordering))
        object.__setattr__(self, "pruned", tuple(self.pruned))
        object.__setattr__(self, "nodes", {int(k): v for k, v in self.nodes.items()})
        self.validate()

    def validate(self):
        for nid, node in self.nodes.items():
            if nid in SINKS:
                raise MddError("sink ids cannot be internal nodes")
            if not 0 <= node.level < len(self.ordering):
                raise MddError(f"node {nid} has level {node.level} outside the ordering")
            feature = self.ordering[node.level]
            if len(node.children) != self.domains[feature]:
                raise MddError(f"node {nid} needs {self.domains[feature]} edges, has {len(node.children)}")
            for c in node.children:
                if c in SINKS:
                    continue
                if c not in self.nodes:
                    raise MddError(f"node {nid} points at unknown node {c}")
                if self.nodes[c].level != node.level + 1:
                    raise MddError(f"edge {nid}->{c} skips from level {node.level} "
                                   f"to {self.nodes[c].level}")
        if self.root not in SINKS and self.root not in self.nodes:
            raise MddError("root is not a node")
        overlap = set(self.ordering) & set(self.pruned)
        if overlap:
            raise MddError(f"features both in ordering and pruned: {sorted(overlap)}")

    # -- structure ------------------------------------------------------------

    @property
    def features(self) -> tuple[str, ...]:
        """Diagram features in level order, then pruned ones."""
        return self.ordering + self.pruned

    @property
    def is_constant(self) -> bool:
        return self.root in SINKS

    @property
    def levels(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.ordering]
        for nid in sorted(self.nodes):
            out[self.nodes[nid].level].append(nid)
        return out

    @property
    def height(self) -> int:
        return len(self.ordering)

    def edges(self):
        """Yield ``(node, value, child)`` for every outgoing edge."""
        for nid in sorted(self.nodes):
            for value, child in enumerate(self.nodes[nid].children):
                yield nid, value, child

    def evaluate(self, assignment: Mapping[str, int]) -> int:
        nid = self.root
        while nid not in SINKS:
            node = self.nodes[nid]
            feature = self.ordering[node.level]
            try:
                value = assignment[feature]
            except KeyError:
                raise MddError(f"assignment is missing diagram variable {feature!r}") from None
            if not 0 <= value < len(node.children):
                raise MddError(f"value {value} out of range for {feature!r}")
            nid = node.children[value]
        return nid

    def path(self, assignment: Mapping[str, int]) -> list[tuple[int, int]]:
        """``(node, value)`` pairs along the root-to-sink path of ``assignment``."""
        out = []
        nid = self.root
        while nid not in SINKS:
            value = assignment[self.ordering[self.nodes[nid].level]]
            out.append((nid, value))
            nid = self.nodes[nid].children[value]
        return out

    def stats(self) -> dict:
        return {
            "height": self.height,
            "node_count": len(self.nodes),
            "edge_count": sum(len(n.children) for n in self.nodes.values()),
            "pruned_variables": list(self.pruned),
        }

    def is_reduced(self) -> bool:
        seen = set()
        for node in self.nodes.values():
            key = (node.level, node.children)
            if key in seen:
                return False
            seen.add(key)
            if node.children[0] in SINKS and len(set(node.children)) == 1:
                return False
        for level in self.levels:
            if all(len(set(self.nodes[n].children)) == 1 for n in level):
                return False
        return True

    def same_structure(self, other: "Mdd") -> bool:
        return (self.ordering == other.ordering and self.root == other.root
                and dict(self.nodes) == dict(other.nodes) and self.pruned == other.pruned)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "ordering": list(self.ordering),
            "pruned": list(self.pruned),
            "domains": {k: self.domains[k] for k in self.features},
            "labels": {k: list(v) for k, v in self.labels.items()},
            "root": self.root,
            "sinks": {"false": FALSE_SINK, "true": TRUE_SINK},
            "levels": [
                [{"id": nid, "children": list(self.nodes[nid].children)} for nid in level]
                for level in self.levels
            ],
            "meta": dict(self.meta),
            "stats": self.stats(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "Mdd":
        try:
            sinks = data.get("sinks", {"false": 0, "true": 1})
            if (sinks["false"], sinks["true"]) != SINKS:
                raise MddError("unsupported sink numbering")
            nodes = {}
            for lvl, level in enumerate(data["levels"]):
                for entry in level:
                    nodes[int(entry["id"])] = Node(lvl, tuple(int(c) for c in entry["children"]))
            return cls(
                ordering=tuple(data["ordering"]),
                nodes=nodes,
                root=int(data["root"]),
                domains={k: int(v) for k, v in data["domains"].items()},
                pruned=tuple(data.get("pruned", ())),
                labels={k: tuple(v) for k, v in data.get("labels", {}).items()},
                meta=data.get("meta", {}),
            )
        except (KeyError, TypeError) as exc:
            raise MddError(f"malformed diagram document: {exc!r}") from None

    @classmethod
    def from_json(cls, text: str) -> "Mdd":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise MddError(f"invalid JSON: {exc}") from None


def build(
    ordering: Sequence[str],
    nodes: Mapping[int, Node],
    root: int,
    domains: Mapping[str, int],
    **kwargs,
) -> Mdd:
    """Construct an unreduced diagram (no canonical renumbering)."""
    return Mdd(tuple(ordering), dict(nodes), root, dict(domains), **kwargs)


def reduce(mdd: Mdd) -> Mdd:
    """Canonical reduced form of ``mdd``.

    Repeats until nothing changes: merge same-level nodes with identical
    children (bottom-up hash-consing), replace a node whose edges all lead
    to the same sink by that sink, and drop any level on which every node
    sends all values to one child. Dropped levels move to ``pruned``.
    """
    ordering = list(mdd.ordering)
    nodes = dict(mdd.nodes)
    root = mdd.root
    pruned = list(mdd.pruned)
    while True:
        changed = False
        rep: dict[int, int] = {}
        unique: dict[tuple, int] = {}
        new_nodes: dict[int, Node] = {}
        for nid in sorted(nodes, key=lambda n: -nodes[n].level):
            node = nodes[nid]
            kids = tuple(rep.get(c, c) for c in node.children)
            if kids[0] in SINKS and len(set(kids)) == 1:
                rep[nid] = kids[0]
                changed = True
                continue
            key = (node.level, kids)
            if key in unique:
                rep[nid] = unique[key]
                changed = True
                continue
            unique[key] = nid
            rep[nid] = nid
            new_nodes[nid] = Node(node.level, kids)
        root = rep.get(root, root)
        nodes = _reachable(new_nodes, root)
        changed |= len(nodes) != len(new_nodes)

        by_level: dict[int, list[int]] = {}
        for nid, node in nodes.items():
            by_level.setdefault(node.level, []).append(nid)
        dead = [lvl for lvl in range(len(ordering))
                if all(len(set(nodes[n].children)) == 1 for n in by_level.get(lvl, []))]
        if dead:
            changed = True
            skip = {n: nodes[n].children[0] for lvl in dead for n in by_level.get(lvl, [])}

            def through(c):
                while c in skip:
                    c = skip[c]
                return c

            shift = {lvl: sum(1 for d in dead if d < lvl) for lvl in range(len(ordering))}
            nodes = {
                nid: Node(node.level - shift[node.level], tuple(through(c) for c in node.children))
                for nid, node in nodes.items() if nid not in skip
            }
            root = through(root)
            pruned += [ordering[lvl] for lvl in dead]
            ordering = [f for lvl, f in enumerate(ordering) if lvl not in dead]
        if not changed:
            break
    return canonicalize(Mdd(tuple(ordering), nodes, root, mdd.domains,
                            tuple(pruned), mdd.labels, mdd.meta))


def _reachable(nodes: Mapping[int, Node], root: int) -> dict[int, Node]:
    out = {}
    stack = [root]
    while stack:
        nid = stack.pop()
        if nid in SINKS or nid in out:
            continue
        out[nid] = nodes[nid]
        stack.extend(nodes[nid].children)
    return out


def canonicalize(mdd: Mdd) -> Mdd:
    """Renumber nodes: by level, then first visit in value-ordered DFS."""
    visit: dict[int, int] = {}
    stack = [mdd.root]
    while stack:
        nid = stack.pop()
        if nid in SINKS or nid in visit:
            continue
        visit[nid] = len(visit)
        stack.extend(reversed(mdd.nodes[nid].children))
    order = sorted(visit, key=lambda n: (mdd.nodes[n].level, visit[n]))
    new_id = {old: i + 2 for i, old in enumerate(order)}
    new_id.update({s: s for s in SINKS})
    nodes = {
        new_id[old]: Node(mdd.nodes[old].level, tuple(new_id[c] for c in mdd.nodes[old].children))
        for old in order
    }
    pruned = tuple(sorted(mdd.pruned))
    return Mdd(mdd.ordering, nodes, new_id[mdd.root], mdd.domains, pruned, mdd.labels, mdd.meta)


def evaluate(mdd: Mdd, assignment: Mapping[str, int]) -> int:
    return mdd.evaluate(assignment)


def stats(mdd: Mdd) -> dict:
    return mdd.stats()
