"""Readers and writers for BIF and the native JSON network format."""

from __future__ import annotations

import hashlib
import heapq
import json
import re
from pathlib import Path

import numpy as np

from .network import BayesianNetwork, Cpt, NetworkError, Variable


class ParseError(ValueError):
    """Syntax error with a 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<string>"[^"]*")
  | (?P<punct>[{}()\[\];,|])
  | (?P<word>[^\s{}()\[\];,|"]+)
    """,
    re.VERBOSE | re.DOTALL,
)


def _tokenize(text: str):
    pos, line, line_start = 0, 1, 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            if kind == "string":
                value, kind = value[1:-1], "word"
            tokens.append((kind, value, line, m.start() - line_start + 1))
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + m.group().rindex("\n") + 1
        pos = m.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


class _BifParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok[2], tok[3])

    def expect(self, value):
        tok = self.next()
        if tok[1] != value or tok[0] == "eof":
            self.fail(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def word(self):
        tok = self.next()
        if tok[0] != "word":
            self.fail(f"expected a name, found {tok[1] or 'end of input'!r}", tok)
        return tok[1]

    def number(self):
        tok = self.next()
        try:
            return float(tok[1])
        except ValueError:
            self.fail(f"expected a number, found {tok[1]!r}", tok)

    def skip_block(self):
        depth = 0
        while True:
            tok = self.next()
            if tok[0] == "eof":
                self.fail("unterminated block", tok)
            if tok[1] == "{":
                depth += 1
            elif tok[1] == "}":
                depth -= 1
                if depth == 0:
                    return

    def skip_property(self):
        while self.peek()[1] != ";":
            if self.peek()[0] == "eof":
                self.fail("unterminated property")
            self.next()
        self.next()

    def parse(self):
        name = "unknown"
        variables = {}
        probabilities = []
        while self.peek()[0] != "eof":
            tok = self.next()
            if tok[1] == "network":
                name = self.word()
                self.skip_block()
            elif tok[1] == "variable":
                var_tok = self.peek()
                var = self.word()
                if var in variables:
                    self.fail(f"variable {var!r} declared twice", var_tok)
                variables[var] = self.parse_variable()
            elif tok[1] == "probability":
                probabilities.append(self.parse_probability())
            else:
                self.fail(f"unexpected {tok[1]!r}", tok)
        return name, variables, probabilities

    def parse_variable(self):
        self.expect("{")
        values = None
        while self.peek()[1] != "}":
            tok = self.next()
            if tok[1] == "type":
                kind = self.word()
                if kind != "discrete":
                    self.fail(f"only discrete variables are supported, got {kind!r}", tok)
                self.expect("[")
                n_tok = self.peek()
                n = self.number()
                self.expect("]")
                self.expect("{")
                values = [self.word()]
                while self.peek()[1] == ",":
                    self.next()
                    values.append(self.word())
                self.expect("}")
                self.expect(";")
                if len(values) != int(n):
                    self.fail(f"declared {int(n)} values but listed {len(values)}", n_tok)
            elif tok[1] == "property":
                self.skip_property()
            else:
                self.fail(f"unexpected {tok[1]!r} in variable block", tok)
        self.expect("}")
        if values is None:
            self.fail("variable block without a type declaration")
        return values

    def parse_probability(self):
        start = self.expect("(")
        child = self.word()
        parents = []
        if self.peek()[1] == "|":
            self.next()
            parents.append(self.word())
            while self.peek()[1] == ",":
                self.next()
                parents.append(self.word())
        self.expect(")")
        self.expect("{")
        table = None
        rows = []
        while self.peek()[1] != "}":
            tok = self.peek()
            if tok[1] == "table":
                self.next()
                table = self.number_list()
            elif tok[1] == "(":
                self.next()
                given = [self.word()]
                while self.peek()[1] == ",":
                    self.next()
                    given.append(self.word())
                self.expect(")")
                rows.append((given, self.number_list(), tok))
            elif tok[1] == "property":
                self.next()
                self.skip_property()
            else:
                self.fail(f"unexpected {tok[1]!r} in probability block", tok)
        self.expect("}")
        return child, parents, table, rows, start

    def number_list(self):
        nums = [self.number()]
        while self.peek()[1] == ",":
            self.next()
            nums.append(self.number())
        self.expect(";")
        return nums


def _build_probs(child, parents, variables, table, rows, where):
    cards = [len(variables[p]) for p in parents]
    ccard = len(variables[child])
    probs = np.full(cards + [ccard], np.nan)
    if table is not None:
        if parents:
            raise ParseError(f"flat 'table' for {child!r} with parents is not supported", where[2], where[3])
        if len(table) != ccard:
            raise NetworkError(f"table of {child!r} has {len(table)} entries, expected {ccard}")
        probs[:] = table
    for given, values, tok in rows:
        if len(given) != len(parents):
            raise ParseError(f"row for {child!r} lists {len(given)} parent values", tok[2], tok[3])
        try:
            idx = tuple(variables[p].index(g) for p, g in zip(parents, given))
        except ValueError as exc:
            raise ParseError(f"unknown parent value in row of {child!r}: {exc}", tok[2], tok[3]) from None
        if len(values) != ccard:
            raise ParseError(f"row for {child!r} has {len(values)} probabilities", tok[2], tok[3])
        if not np.isnan(probs[idx][0]):
            raise NetworkError(f"duplicate CPT row {given} for {child!r}")
        probs[idx] = values
    if np.isnan(probs).any():
        missing = np.argwhere(np.isnan(probs[..., 0]))[0]
        labels = [variables[p][i] for p, i in zip(parents, missing)]
        raise NetworkError(f"CPT of {child!r} is missing row {labels}")
    return probs


def parse_bif(text: str, outcome: str) -> BayesianNetwork:
    """Parse the common BIF subset (``network``, ``variable``, ``probability``).

    BIF has no notion of a class variable, so ``outcome`` must be supplied.
    """
    if not outcome:
        raise NetworkError("BIF carries no outcome marker; an outcome variable is required")
    name, variables, probabilities = _BifParser(text).parse()
    cpts = []
    seen = set()
    for child, parents, table, rows, tok in probabilities:
        for v in [child, *parents]:
            if v not in variables:
                raise ParseError(f"probability block references unknown variable {v!r}", tok[2], tok[3])
        if child in seen:
            raise ParseError(f"second probability block for {child!r}", tok[2], tok[3])
        seen.add(child)
        probs = _build_probs(child, parents, {k: _Labels(v) for k, v in variables.items()},
                             table, rows, tok)
        cpts.append(Cpt(child, tuple(parents), probs))
    vs = tuple(Variable(n, tuple(vals)) for n, vals in variables.items())
    return BayesianNetwork(vs, tuple(cpts), outcome, name)


class _Labels(list):
    def index(self, label):
        try:
            return super().index(label)
        except ValueError:
            raise ValueError(f"{label!r}") from None


def write_bif(net: BayesianNetwork) -> str:
    lines = [f"network {net.name} {{", "}"]
    for v in net.variables:
        lines.append(f"variable {v.name} {{")
        lines.append(f"  type discrete [ {v.cardinality} ] {{ {', '.join(v.values)} }};")
        lines.append("}")
    for cpt in net.cpts:
        head = cpt.child + (f" | {', '.join(cpt.parents)}" if cpt.parents else "")
        lines.append(f"probability ( {head} ) {{")
        if not cpt.parents:
            lines.append(f"  table {', '.join(repr(float(p)) for p in cpt.probs)};")
        else:
            for idx, row in cpt.table.items():
                given = ", ".join(net[p].values[i] for p, i in zip(cpt.parents, idx))
                lines.append(f"  ({given}) {', '.join(repr(p) for p in row)};")
        lines.append("}")
    return "\n".join(lines) + "\n"


# -- native JSON ------------------------------------------------------------

def network_to_dict(net: BayesianNetwork) -> dict:
    cpts = {}
    for cpt in net.cpts:
        rows = []
        for idx, row in cpt.table.items():
            given = [net[p].values[i] for p, i in zip(cpt.parents, idx)]
            rows.append({"given": given, "p": list(row)})
        cpts[cpt.child] = {"parents": list(cpt.parents), "rows": rows}
    return {
        "name": net.name,
        "variables": [{"name": v.name, "values": list(v.values)} for v in net.variables],
        "edges": [list(e) for e in net.edges],
        "cpts": cpts,
        "outcome": net.outcome,
    }


def network_from_dict(data: dict) -> BayesianNetwork:
    try:
        variables = {v["name"]: _Labels(v["values"]) for v in data["variables"]}
        cpt_specs = data["cpts"]
        outcome = data["outcome"]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network document: missing {exc}") from None
    if not outcome:
        raise NetworkError("network document has no outcome variable")
    if len(variables) != len(data["variables"]):
        raise NetworkError("duplicate variable names")
    cpts = []
    for child, spec in cpt_specs.items():
        parents = list(spec.get("parents", []))
        for v in [child, *parents]:
            if v not in variables:
                raise NetworkError(f"CPT references unknown variable {v!r}")
        ccard = len(variables[child])
        cards = [len(variables[p]) for p in parents]
        probs = np.full(cards + [ccard], np.nan)
        for row in spec.get("rows", []):
            given = list(row.get("given", []))
            if len(given) != len(parents):
                raise NetworkError(f"row for {child!r} lists {len(given)} parent values")
            try:
                idx = tuple(variables[p].index(g) for p, g in zip(parents, given))
            except ValueError as exc:
                raise NetworkError(f"unknown parent value {exc} in CPT of {child!r}") from None
            if not np.isnan(probs[idx][0]):
                raise NetworkError(f"duplicate CPT row {given} for {child!r}")
            if len(row["p"]) != ccard:
                raise NetworkError(f"row {given} of {child!r} has {len(row['p'])} probabilities")
            probs[idx] = row["p"]
        if np.isnan(probs).any():
            missing = np.argwhere(np.isnan(probs[..., 0]))[0]
            raise NetworkError(f"CPT of {child!r} is missing row "
                               f"{[variables[p][i] for p, i in zip(parents, missing)]}")
        cpts.append(Cpt(child, tuple(parents), probs))
    declared = {tuple(e) for e in data.get("edges", [])}
    implied = {(p, c.child) for c in cpts for p in c.parents}
    if "edges" in data and declared != implied:
        raise NetworkError(f"edge list disagrees with CPT parents: {sorted(declared ^ implied)}")
    vs = tuple(Variable(n, tuple(vals)) for n, vals in variables.items())
    order = {v.name: i for i, v in enumerate(vs)}
    cpts.sort(key=lambda c: order[c.child])
    return BayesianNetwork(vs, tuple(cpts), outcome, data.get("name", "unknown"))


def parse_json(text: str) -> BayesianNetwork:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise ParseError("network document must be a JSON object", 1, 1)
    return network_from_dict(data)


def parse_network(text: str, format: str = "native-json", outcome: str | None = None) -> BayesianNetwork:
    """Parse ``text`` as ``bif`` or ``native-json``.

    For BIF the outcome is a required argument. For JSON it comes from the
    document; passing ``outcome`` overrides it.
    """
    if format == "bif":
        return parse_bif(text, outcome)
    if format in ("native-json", "json"):
        net = parse_json(text)
        if outcome and outcome != net.outcome:
            net = BayesianNetwork(net.variables, net.cpts, outcome, net.name)
        return net
    raise ValueError(f"unknown network format {format!r}")


def serialize_network(net: BayesianNetwork, format: str = "native-json") -> str:
    if format == "bif":
        return write_bif(net)
    if format in ("native-json", "json"):
        return json.dumps(network_to_dict(net), indent=1)
    raise ValueError(f"unknown network format {format!r}")


def guess_format(path) -> str:
    return "bif" if str(path).endswith(".bif") else "native-json"


def load_network(path, outcome: str | None = None, format: str | None = None) -> BayesianNetwork:
    path = Path(path)
    return parse_network(path.read_text(), format or guess_format(path), outcome)


def content_hash(*parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(part if isinstance(part, bytes) else str(part).encode())
        h.update(b"\0")
    return h.hexdigest()


def network_hash(net: BayesianNetwork) -> str:
    return content_hash(json.dumps(network_to_dict(net), sort_keys=True))


def bundled_network(name: str, outcome: str) -> BayesianNetwork:
    """Load one of the public repository networks shipped with the package."""
    path = Path(__file__).parent / "data" / "networks" / f"{name}.bif"
    if not path.exists():
        raise FileNotFoundError(f"no bundled network {name!r}")
    return parse_bif(path.read_text(), outcome)


def bundled_network_names() -> list[str]:
    root = Path(__file__).parent / "data" / "networks"
    return sorted(p.stem for p in root.glob("*.bif"))



def default_outcome(text: str, format: str = "bif") -> str:
    """Outcome used when none is named: the last binary variable in topological order.

    Native JSON documents carry their own outcome, which wins.
    """
    if format != "bif":
        return parse_json(text).outcome
    _, variables, probabilities = _BifParser(text).parse()
    parents = {child: list(ps) for child, ps, *_ in probabilities}
    indeg = {v: len(parents.get(v, ())) for v in variables}
    children = {v: [] for v in variables}
    for child, ps in parents.items():
        for p in ps:
            children.setdefault(p, []).append(child)
    heap = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in children.get(v, ()):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    binary = [v for v in order if len(variables[v]) == 2]
    if not binary:
        raise NetworkError("network has no binary variable to use as outcome")
    return binary[-1]
