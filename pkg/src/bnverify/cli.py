"""``bnverify`` command line: compile, encode, verify, enumerate, export, bench.

Exit codes: 0 success (or property holds), 2 property violated, 1 error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .compiler import DEFAULT_BUDGET, CompilerConfig, compile_network
from .encoder import EncodedModel, assert_class, encode
from .io import content_hash, default_outcome, guess_format, parse_network
from .mdd import Mdd
from .network import NetworkError
from .sat import SolverBudgetExceeded, enumerate_models
from .synthetic import random_fmo_query, random_ruleset
from .verifier import (
    PATTERNS,
    QueryError,
    decode_model,
    fmo_formula,
    itr_clauses,
    load_queries,
    pattern_clauses,
    render_text,
    run_query,
    verify_fmo,
    verify_itr,
)

log = logging.getLogger("bnverify")

CACHE_ENV = "BNVERIFY_CACHE_DIR"
EXIT_OK, EXIT_ERROR, EXIT_VIOLATED = 0, 1, 2

BENCH_COLUMNS = [
    "network", "outcome", "bn_nodes", "avg_degree", "n_parameters",
    "mdd_height", "mdd_nodes", "cnf_literals", "cnf_clauses",
    "compile_s", "encode_s", "verify_s", "n_queries", "seed", "error",
]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    inputs: list[Path]
    out: Path | None = None
    threshold: float = 0.5
    ordering: tuple[str, ...] | None = None
    budget: int = DEFAULT_BUDGET
    conflict_limit: int | None = None
    max_counterexamples: int = 10
    report_format: str = "json"
    extra: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        for name in ("budget", "conflict_limit"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.max_counterexamples < 0:
            raise UsageError("--max-counterexamples must be non-negative")
        for p in self.inputs:
            if not p.exists():
                raise UsageError(f"no such file or directory: {p}")
        return self


def _zero_class(text: str):
    if text == "error":
        return "error"
    if text in ("0", "1"):
        return int(text)
    raise argparse.ArgumentTypeError("expected 0, 1 or error")


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _sibling(path: Path, suffix: str) -> Path:
    name = path.name
    for ext in (".mdd.json", ".enc.json", ".json", ".bif"):
        if name.endswith(ext):
            name = name[: -len(ext)]
            break
    return path.with_name(name + suffix)


# -- compile ----------------------------------------------------------------------

def compile_artifact(text: str, fmt: str, outcome: str | None, cfg: CompilerConfig,
                     cache_dir: Path | None = None) -> tuple[str, bool]:
    """Mdd JSON for a network document, served from ``cache_dir`` when possible."""
    key = content_hash(text, fmt, outcome or "", cfg.threshold, cfg.ordering,
                       cfg.zero_evidence_class, cfg.budget, __version__)
    cached = cache_dir / f"{key}.mdd.json" if cache_dir else None
    if cached is not None and cached.exists():
        return cached.read_text(), True
    net = parse_network(text, fmt, outcome)
    artifact = compile_network(net, cfg).to_json()
    if cached is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
        tmp = cached.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(artifact)
        tmp.replace(cached)
    return artifact, False


def cmd_compile(args) -> int:
    run = RunConfig("compile", [args.network], args.out, args.threshold,
                    tuple(args.ordering.split(",")) if args.ordering else None,
                    args.budget).validate()
    fmt = args.format or guess_format(args.network)
    text = args.network.read_text()
    outcome = args.outcome
    if fmt == "bif" and not outcome:
        raise UsageError("BIF networks need --outcome")
    cfg = CompilerConfig(run.threshold, run.ordering, args.zero_evidence_class, run.budget)
    cache = args.cache_dir or os.environ.get(CACHE_ENV)
    artifact, hit = compile_artifact(text, fmt, outcome, cfg, Path(cache) if cache else None)
    out = run.out or _sibling(args.network, ".mdd.json")
    _write(artifact, out)
    stats = Mdd.from_json(artifact).stats()
    print(json.dumps({"artifact": str(out), "cached": hit, **stats}, sort_keys=True))
    return EXIT_OK


# -- encode -----------------------------------------------------------------------

def cmd_encode(args) -> int:
    run = RunConfig("encode", [args.mdd], args.out).validate()
    mdd = Mdd.from_json(args.mdd.read_text())
    model = encode(mdd)
    out = run.out or _sibling(args.mdd, ".enc.json")
    _write(model.to_json(), out)
    if args.dimacs:
        _write(model.to_dimacs(), args.dimacs)
    print(json.dumps({"artifact": str(out), "literals": model.cnf.num_vars,
                      "clauses": len(model.cnf)}, sort_keys=True))
    return EXIT_OK


# -- verify -----------------------------------------------------------------------

def _load_model(path: Path) -> EncodedModel:
    return EncodedModel.from_json(path.read_text())


def cmd_verify(args) -> int:
    run = RunConfig("verify", [args.model, args.queries], args.out,
                    conflict_limit=args.conflict_limit,
                    max_counterexamples=args.max_counterexamples,
                    report_format=args.format).validate()
    model = _load_model(args.model)
    queries = load_queries(args.queries.read_text(), model)
    verdicts = []
    for q in queries:
        t0 = time.perf_counter()
        v = run_query(model, q, run.max_counterexamples, run.conflict_limit)
        v.stats["wall_s"] = time.perf_counter() - t0
        verdicts.append(v)
    if run.report_format == "text":
        report = render_text(verdicts, model.labels)
    elif run.report_format == "csv":
        report = _verdict_csv(verdicts)
    else:
        report = json.dumps({"model": model.meta, "verdicts": [v.to_dict() for v in verdicts]},
                            indent=1, sort_keys=True) + "\n"
    _write(report, run.out)
    return EXIT_OK if all(v.holds for v in verdicts) else EXIT_VIOLATED


def _verdict_csv(verdicts) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["query", "kind", "holds", "vacuous", "status", "n_counterexamples", "complete"])
    for i, v in enumerate(verdicts):
        w.writerow([i, v.kind, v.holds, v.vacuous,
                    " ".join(f"{k}={s}" for k, s in v.status.items()),
                    len(v.counterexamples), v.complete])
    return buf.getvalue()


# -- enumerate --------------------------------------------------------------------

def cmd_enumerate(args) -> int:
    run = RunConfig("enumerate", [args.model], args.out,
                    conflict_limit=args.conflict_limit).validate()
    model = _load_model(args.model)
    extra = assert_class(model, args.cls) if args.cls is not None else []
    cnf = model.cnf.copy()
    cnf.extend(extra)
    enum = enumerate_models(cnf, model.value_literals(), args.limit,
                            conflict_limit=run.conflict_limit)
    rows = [decode_model(m, model.registry, model.domains) for m in enum.models]
    _write(json.dumps({"class": args.cls, "complete": enum.complete, "count": len(rows),
                       "assignments": rows}, indent=1, sort_keys=True) + "\n", run.out)
    return EXIT_OK


# -- export-dimacs ----------------------------------------------------------------

def cmd_export(args) -> int:
    run = RunConfig("export-dimacs", [args.model] + ([args.query] if args.query else []),
                    args.out).validate()
    model = _load_model(args.model)
    if args.query and args.cls is not None:
        raise UsageError("--class and --query are exclusive")
    if args.query:
        queries = load_queries(args.query.read_text(), model)
        if len(queries) != 1:
            raise UsageError("export needs a query file holding exactly one query")
        q = queries[0]
        if q["type"] == "itr":
            extra = itr_clauses(model, q["rules"])
            if extra is None:
                raise UsageError("the query's rule box is empty; nothing to export")
            text = model.to_dimacs(extra)
        else:
            if args.pattern is None:
                raise UsageError("FMO export needs --pattern LHL or HLH")
            combined = fmo_formula(model, q["phi"], q["feature"], q["tie_free"])
            text = combined.to_dimacs(pattern_clauses(combined, args.pattern))
    else:
        text = model.to_dimacs(assert_class(model, args.cls) if args.cls is not None else ())
    _write(text, run.out)
    return EXIT_OK


# -- bench ------------------------------------------------------------------------

def _bench_one(path: str, outcome: str | None, seed_seq, cfg_kw: dict, n_queries: int,
               repeats: int, seed: int) -> dict:
    path = Path(path)
    row = {c: "" for c in BENCH_COLUMNS}
    row.update(network=path.stem, seed=seed)
    try:
        fmt = guess_format(path)
        text = path.read_text()
        outcome = outcome or default_outcome(text, fmt)
        row["outcome"] = outcome
        net = parse_network(text, fmt, outcome)
        row.update(bn_nodes=len(net.names), avg_degree=round(net.average_degree, 4),
                   n_parameters=net.n_parameters)
        cfg = CompilerConfig(**cfg_kw)
        t = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            mdd = compile_network(net, cfg)
            t.append(time.perf_counter() - t0)
        row["compile_s"] = float(np.mean(t))
        st = mdd.stats()
        row.update(mdd_height=st["height"], mdd_nodes=st["node_count"])
        t = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            model = encode(mdd)
            t.append(time.perf_counter() - t0)
        row["encode_s"] = float(np.mean(t))
        row.update(cnf_literals=model.cnf.num_vars, cnf_clauses=len(model.cnf))
        row["verify_s"] = float(np.mean(_bench_queries(model, np.random.default_rng(seed_seq),
                                                       n_queries, repeats)))
        row["n_queries"] = n_queries
    except Exception as exc:  # one bad network must not stop the table
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def bench_queries(domains: dict, rng, n_queries: int) -> list[tuple]:
    """Seeded query set: alternating ITR ``("itr", RuleSet)`` and FMO ``("fmo", (phi, x))``."""
    if not domains:
        return []
    return [("itr", random_ruleset(rng, domains)) if i % 2 == 0
            else ("fmo", random_fmo_query(rng, domains)) for i in range(n_queries)]


def _bench_queries(model: EncodedModel, rng, n_queries: int, repeats: int) -> list[float]:
    """Mean wall time per query over ``repeats`` runs of each seeded query."""
    times = []
    for kind, q in bench_queries(dict(model.domains), rng, n_queries):
        t0 = time.perf_counter()
        for _ in range(repeats):
            if kind == "itr":
                verify_itr(model, q, max_counterexamples=1)
            else:
                verify_fmo(model, q[0], q[1], max_counterexamples=1)
        times.append((time.perf_counter() - t0) / repeats)
    return times or [0.0]


def bench_rows(net_dir: Path, n_queries: int = 20, repeats: int = 10, seed: int = 0,
               outcomes: dict | None = None, cfg_kw: dict | None = None, jobs: int = 1) -> list[dict]:
    paths = sorted(p for p in net_dir.iterdir() if p.suffix in (".bif", ".json"))
    outcomes = outcomes or {}
    cfg_kw = cfg_kw or {}
    children = np.random.SeedSequence(seed).spawn(len(paths))
    jobs_args = [(str(p), outcomes.get(p.stem), s, cfg_kw, n_queries, repeats, seed)
                 for p, s in zip(paths, children)]
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_bench_one, *zip(*jobs_args)))
    return [_bench_one(*a) for a in jobs_args]


def cmd_bench(args) -> int:
    run = RunConfig("bench", [args.net_dir], args.out, args.threshold,
                    budget=args.budget).validate()
    if args.queries_per_net < 0 or args.repeats < 1 or args.jobs < 1:
        raise UsageError("--queries-per-net must be >= 0; --repeats and --jobs >= 1")
    outcomes = json.loads(args.outcomes.read_text()) if args.outcomes else {}
    cfg_kw = {"threshold": run.threshold, "zero_evidence_class": args.zero_evidence_class,
              "budget": run.budget}
    rows = bench_rows(args.net_dir, args.queries_per_net, args.repeats, args.seed,
                      outcomes, cfg_kw, args.jobs)
    buf = _io.StringIO()
    w = csv.DictWriter(buf, BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _write(buf.getvalue(), run.out)
    return EXIT_OK


# -- entry point --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bnverify", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a network into an MDD artifact")
    c.add_argument("network", type=Path)
    c.add_argument("--format", choices=["bif", "native-json"])
    c.add_argument("--outcome")
    c.add_argument("--threshold", type=float, default=0.5)
    c.add_argument("--ordering", help="comma-separated feature order")
    c.add_argument("--zero-evidence-class", type=_zero_class, default="error")
    c.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                   help="maximum number of assignments to enumerate")
    c.add_argument("--cache-dir", type=Path, help=f"artifact cache (default ${CACHE_ENV})")
    c.add_argument("-o", "--out", type=Path)
    c.set_defaults(func=cmd_compile)

    e = sub.add_parser("encode", help="encode an MDD artifact as CNF")
    e.add_argument("mdd", type=Path)
    e.add_argument("-o", "--out", type=Path)
    e.add_argument("--dimacs", type=Path)
    e.set_defaults(func=cmd_encode)

    v = sub.add_parser("verify", help="check ITR/FMO queries against an encoded model")
    v.add_argument("model", type=Path)
    v.add_argument("queries", type=Path)
    v.add_argument("--max-counterexamples", type=int, default=10)
    v.add_argument("--conflict-limit", type=int)
    v.add_argument("--format", choices=["json", "text", "csv"], default="json")
    v.add_argument("-o", "--out", type=Path)
    v.set_defaults(func=cmd_verify)

    n = sub.add_parser("enumerate", help="list inputs reaching a class")
    n.add_argument("model", type=Path)
    n.add_argument("--class", dest="cls", type=int, choices=[0, 1])
    n.add_argument("--limit", type=int, default=100)
    n.add_argument("--conflict-limit", type=int)
    n.add_argument("-o", "--out", type=Path)
    n.set_defaults(func=cmd_enumerate)

    x = sub.add_parser("export-dimacs", help="write the model or a query formula as DIMACS")
    x.add_argument("model", type=Path)
    x.add_argument("--class", dest="cls", type=int, choices=[0, 1])
    x.add_argument("--query", type=Path)
    x.add_argument("--pattern", choices=sorted(PATTERNS))
    x.add_argument("-o", "--out", type=Path)
    x.set_defaults(func=cmd_export)

    b = sub.add_parser("bench", help="size and timing table over a directory of networks")
    b.add_argument("net_dir", type=Path)
    b.add_argument("--queries-per-net", type=int, default=20)
    b.add_argument("--repeats", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--outcomes", type=Path, help="JSON object mapping network stem to outcome")
    b.add_argument("--threshold", type=float, default=0.5)
    b.add_argument("--zero-evidence-class", type=_zero_class, default=0)
    b.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("-o", "--out", type=Path)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, QueryError, NetworkError, SolverBudgetExceeded, ValueError,
            ArithmeticError, RuntimeError, OSError, KeyError) as exc:
        print(f"bnverify: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
