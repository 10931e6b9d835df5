import csv
import json

import numpy as np
import pytest

from bnverify import CompilerConfig, compile_network, encode, verify_fmo, verify_itr
from bnverify.cli import bench_queries, main
from bnverify.io import bundled_network, serialize_network
from bnverify.network import make_network
from bnverify.verifier import load_queries

from conftest import itr_oracle, make_corpus, oracle_decisions


@pytest.fixture
def asia(tmp_path):
    path = tmp_path / "asia.bif"
    path.write_text(serialize_network(bundled_network("asia", "xray"), "bif"))
    return path


def pipeline(tmp_path, net_path, *compile_args):
    mdd = tmp_path / "m.mdd.json"
    enc = tmp_path / "m.enc.json"
    assert main(["compile", str(net_path), "-o", str(mdd), *compile_args]) == 0
    assert main(["encode", str(mdd), "-o", str(enc)]) == 0
    return mdd, enc


def test_compile_is_byte_identical(tmp_path, asia, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["compile", str(asia), "--outcome", "xray", "--zero-evidence-class", "0",
                     "-o", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    stats = json.loads(capsys.readouterr().out.splitlines()[0])
    assert (stats["height"], stats["node_count"]) == (3, 3)


def test_compile_cache(tmp_path, asia, capsys, monkeypatch):
    monkeypatch.setenv("BNVERIFY_CACHE_DIR", str(tmp_path / "cache"))
    args = ["compile", str(asia), "--outcome", "xray", "--zero-evidence-class", "0",
            "-o", str(tmp_path / "x.json")]
    main(args)
    main(args)
    first, second = (json.loads(l) for l in capsys.readouterr().out.splitlines())
    assert not first["cached"] and second["cached"]
    assert len(list((tmp_path / "cache").iterdir())) == 1


def test_compile_errors(tmp_path, asia):
    assert main(["compile", str(asia)]) == 1                                   # no outcome
    assert main(["compile", str(asia), "--outcome", "xray"]) == 1              # zero evidence
    assert main(["compile", str(tmp_path / "missing.bif"), "--outcome", "x"]) == 1
    bad = tmp_path / "bad.bif"
    bad.write_text("variable {")
    assert main(["compile", str(bad), "--outcome", "x"]) == 1
    assert main(["compile", str(asia), "--outcome", "xray", "--budget", "0"]) == 1


def test_constant_model_verifies(tmp_path):
    net = make_network([("A", ["a", "b"]), ("Y", ["0", "1"])],
                       {"A": ((), [0.5, 0.5]), "Y": ((), [0.2, 0.8])}, "Y")
    src = tmp_path / "const.json"
    src.write_text(serialize_network(net))
    mdd, enc = pipeline(tmp_path, src)
    assert json.loads(mdd.read_text())["root"] == 1
    q = tmp_path / "q.json"
    q.write_text(json.dumps({"type": "itr", "rules": [{"feature": "A", "op": "=", "index": "b"}],
                             "class": 1}))
    assert main(["verify", str(enc), str(q)]) == 0


def test_violation_exit_code_and_report(tmp_path, capsys):
    # corpus network and query whose violation the brute-force oracle confirms
    net = make_corpus(1234, 1)[0]
    rules_doc = {"type": "itr", "rules": [], "class": 1}
    decisions = oracle_decisions(net)
    assert (decisions == 0).any()
    src = tmp_path / "n.json"
    src.write_text(serialize_network(net))
    _, enc = pipeline(tmp_path, src)
    q = tmp_path / "q.json"
    q.write_text(json.dumps(rules_doc))
    capsys.readouterr()
    assert main(["verify", str(enc), str(q), "--max-counterexamples", "3"]) == 2
    report = json.loads(capsys.readouterr().out)
    (verdict,) = report["verdicts"]
    assert not verdict["holds"] and 1 <= len(verdict["counterexamples"]) <= 3
    model = encode(compile_network(net))
    (parsed,) = load_queries(json.dumps(rules_doc), model)
    assert not itr_oracle(net, decisions, parsed["rules"])


def test_malformed_query_exit_code(tmp_path, asia):
    _, enc = pipeline(tmp_path, asia, "--outcome", "xray", "--zero-evidence-class", "0")
    q = tmp_path / "q.json"
    q.write_text('{"type": "itr", "rules": [')
    assert main(["verify", str(enc), str(q)]) == 1
    q.write_text('{"type": "fmo", "feature": "nope"}')
    assert main(["verify", str(enc), str(q)]) == 1


def test_pipeline_matches_library(tmp_path, asia, capsys):
    _, enc = pipeline(tmp_path, asia, "--outcome", "xray", "--zero-evidence-class", "0")
    queries = [
        {"type": "itr", "rules": [{"feature": "lung", "op": "=", "index": "yes"}], "class": 1},
        {"type": "itr", "rules": [{"feature": "tub", "op": "=", "index": 1}], "class": 0},
        {"type": "fmo", "phi": {"tub": 0}, "feature": "lung"},
    ]
    q = tmp_path / "q.json"
    q.write_text(json.dumps({"queries": queries}))
    capsys.readouterr()
    code = main(["verify", str(enc), str(q), "--max-counterexamples", "5"])
    report = json.loads(capsys.readouterr().out)["verdicts"]

    model = encode(compile_network(bundled_network("asia", "xray"),
                                   CompilerConfig(zero_evidence_class=0)))
    parsed = load_queries(json.dumps(queries), model)
    lib = [verify_itr(model, parsed[0]["rules"], 5), verify_itr(model, parsed[1]["rules"], 5),
           verify_fmo(model, parsed[2]["phi"], parsed[2]["feature"], True, 5)]
    for got, want in zip(report, lib):
        assert got["holds"] == want.holds
        assert got["status"] == want.status
        assert got["counterexamples"] == want.counterexamples
    assert code == (0 if all(v.holds for v in lib) else 2)


def test_encode_counts_and_dimacs(tmp_path, asia, capsys):
    mdd, _ = pipeline(tmp_path, asia, "--outcome", "xray", "--zero-evidence-class", "0")
    cnf = tmp_path / "m.cnf"
    capsys.readouterr()
    assert main(["encode", str(mdd), "-o", str(tmp_path / "e2.json"), "--dimacs", str(cnf)]) == 0
    counts = json.loads(capsys.readouterr().out)
    assert main(["encode", str(mdd), "-o", str(tmp_path / "e3.json")]) == 0
    assert json.loads(capsys.readouterr().out)["clauses"] == counts["clauses"]
    from bnverify.sat import from_dimacs
    parsed = from_dimacs(cnf.read_text())
    assert (parsed.num_vars, len(parsed)) == (counts["literals"], counts["clauses"])
    assert main(["encode", str(tmp_path / "nope.json")]) == 1


def test_enumerate_and_export(tmp_path, asia, capsys):
    _, enc = pipeline(tmp_path, asia, "--outcome", "xray", "--zero-evidence-class", "0")
    capsys.readouterr()
    assert main(["enumerate", str(enc), "--limit", "1000"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["complete"] and out["count"] == 2 ** 7
    assert main(["enumerate", str(enc), "--class", "1", "--limit", "1"]) == 0
    assert not json.loads(capsys.readouterr().out)["complete"]

    q = tmp_path / "q.json"
    q.write_text(json.dumps({"type": "fmo", "feature": "lung"}))
    assert main(["export-dimacs", str(enc), "--query", str(q), "-o", str(tmp_path / "a")]) == 1
    assert main(["export-dimacs", str(enc), "--class", "1", "-o", str(tmp_path / "b.cnf")]) == 0
    q.write_text(json.dumps({"type": "itr", "rules": [], "class": 1}))
    assert main(["export-dimacs", str(enc), "--query", str(q), "-o", str(tmp_path / "c.cnf")]) == 0


def test_bench(tmp_path, capsys):
    nets = tmp_path / "nets"
    nets.mkdir()
    (nets / "asia.bif").write_text(serialize_network(bundled_network("asia", "xray"), "bif"))
    (nets / "broken.bif").write_text("probability ( {")
    out = tmp_path / "bench.csv"
    argv = ["bench", str(nets), "--repeats", "1", "--queries-per-net", "4", "--seed", "5",
            "-o", str(out)]
    assert main(argv) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["network"] for r in rows] == ["asia", "broken"]
    assert rows[0]["outcome"] == "xray" and rows[0]["mdd_nodes"] == "3" and not rows[0]["error"]
    assert rows[1]["error"] and rows[1]["seed"] == "5"

    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["bench", str(empty), "-o", str(tmp_path / "e.csv")]) == 0
    assert (tmp_path / "e.csv").read_text().count("\n") == 1


def test_bench_query_set_is_seeded():
    domains = dict(encode(compile_network(make_corpus(2, 1)[0])).domains)

    def draw(seed):
        child = np.random.SeedSequence(seed).spawn(3)[2]
        return bench_queries(domains, np.random.default_rng(child), 10)

    assert draw(7) == draw(7)
    assert draw(7) != draw(8)
