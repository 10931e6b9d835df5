import numpy as np
import pytest

from bnverify import Rule, RuleSet, classify, compile_network, encode, verify_fmo, verify_itr
from bnverify.encoder import Role
from bnverify.mdd import Node, build, reduce
from bnverify.synthetic import random_fmo_query, random_ruleset
from bnverify.verifier import (
    DecodeError,
    QueryError,
    decode_model,
    load_queries,
    render_text,
)

from conftest import fmo_oracle, itr_oracle, oracle_decisions


def staircase(values=(0, 1, 0, 1)):
    """One feature ``x`` whose class per value is ``values``."""
    mdd = reduce(build(["x"], {2: Node(0, tuple(values))}, 2, {"x": len(values)}))
    return encode(mdd)


def test_itr_holds_and_fails():
    model = staircase((0, 0, 1, 1))
    assert verify_itr(model, RuleSet((Rule("x", ">=", 2),), 1)).holds
    v = verify_itr(model, RuleSet((Rule("x", ">=", 1),), 1))
    assert not v.holds and v.status == {"itr": "SAT"}
    assert v.counterexamples == [{"x": 1}] and v.complete


def test_itr_all_senses():
    model = staircase((0, 1, 1, 0))
    expect = {(">=", 1): False, ("<=", 2): False, ("=", 1): True, (">", 0): False,
              ("<", 3): False}
    for (sense, t), holds in expect.items():
        assert verify_itr(model, RuleSet((Rule("x", sense, t),), 1)).holds is holds
    assert verify_itr(model, RuleSet((Rule("x", "=", 3),), 0)).holds


def test_itr_empty_box_is_vacuous():
    v = verify_itr(staircase(), RuleSet((Rule("x", "<", 0),), 1))
    assert v.holds and v.vacuous and v.warnings


def test_itr_counterexample_cap():
    model = staircase((0, 0, 0, 0))
    v = verify_itr(model, RuleSet((), 1), max_counterexamples=2)
    assert len(v.counterexamples) == 2 and not v.complete
    v = verify_itr(model, RuleSet((), 1), max_counterexamples=0)
    assert not v.holds and v.counterexamples == []


def test_fmo_staircase():
    v = verify_fmo(staircase((0, 1, 0, 1)), {}, "x")
    assert not v.holds
    assert v.status == {"LHL": "SAT", "HLH": "SAT"}
    pats = {c["pattern"]: [a["x"] for a in c["assignments"]] for c in v.counterexamples}
    assert pats["LHL"] == [0, 1, 2]
    assert verify_fmo(staircase((0, 0, 1, 1)), {}, "x").holds
    assert verify_fmo(staircase((1, 1, 0, 0)), {}, "x").holds


def test_fmo_binary_feature_is_vacuous():
    v = verify_fmo(staircase((0, 1)), {}, "x")
    assert v.holds and v.vacuous


def test_fmo_rejects_bad_queries():
    model = staircase()
    with pytest.raises(QueryError):
        verify_fmo(model, {"x": 0}, "x")
    with pytest.raises(QueryError):
        verify_fmo(model, {}, "nope")


def test_against_brute_force(small_corpus):
    rng = np.random.default_rng(17)
    for net in small_corpus:
        decisions = oracle_decisions(net)
        model = encode(compile_network(net))
        for _ in range(4):
            rules = random_ruleset(rng, dict(model.domains))
            v = verify_itr(model, rules, max_counterexamples=3)
            assert v.holds == itr_oracle(net, decisions, rules)
            for cex in v.counterexamples:
                assert classify(net, cex) == 1 - rules.outcome_class
                for r in rules.rules:
                    assert cex[r.feature] in r.allowed(model.domains[r.feature])
            phi, feature = random_fmo_query(rng, dict(model.domains))
            for tie_free in (True, False):
                v = verify_fmo(model, phi, feature, tie_free, max_counterexamples=2)
                want = fmo_oracle(net, decisions, phi, feature, tie_free)
                if not v.vacuous:
                    assert {p: s == "SAT" for p, s in v.status.items()} == want


def test_tie_free_off_finds_superset(small_corpus):
    rng = np.random.default_rng(23)
    for net in small_corpus:
        model = encode(compile_network(net))
        phi, feature = random_fmo_query(rng, dict(model.domains))
        on = verify_fmo(model, phi, feature, True, 0)
        off = verify_fmo(model, phi, feature, False, 0)
        assert off.holds <= on.holds


def test_decode_errors():
    model = staircase()
    x0, x1 = model.registry.value("x", 0), model.registry.value("x", 1)
    assert decode_model([x0, -x1], model.registry) == {"x": 0}
    with pytest.raises(DecodeError):
        decode_model([x0, x1], model.registry)
    with pytest.raises(DecodeError):
        decode_model([-x0], model.registry, model.domains)
    assert model.registry[Role("root")] == 1


def test_query_file_parsing():
    model = staircase()
    qs = load_queries('{"queries": [{"type": "itr", "rules": [{"feature": "x", "op": "ge", '
                      '"index": 1}], "class": 1}, {"type": "fmo", "feature": "x"}]}', model)
    assert qs[0]["rules"].rules[0].sense == ">="
    assert qs[1]["tie_free"] is True
    for bad in ('{"type": "itr"}', '[]', '{"type": "what"}', 'nope',
                '{"type": "itr", "rules": [{"feature": "y", "index": 0}], "class": 1}'):
        with pytest.raises(QueryError):
            load_queries(bad, model)
    with pytest.raises(QueryError):
        RuleSet((Rule("x", ">=", 1), Rule("x", "<=", 2)), 1)


def test_text_report():
    model = staircase((0, 1, 0, 1))
    text = render_text([verify_itr(model, RuleSet((Rule("x", ">=", 0),), 1)),
                        verify_fmo(model, {}, "x")])
    assert "VIOLATED" in text and "LHL" in text
