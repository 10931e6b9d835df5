import itertools

import pytest

from bnverify import CompilerConfig, assert_class, compile_network, encode, encode_ordinal_less
from bnverify.encoder import (
    Cnf,
    EncodedModel,
    EncodingError,
    Role,
    VariableRegistry,
    exactly_one,
    instantiate_copy,
)
from bnverify.io import bundled_network
from bnverify.mdd import Node, build, reduce
from bnverify.sat import enumerate_models, solve

from conftest import make_corpus, path_check


def single_binary():
    return reduce(build(["x"], {2: Node(0, (0, 1))}, 2, {"x": 2}))


# root=1, edge0=2, edge1=3, x=0 -> 4, x=1 -> 5, T=6, F=7
SINGLE_BINARY_CLAUSES = [
    (1,),
    (-1, 2, 3),
    (-2, 1), (-2, 7), (-2, 4), (-7, -4, -1, 2), (-1, -4, 2),
    (-3, 1), (-3, 6), (-3, 5), (-6, -5, -1, 3), (-1, -5, 3),
    (-7, 2), (-6, 3),
    (-4, 2), (-5, 3),
    (4, 5), (-4, -5),
    (-6, -7),
]


def test_single_binary_clause_list():
    model = encode(single_binary())
    assert model.cnf.num_vars == 7
    assert model.cnf.clauses == SINGLE_BINARY_CLAUSES
    reg = model.registry
    assert reg[Role("root")] == 1
    assert reg.value("x", 1) == 5
    assert (reg.sink(1), reg.sink(0)) == (6, 7)


def test_constant_true_diagram():
    mdd = reduce(build(["x"], {2: Node(0, (1, 1, 1))}, 2, {"x": 3}))
    model = encode(mdd)
    assert solve(Cnf(model.cnf.clauses + assert_class(model, 1), model.cnf.num_vars)).sat
    assert not solve(Cnf(model.cnf.clauses + assert_class(model, 0), model.cnf.num_vars)).sat
    models = enumerate_models(model.cnf, model.value_literals(), 10)
    assert len(models) == 3 and models.complete


def test_assert_class_units():
    model = encode(single_binary())
    assert assert_class(model, 1) == [(6,), (-7,)]
    assert assert_class(model, 0) == [(-6,), (7,)]
    with pytest.raises(ValueError):
        assert_class(model, 2)


def test_path_consistency_and_sink(small_corpus):
    for net in small_corpus:
        mdd = compile_network(net)
        good, total = path_check(mdd, encode(mdd), net)
        assert good == total


def test_model_count_is_input_space(small_corpus):
    for net in small_corpus[:10]:
        model = encode(compile_network(net))
        total = 1
        for d in model.domains.values():
            total *= d
        enum = enumerate_models(model.cnf, model.value_literals(), total + 1)
        assert len(enum) == total and enum.complete


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_ordinal_less_truth_table(d):
    reg = VariableRegistry()
    a = [reg.add(Role("value", ("a", j))) for j in range(d)]
    b = [reg.add(Role("value", ("b", j))) for j in range(d)]
    clauses, g = encode_ordinal_less(a, b, reg)
    clauses += exactly_one(a) + exactly_one(b)
    for j, k in itertools.product(range(d), repeat=2):
        for gv in (g, -g):
            res = solve(Cnf(clauses + [(a[j],), (b[k],), (gv,)], reg.num_vars))
            assert res.sat == ((gv > 0) == (j < k))


def test_ordinal_less_rejects_mismatch():
    reg = VariableRegistry()
    with pytest.raises(EncodingError):
        encode_ordinal_less([reg.aux("a")], [], reg)


def test_copies_are_disjoint_and_equisatisfiable():
    model = encode(compile_network(make_corpus(3, 1)[0]))
    n = model.cnf.num_vars
    c1 = instantiate_copy(model, "M1", offset=0)
    c2 = instantiate_copy(model, "M2", offset=n)
    lits1 = {abs(l) for c in c1.cnf.clauses for l in c}
    lits2 = {abs(l) for c in c2.cnf.clauses for l in c}
    assert not lits1 & lits2
    assert max(lits2) <= 2 * n
    assert len(enumerate_models(c2.cnf, c2.value_literals("M2"), 10 ** 6)) == \
        len(enumerate_models(model.cnf, model.value_literals(), 10 ** 6))
    with pytest.raises(EncodingError):
        instantiate_copy(c1, "M1")


def test_serialization_roundtrip():
    model = encode(compile_network(bundled_network("asia", "xray"),
                                   CompilerConfig(zero_evidence_class=0)))
    back = EncodedModel.from_json(model.to_json())
    assert back.cnf.clauses == model.cnf.clauses
    assert list(back.domains) == list(model.domains)
    assert back.to_json() == model.to_json()
    assert back.registry.value("lung", 1) == model.registry.value("lung", 1)


def test_size_bound():
    models = [encode(compile_network(n)) for n in make_corpus(4, 40)]
    models.append(encode(compile_network(bundled_network("child", "Sick"),
                                         CompilerConfig(zero_evidence_class=0))))
    for model in models:
        kinds = {}
        for _, role in model.registry.items():
            kinds[role.kind] = kinds.get(role.kind, 0) + 1
        size = sum(kinds.values())  # nodes + edges + values + sinks
        assert len(model.cnf) <= 12 * size
