"""Instances, valuations, satisfaction and head normalisation."""

import itertools
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from distcheck.core import (
    DistributedInstance, Domain, Fact, NodeVar, Valuation, Var, alpha_equivalent, find_valuations,
    is_data_full, model_check, normalize_heads, satisfies,
)
from distcheck.errors import DomainMismatch, NotDataFull, SubsetViolation
from distcheck.parser import parse_constraints, parse_instance

FIX = Path(__file__).parent / "fixtures"
x, y = Var("x"), Var("y")
k = NodeVar("k")


def one(text):
    return parse_constraints(text)[0]


@pytest.fixture
def skip_inst():
    # a=1, b=2, c=3, d=4
    return parse_instance((FIX / "skipped_fact.dinst").read_text())


def test_skipped_fact_shape(skip_inst):
    assert skip_inst.skipped() == {Fact.of("S", 4)}
    assert skip_inst.nodes == [1, 2]
    assert skip_inst.at(7) == frozenset()


def test_find_valuations_local_atom(skip_inst):
    body = one("R(x, y)@k -> T(x).").body
    assert list(find_valuations(body, skip_inst)) == [Valuation({x: 1, y: 2, k: 1})]


def test_find_valuations_skipped_fact_unmatched(skip_inst):
    body = one("S(x)@k -> T(x).").body
    got = [dict(v) for v in find_valuations(body, skip_inst)]
    assert got == [{x: 2, k: 1}, {x: 2, k: 2}, {x: 3, k: 2}]


def test_find_valuations_empty_body(skip_inst):
    assert list(find_valuations([], skip_inst)) == [Valuation()]


def test_meeting_facts_satisfy():
    d = DistributedInstance([Fact.of("R", 1, 2), Fact.of("S", 1, 2)],
                            {1: [Fact.of("R", 1, 2), Fact.of("S", 1, 2)]})
    assert satisfies(d, one("R(x,y), S(x,y) -> R(x,y)@k, S(x,y)@k."))
    split = DistributedInstance(d.global_facts, {1: [Fact.of("R", 1, 2)], 2: [Fact.of("S", 1, 2)]})
    assert not satisfies(split, one("R(x,y), S(x,y) -> R(x,y)@k, S(x,y)@k."))


def test_vacuous_body(skip_inst):
    assert satisfies(skip_inst, one("R(x, y), x < x -> T(x)."))


def test_non_skipping_violation(skip_inst):
    tau = one("S(x) -> S(x)@k.")
    assert not satisfies(skip_inst, tau)
    rep = model_check(skip_inst, [tau])
    assert len(rep) == 1 and dict(rep[0].valuation) == {x: 4}
    assert model_check(skip_inst, []).ok


def test_egd_satisfaction():
    sal = one("Sal(t, s), Sal(t, s2) -> s = s2.")
    assert not satisfies(DistributedInstance([Fact.of("Sal", 7, 1), Fact.of("Sal", 7, 2)]), sal)
    assert satisfies(DistributedInstance([Fact.of("Sal", 7, 1), Fact.of("Sal", 8, 2)]), sal)
    same = one("R(x)@k, R(x)@m -> k = m.")
    r = Fact.of("R", 0)
    assert satisfies(DistributedInstance([r], {0: [r], 1: []}), same)
    assert not satisfies(DistributedInstance([r], {0: [r], 1: [r]}), same)


def test_data_full():
    assert is_data_full(one("Emp(x,y), Sal(y,z) -> Emp(x,y)@k, Sal(y,z)@k."))
    assert not is_data_full(one("Emp(x,y), Sal(y,z) -> Emp(x,y2)@k, Sal(y2,z)@k."))
    assert is_data_full(one("R(x, y) -> T()@k."))


def test_normalize_splits_by_head_node():
    c = one("R(x)@m, S(x)@m -> R(x)@k, S(x)@k, T(x).")
    pieces = normalize_heads(c)
    assert len(pieces) == 2
    assert alpha_equivalent(pieces[0], one("R(x)@m, S(x)@m -> R(x)@k, S(x)@k."))
    assert alpha_equivalent(pieces[1], one("R(x)@m, S(x)@m -> T(x)."))
    single = one("R(x) -> R(x)@k.")
    assert normalize_heads(single) == [single]
    two = normalize_heads(one("R(x) -> R(x)@k, S(x)@l."))
    assert [len({a.node for a in p.head}) for p in two] == [1, 1]
    with pytest.raises(NotDataFull):
        normalize_heads(one("R(x) -> S(x, z)@k."))


def _all_instances(universe, max_nodes):
    for g in range(len(universe) + 1):
        for glob in itertools.combinations(universe, g):
            subsets = [c for n in range(len(glob) + 1) for c in itertools.combinations(glob, n)]
            for n in range(max_nodes + 1):
                for locs in itertools.product(subsets, repeat=n):
                    yield DistributedInstance(glob, dict(enumerate(locs)))


def test_normalize_is_equivalent_exhaustively():
    c = one("B(x) -> R(x)@k, S(x)@k, T(x).")
    pieces = normalize_heads(c)
    universe = [Fact.of(r, 0) for r in "BRST"]
    for d in _all_instances(universe, 2):
        assert satisfies(d, c) == all(satisfies(d, p) for p in pieces)


def test_subset_invariant():
    with pytest.raises(SubsetViolation):
        DistributedInstance([], {0: [Fact.of("R", 1)]})
    d = DistributedInstance([], {0: [Fact.of("R", 1)]}, complete=True)
    assert d.global_facts == {Fact.of("R", 1)}


def test_domain_membership():
    Domain.RAT.check(Fact.of("R", "1/2").args[0])
    with pytest.raises(DomainMismatch):
        Domain.INT.check(Fact.of("R", "1/2").args[0])
    with pytest.raises(DomainMismatch):
        Domain.NAT.check(-1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("RS"), st.integers(0, 2)), max_size=4),
       st.lists(st.sets(st.integers(0, 3)), max_size=3))
def test_model_check_agrees_with_satisfies(facts, placement):
    glob = sorted({Fact.of(r, v) for r, v in facts})
    local = {i: [glob[j] for j in sel if j < len(glob)] for i, sel in enumerate(placement)}
    d = DistributedInstance(glob, local)
    sigma = parse_constraints("R(x) -> R(x)@k. R(x)@k, S(x) -> S(x)@k. S(x)@k, S(y)@m -> k = m.")
    rep = model_check(d, sigma)
    assert {v.index for v in rep} == {i for i, c in enumerate(sigma) if not satisfies(d, c)}
