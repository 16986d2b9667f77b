"""Parsing and rendering of the three text formats."""

import random
from fractions import Fraction
from pathlib import Path

import pytest

import randgen
from distcheck.core import DistributedInstance, Domain, Egd, Fact, NodeVar, Tgd, Var, alpha_equivalent
from distcheck.errors import (
    ArityMismatch, DistcheckSyntaxError, DomainMismatch, MixedEqualityError, SafetyError, SubsetViolation,
    UnknownSymbol,
)
from distcheck.parser import parse_constraints, parse_facts, parse_instance, parse_query, render

FIX = Path(__file__).parent / "fixtures"


def test_range_rule():
    c = parse_constraints("Msg(s,r)@n, Range(l,u)@m, l <= s, s <= u -> Msg(s,r)@m.")[0]
    assert isinstance(c, Tgd)
    assert [a.rel for a in c.body] == ["Msg", "Range"]
    assert {a.node for a in c.body} == {NodeVar("n"), NodeVar("m")}
    assert len(c.comparisons) == 2
    assert c.head[0].node == NodeVar("m")


def test_degd_kinds():
    node = parse_constraints("R(x)@k, R(x)@m -> k = m.")[0]
    val = parse_constraints("Addr(x,y)@k, Addr(x,y2)@k -> y = y2.")[0]
    assert isinstance(node, Egd) and node.on_nodes
    assert isinstance(val, Egd) and not val.on_nodes and val.left == Var("y")


def test_constants_and_fractions():
    c = parse_constraints("R(x, 3/6), x < -2 -> S(x, 0).")[0]
    assert c.constants() == {Fraction(1, 2), -2, 0}
    with pytest.raises(DomainMismatch):
        parse_constraints("R(x, 1/2) -> S(x).", Domain.INT)
    with pytest.raises(DistcheckSyntaxError):
        parse_constraints("R(x, 1/0) -> S(x).")


def test_schema_line():
    cs = parse_constraints("schema R/2, S/1.\nR(x, y) -> S(x).")
    assert dict(cs.schema) == {"R": 2, "S": 1}
    with pytest.raises(UnknownSymbol):
        parse_constraints("schema R/2.\nR(x, y) -> S(x).")
    with pytest.raises(ArityMismatch):
        parse_constraints("R(x, y) -> R(x).")


def test_errors_carry_spans():
    with pytest.raises(DistcheckSyntaxError) as e:
        parse_constraints("R(x) -> S(x).\nR(x) -> S(x)", file="f.dc")
    assert e.value.span.file == "f.dc" and e.value.span.line == 2
    with pytest.raises(DistcheckSyntaxError) as e:
        parse_constraints("R(x) -> S(x) $")
    assert e.value.span.column == 14


def test_safety_and_mixing():
    with pytest.raises(SafetyError):
        parse_constraints("R(x), y < x -> S(x).")
    with pytest.raises(SafetyError):
        parse_constraints("R(x) -> x = y.")
    with pytest.raises(MixedEqualityError):
        parse_constraints("R(x)@k -> x = k.")
    with pytest.raises(MixedEqualityError):
        parse_constraints("R(k)@k -> S(k).")


def test_existential_data_variable_is_accepted():
    c = parse_constraints("Emp(x,y), Sal(y,z) -> Emp(x,y2)@k, Sal(y2,z)@k.")[0]
    assert c.existential_data_vars() == [Var("y2")]


def test_skipped_fact_instance():
    d = parse_instance((FIX / "skipped_fact.dinst").read_text())
    assert d.skipped() == {Fact.of("S", 4)}
    assert d.at(2) == {Fact.of("S", 2), Fact.of("S", 3)}


def test_instance_subset_modes():
    text = "global { R(1) } local { 0 { R(1) S(2) } }"
    with pytest.raises(SubsetViolation):
        parse_instance(text, strict=True)
    assert Fact.of("S", 2) in parse_instance(text).global_facts


def test_empty_instance():
    d = parse_instance("global {} local {}")
    assert d == DistributedInstance()
    assert render(d) == "global {} local {}"


def test_queries():
    q = parse_query("H(n,s) <- Emp(n,t), Sal(t,s).")
    assert q.head.rel == "H" and [a.rel for a in q.body] == ["Emp", "Sal"]
    assert parse_query("H(x) <- R(x,x).").body[0].args == (Var("x"), Var("x"))
    with pytest.raises(SafetyError):
        parse_query("H(y) <- R(x,x).")
    with pytest.raises(DistcheckSyntaxError):
        parse_query("H(x) <- R(x)@k.")


def test_bare_facts():
    assert parse_facts("R(1, 2), S(3) S(4)") == {Fact.of("R", 1, 2), Fact.of("S", 3), Fact.of("S", 4)}


def test_copartition_round_trip():
    cs = parse_constraints((FIX / "copart_sigma.dc").read_text())
    assert len(cs) == 6
    back = parse_constraints(render(cs))
    assert back == cs
    assert all(alpha_equivalent(a, b) for a, b in zip(cs, back))


@pytest.mark.parametrize("path", sorted(FIX.glob("*.dc")), ids=lambda p: p.name)
def test_fixture_round_trip(path):
    cs = parse_constraints(path.read_text())
    assert parse_constraints(render(cs)) == cs


def test_generated_round_trip():
    rng = random.Random(11)
    schema = {"P": 1, "R": 2, "T": 0}
    for _ in range(300):
        cs = randgen.rand_sigma(rng, schema, rng.randint(1, 4), comparisons=True, consts=(0, -3, "5/2"))
        assert parse_constraints(render(cs)) == cs
        d = randgen.rand_instance(rng, schema, [0, Fraction(1, 3), -2])
        assert parse_instance(render(d)) == d
        q = randgen.rand_query(rng, {"P": 1, "R": 2})
        assert parse_query(render(q)) == q
