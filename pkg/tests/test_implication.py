"""The decision procedure and its building blocks."""

import itertools
import random
from fractions import Fraction
from pathlib import Path

import pytest

import randgen
from distcheck.core import DistributedInstance, Domain, Fact, NodeVar, Valuation, Var, model_check, satisfies
from distcheck.errors import DomainMismatch, FragmentError
from distcheck.implication import (
    build_domain, canonical_instances, decide_implication, head_extension_exists, reduced_instances,
)
from distcheck.parser import parse_constraints
from distcheck.verify import brute_force_refute

FIX = Path(__file__).parent / "fixtures"
F = Fraction


def load(name):
    return parse_constraints((FIX / name).read_text())


def one(text):
    return parse_constraints(text)[0]


TWO_CONSTS = one("R(x, y), 0 <= x, y < 10 -> S(x).")


def test_domain_rat():
    assert build_domain([], TWO_CONSTS, Domain.RAT) == [-2, -1, 0, F(10, 3), F(20, 3), 10, 11, 12]


def test_domain_int():
    assert build_domain([], TWO_CONSTS, Domain.INT) == [-2, -1, 0, 1, 2, 10, 11, 12]


def test_domain_nat_clips_below_zero():
    tau = one("R(x, y, z), 1 <= x -> S(x).")
    assert build_domain([], tau, Domain.NAT) == [0, 1, 2, 3, 4]


def test_domain_without_constants():
    assert build_domain([], one("R(x) -> S(x)."), Domain.RAT) == [0]
    with pytest.raises(DomainMismatch):
        build_domain([], one("R(x), x < 1/2 -> S(x)."), Domain.INT)


def test_canonical_count_one_variable():
    assert len(list(canonical_instances([], one("R(x) -> S(x)@k.")))) == 1


def test_canonical_count_range_tau():
    sigma, tau = load("range_sigma.dc"), load("range_tau.dc")[0]
    names = ["l", "s1", "s2", "u", "r"]
    want = sum(1 for v in itertools.product(range(5), repeat=5)
               if (lambda w: w["l"] <= w["s1"] <= w["u"] and w["l"] <= w["s2"] <= w["u"])(dict(zip(names, v))))
    assert len(list(canonical_instances(sigma, tau))) == want
    reduced = list(reduced_instances(sigma, tau))
    assert 0 < len(reduced) < want


def test_unsatisfiable_body_holds():
    v = decide_implication([], one("R(x), x < x -> S(x)."))
    assert v.holds and v.stats.canonical_dbs == 0


def test_head_extension():
    tau = one("Emp(x,y), Sal(y,z) -> Emp(x,y2)@k, Sal(y2,z)@k.")
    # a=1, t'=20, s=300
    d = DistributedInstance([Fact.of("Emp", 1, 20), Fact.of("Sal", 20, 300)],
                            {1: [Fact.of("Emp", 1, 20), Fact.of("Sal", 20, 300)]})
    v = Valuation({Var("x"): 1, Var("y"): 20, Var("z"): 300})
    ext = head_extension_exists(v, tau, d)
    assert ext[Var("y2")] == 20 and ext[NodeVar("k")] == 1
    assert head_extension_exists(v, tau, DistributedInstance()) is None
    full = one("R(x) -> R(x).")
    w = Valuation({Var("x"): 0})
    assert head_extension_exists(w, full, DistributedInstance([Fact.of("R", 0)])) == w


def test_range_partition():
    sigma, partial, tau = load("range_sigma.dc"), load("range_sigma_partial.dc"), load("range_tau.dc")
    assert decide_implication(sigma, tau).holds
    r = decide_implication(partial, tau)
    assert not r.holds
    assert model_check(r.countermodel, partial).ok and not satisfies(r.countermodel, tau[0])


def test_copartition():
    assert decide_implication(load("copart_sigma.dc"), load("copart_tau.dc")).holds


def test_hash_partition_meets():
    tau = one("Emp(n,d), Emp(n2,d) -> Emp(n,d)@k, Emp(n2,d)@k.")
    assert decide_implication(load("hash_sigma.dc"), tau).holds
    assert not decide_implication(load("hash_sigma.dc")[:1], tau).holds


def test_non_data_full_is_rejected():
    with pytest.raises(FragmentError, match="y2"):
        decide_implication(parse_constraints("Emp(x,y), Sal(y,z) -> Emp(x,y2)@k, Sal(y2,z)@k."),
                           one("Emp(x,y) -> Emp(x,y)@k."))


def test_single_mode_needs_comparison_free():
    with pytest.raises(ValueError):
        decide_implication(load("range_sigma.dc"), load("range_tau.dc"), mode="single")


def test_stats_and_modes():
    sigma, tau = load("copart_sigma.dc"), load("copart_tau.dc")
    v = decide_implication(sigma, tau)
    assert v.stats.mode == "single" and v.stats.canonical_dbs == 1
    e = decide_implication(sigma, tau, mode="enumerate", symmetry=False)
    assert e.holds and e.stats.canonical_dbs == len(list(canonical_instances(sigma, tau)))


def test_parallel_matches_serial():
    sigma, partial, tau = load("range_sigma.dc"), load("range_sigma_partial.dc"), load("range_tau.dc")
    for s in (sigma, partial):
        a = decide_implication(s, tau)
        b = decide_implication(s, tau, jobs=2)
        assert a.holds == b.holds and a.countermodel == b.countermodel and a.stats == b.stats


def test_symmetry_reduction_is_sound():
    rng = random.Random(21)
    schema = {"R": 2, "S": 1}
    for i in range(80):
        sigma = randgen.rand_sigma(rng, schema, rng.randint(1, 3), comparisons=True, consts=(0, 2))
        tau = randgen.rand_tau(rng, schema, comparisons=True, consts=(0, 2))
        dom = (Domain.NAT, Domain.INT, Domain.RAT)[i % 3]
        assert decide_implication(sigma, tau, dom).holds == \
            decide_implication(sigma, tau, dom, symmetry=False).holds


def test_refutations_are_real():
    rng = random.Random(22)
    schema = {"R": 2, "S": 1}
    for _ in range(60):
        sigma = randgen.rand_sigma(rng, schema, rng.randint(1, 3), comparisons=True, consts=(1,))
        tau = randgen.rand_tau(rng, schema, comparisons=True, consts=(1,))
        v = decide_implication(sigma, tau)
        if v.holds:
            assert brute_force_refute(sigma, tau, [0, 1, 2], 2, max_global_facts=2) is None
        else:
            assert model_check(v.countermodel, sigma).ok and not satisfies(v.countermodel, tau)
