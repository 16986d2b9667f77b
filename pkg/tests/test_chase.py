"""Chase steps, full runs and replay."""

import random
from pathlib import Path

import pytest

import randgen
from distcheck.chase import (
    ChaseState, Mode, NodeSemantics, applicable, apply_step, compile_rules, fresh_node, replay, run_chase,
    step_budget,
)
from distcheck.core import DistributedInstance, Fact, NodeVar, Valuation, Var, model_check
from distcheck.errors import NotApplicable, NotDataFull, StepBudgetExceeded
from distcheck.parser import parse_constraints

FIX = Path(__file__).parent / "fixtures"
x, y = Var("x"), Var("y")
k, l, m = NodeVar("k"), NodeVar("l"), NodeVar("m")


def one(text):
    return parse_constraints(text)[0]


@pytest.fixture
def shipped():
    # R(a)@1, S(a,b)@2 with a=1, b=2
    ra, sab = Fact.of("R", 1), Fact.of("S", 1, 2)
    d = DistributedInstance([ra, sab], {1: [ra], 2: [sab]})
    c = one("R(x)@k, S(x,y)@l -> R(x)@m, S(x,y)@m.")
    w = Valuation({x: 1, y: 2, k: 1, l: 2, m: 3})
    return c, d, w


def test_worked_step(shipped):
    c, d, w = shipped
    s = ChaseState.initial(d)
    assert fresh_node(s) == 3
    assert applicable(c, w, s)
    s2 = apply_step(c, w, s)
    assert s2.instance.at(3) == {Fact.of("R", 1), Fact.of("S", 1, 2)}
    assert s2.instance.global_facts == d.global_facts
    # the head is now present at node 3, whatever fresh node is chosen
    assert not applicable(c, Valuation({x: 1, y: 2, k: 1, l: 2, m: 4}), s2)
    with pytest.raises(NotApplicable):
        apply_step(c, Valuation({x: 1, y: 2, k: 1, l: 2, m: 4}), s2)


def test_fresh_node_must_be_fresh(shipped):
    c, d, _ = shipped
    s = ChaseState.initial(d)
    assert not applicable(c, Valuation({x: 1, y: 2, k: 1, l: 2, m: 1}), s)


def test_global_head_adds_one_fact():
    d = DistributedInstance([Fact.of("R", 1)], {0: [Fact.of("R", 1)]})
    s = apply_step(one("R(x) -> T(x)."), Valuation({x: 1}), ChaseState.initial(d))
    assert s.instance.global_facts == {Fact.of("R", 1), Fact.of("T", 1)}
    assert s.instance.local == d.local


def test_non_data_full_rejected():
    d = DistributedInstance([Fact.of("R", 1)])
    with pytest.raises(NotDataFull):
        apply_step(one("R(x) -> S(x, z)@k."), Valuation({x: 1, k: 0}), ChaseState.initial(d))


def test_range_chase_colocates_messages():
    sigma = parse_constraints((FIX / "range_sigma.dc").read_text())
    facts = [Fact.of("Message", 1, 9), Fact.of("Message", 2, 9), Fact.of("Range", 0, 5)]
    tr = run_chase(DistributedInstance(facts), sigma)
    assert tr.success
    assert model_check(tr.final, sigma).ok
    assert any(set(facts) <= tr.final.at(n) for n in tr.final.nodes)


def test_empty_sigma():
    d = DistributedInstance([Fact.of("R", 1)])
    tr = run_chase(d, [])
    assert tr.success and tr.steps == () and tr.final == d


def test_strict_value_egd_fails():
    sigma = parse_constraints((FIX / "degds.dc").read_text())[:1]
    tr = run_chase(DistributedInstance([Fact.of("Sal", 7, 1), Fact.of("Sal", 7, 2)]), sigma)
    assert tr.failed and tr.steps[-1].failure


def test_identify_mode_merges_values():
    sal = parse_constraints((FIX / "degds.dc").read_text())[:1]
    d = DistributedInstance([Fact.of("Sal", 7, 1), Fact.of("Sal", 7, 2)])
    tr = run_chase(d, sal, Mode.IDENTIFY, protected=())
    assert tr.success and tr.final.global_facts == {Fact.of("Sal", 7, 1)}
    assert tr.value(2) == 1
    # protected constants cannot be merged with each other
    assert run_chase(d, sal, Mode.IDENTIFY, protected={1, 2}).failed


def test_node_merge_keeps_ids_fresh():
    same = one("R(x)@k, R(x)@m -> k = m.")
    r = Fact.of("R", 0)
    d = DistributedInstance([r], {0: [], 1: [r], 2: [r]})
    s = apply_step(same, Valuation({x: 0, k: 1, m: 2}), ChaseState.initial(d))
    assert s.instance.nodes == [0, 1] and s.find(2) == 1
    assert fresh_node(s) == 3
    assert apply_step(same, Valuation({x: 0, k: 1, m: 2}), ChaseState.initial(d),
                      node_semantics=NodeSemantics.FAIL).failed


def test_fresh_node_ids():
    assert fresh_node(ChaseState.initial(DistributedInstance())) == 0
    assert fresh_node(ChaseState.initial(DistributedInstance([], {0: [], 1: [], 2: []}))) == 3


def test_budget_enforced():
    sigma = parse_constraints((FIX / "range_sigma.dc").read_text())
    d = DistributedInstance([Fact.of("Message", 1, 9), Fact.of("Range", 0, 5)])
    with pytest.raises(StepBudgetExceeded):
        run_chase(d, sigma, budget=1)


def test_budget_env_override(monkeypatch):
    sigma = parse_constraints((FIX / "range_sigma.dc").read_text())
    d = DistributedInstance([Fact.of("Message", 1, 9)])
    monkeypatch.setenv("DISTCHECK_STEP_BUDGET", "7")
    assert step_budget(compile_rules(sigma), d, dict(sigma.schema), set()) == 7


def test_deterministic_and_replayable():
    rng = random.Random(3)
    schema = {"P": 1, "R": 2}
    for _ in range(150):
        sigma = randgen.rand_sigma(rng, schema, rng.randint(1, 3), p_egd=0.3)
        d = randgen.rand_instance(rng, schema, [0, 1, 2])
        a, b = run_chase(d, sigma), run_chase(d, sigma)
        assert a.steps == b.steps and a.final == b.final
        state = replay(a)
        assert state.failed == a.failed
        if a.success:
            assert state.instance == a.final
            assert model_check(a.final, sigma).ok
